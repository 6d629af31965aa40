#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <random>

#include "fanns/errors.hpp"
#include "fanns/ivf.hpp"
#include "test_util.hpp"

using namespace fanns;

namespace {

struct Blobs {
  Corpus corpus;
  std::vector<std::uint32_t> labels;
};

Blobs gaussian_blobs(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<float> noise(0.0F, 1.0F);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<float> v(n * d);
  std::vector<double> attr(n);
  std::vector<std::uint32_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<std::uint32_t>(i % 4);
    for (std::size_t j = 0; j < d; ++j) {
      const float center = (j == labels[i]) ? 20.0F : 0.0F;
      v[i * d + j] = center + noise(gen);
    }
    attr[i] = uni(gen);
  }
  return {Corpus(d, std::move(v), std::move(attr), Metric::kL2, false), std::move(labels)};
}

struct Fixture {
  Corpus corpus;
  IvfIndex index;
  QuerySet queries;
};

const Fixture& shared_fixture() {
  static const Fixture f = [] {
    Corpus c = generate_synthetic({3000, 16, 31});
    IvfIndex idx = IvfIndex::build(c, {30, 42, 25});
    return Fixture{std::move(c), std::move(idx), testutil::random_queries(50, 16, 32)};
  }();
  return f;
}

}  // namespace

TEST(IvfBuild, ListsPartitionRows) {
  const Fixture& f = shared_fixture();
  std::vector<int> hits(f.corpus.size(), 0);
  for (std::size_t c = 0; c < f.index.n_clusters(); ++c) {
    for (const RowId id : f.index.list(c)) ++hits[id];
  }
  for (const int h : hits) EXPECT_EQ(h, 1);
}

TEST(IvfBuild, RowsSitInNearestCentroidList) {
  const Fixture& f = shared_fixture();
  for (std::size_t c = 0; c < f.index.n_clusters(); ++c) {
    for (const RowId id : f.index.list(c)) {
      const double own = testutil::reference_key(f.corpus.row(id), f.index.centroid(c), Metric::kCosine);
      for (std::size_t o = 0; o < f.index.n_clusters(); ++o) {
        EXPECT_LE(own, testutil::reference_key(f.corpus.row(id), f.index.centroid(o), Metric::kCosine) + 1e-6);
      }
    }
  }
}

TEST(IvfBuild, OneClusterPerRow) {
  const Corpus c = generate_synthetic({40, 4, 2});
  const IvfIndex idx = IvfIndex::build(c, {40, 1, 25});
  for (std::size_t j = 0; j < 40; ++j) EXPECT_EQ(idx.list(j).size(), 1u);
}

TEST(IvfBuild, SingleClusterIsBruteForce) {
  const Corpus c = generate_synthetic({500, 8, 3});
  const IvfIndex idx = IvfIndex::build(c, {1, 1, 25});
  ASSERT_EQ(idx.list(0).size(), 500u);
  const auto qs = testutil::random_queries(10, 8, 4);
  for (std::size_t q = 0; q < qs.size(); ++q) {
    EXPECT_EQ(idx.search(c, qs[q], 20, 1).neighbors, exact_knn(c, qs[q], 20));
  }
}

TEST(IvfBuild, RecoversSeparatedBlobs) {
  const Blobs b = gaussian_blobs(5000, 8, 5);
  const IvfIndex idx = IvfIndex::build(b.corpus, {4, 42, 25});
  std::size_t agree = 0;
  for (std::size_t c = 0; c < 4; ++c) {
    std::map<std::uint32_t, std::size_t> counts;
    for (const RowId id : idx.list(c)) ++counts[b.labels[id]];
    std::size_t top = 0;
    for (const auto& [label, n] : counts) top = std::max(top, n);
    agree += top;
  }
  EXPECT_GE(static_cast<double>(agree) / 5000.0, 0.95);
}

TEST(IvfBuild, DeterministicAndValidated) {
  const Corpus c = generate_synthetic({800, 8, 6});
  EXPECT_TRUE(IvfIndex::build(c, {16, 9, 25}) == IvfIndex::build(c, {16, 9, 25}));
  EXPECT_THROW(IvfIndex::build(c, {0, 9, 25}), InputError);
  EXPECT_THROW(IvfIndex::build(c, {801, 9, 25}), InputError);
}

TEST(IvfBuild, DuplicateRowsDoNotLeaveEmptyLists) {
  std::vector<float> v;
  for (int i = 0; i < 30; ++i) {
    v.push_back(static_cast<float>(i % 3));
    v.push_back(0.0F);
  }
  const Corpus c(2, v, std::vector<double>(30, 0.0), Metric::kL2, false);
  const IvfIndex idx = IvfIndex::build(c, {3, 1, 25});
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(idx.list(j).size(), 10u);
}

TEST(IvfSearch, ExhaustiveProbeMatchesOracleForEveryMetric) {
  for (const Metric m : {Metric::kL2, Metric::kInnerProduct, Metric::kCosine}) {
    const Corpus c = testutil::random_corpus(1200, 8, m, 7, false);
    const IvfIndex idx = IvfIndex::build(c, {12, 2, 25});
    const auto qs = testutil::random_queries(15, 8, 8);
    for (const double t : {0.0, 0.5, 0.97}) {
      const FilterMask mask = build_mask(c, t);
      for (std::size_t q = 0; q < qs.size(); ++q) {
        EXPECT_EQ(idx.search_prefilter(c, qs[q], 10, 12, mask).neighbors, exact_knn(c, qs[q], 10, &mask))
            << metric_name(m);
      }
    }
  }
}

TEST(IvfSearch, FullMaskMatchesUnfiltered) {
  const Fixture& f = shared_fixture();
  const FilterMask all(f.corpus.size(), true);
  for (std::size_t q = 0; q < f.queries.size(); ++q) {
    for (const std::uint32_t p : {1u, 5u, 30u}) {
      EXPECT_EQ(f.index.search_prefilter(f.corpus, f.queries[q], 10, p, all).neighbors,
                f.index.search(f.corpus, f.queries[q], 10, p).neighbors);
    }
  }
}

TEST(IvfSearch, PrefilterScansOnlyValidRowsOfProbedLists) {
  const Fixture& f = shared_fixture();
  const FilterMask m = build_mask(f.corpus, threshold_for_selectivity(f.corpus, 0.05));
  for (std::size_t q = 0; q < f.queries.size(); ++q) {
    std::uint64_t valid_in_probed = 0;
    for (const std::uint32_t c : f.index.probe_order(f.corpus, f.queries[q], 10)) {
      for (const RowId id : f.index.list(c)) valid_in_probed += m.test(id) ? 1 : 0;
    }
    const auto r = f.index.search_prefilter(f.corpus, f.queries[q], 10, 10, m);
    EXPECT_LE(r.telemetry.distance_evaluations, valid_in_probed + f.index.n_clusters());
    EXPECT_EQ(r.telemetry.centroid_evaluations, f.index.n_clusters());
    const auto u = f.index.search(f.corpus, f.queries[q], 10, 10);
    EXPECT_LE(r.telemetry.distance_evaluations, u.telemetry.distance_evaluations);
    for (const auto& n : r.neighbors) EXPECT_TRUE(m.test(n.id));
  }
}

TEST(IvfSearch, ProbeOrderIsNearestFirst) {
  const Fixture& f = shared_fixture();
  const auto order = f.index.probe_order(f.corpus, f.queries[0], 30);
  ASSERT_EQ(order.size(), 30u);
  for (std::size_t i = 1; i < order.size(); ++i) {
    EXPECT_LE(testutil::reference_key(f.queries[0], f.index.centroid(order[i - 1]), Metric::kCosine),
              testutil::reference_key(f.queries[0], f.index.centroid(order[i]), Metric::kCosine) + 1e-6);
  }
}

TEST(IvfSearch, RawAndRuntimeModes) {
  const Fixture& f = shared_fixture();
  const FilterMask m = build_mask(f.corpus, 0.7);
  for (std::size_t q = 0; q < 10; ++q) {
    const auto raw = f.index.search_raw(f.corpus, f.queries[q], 200, 5);
    EXPECT_EQ(raw.neighbors, f.index.search(f.corpus, f.queries[q], 200, 5).neighbors);
    const auto rt = f.index.search_runtime(f.corpus, f.queries[q], 10, 5, [&](RowId id) { return m.test(id); });
    EXPECT_EQ(rt.neighbors, f.index.search_prefilter(f.corpus, f.queries[q], 10, 5, m).neighbors);
    EXPECT_GT(rt.telemetry.predicate_invocations, 0u);
  }
}

TEST(IvfSearch, RejectsBadArguments) {
  const Fixture& f = shared_fixture();
  EXPECT_THROW(f.index.search(f.corpus, f.queries[0], 10, 0), InputError);
  EXPECT_THROW(f.index.search(f.corpus, f.queries[0], 10, 31), InputError);
  EXPECT_THROW(f.index.search(f.corpus, f.queries[0], 0, 3), InputError);
  EXPECT_FALSE(f.index.supports_dual_pool());
  EXPECT_THROW(f.index.search_dual_pool(f.corpus, f.queries[0], 10, 3, FilterMask(3000, true)), ConfigError);
}

TEST(IvfIo, RoundTrip) {
  testutil::TempDir dir;
  const Fixture& f = shared_fixture();
  f.index.save(dir / "i.fiv");
  const IvfIndex back = IvfIndex::load(dir / "i.fiv");
  EXPECT_TRUE(back == f.index);
  const auto any = load_index(dir / "i.fiv");
  EXPECT_EQ(any->kind(), IndexKind::kIvfFlat);
  EXPECT_EQ(any->search(f.corpus, f.queries[2], 10, 4).neighbors,
            f.index.search(f.corpus, f.queries[2], 10, 4).neighbors);
}

TEST(IvfIo, CorruptFilesRejected) {
  testutil::TempDir dir;
  const Fixture& f = shared_fixture();
  f.index.save(dir / "i.fiv");
  std::filesystem::resize_file(dir / "i.fiv", std::filesystem::file_size(dir / "i.fiv") - 4);
  EXPECT_THROW(IvfIndex::load(dir / "i.fiv"), FormatError);
  {
    std::ofstream out(dir / "x.idx", std::ios::binary);
    out << "ZZZZ1234";
  }
  EXPECT_THROW(load_index(dir / "x.idx"), FormatError);
}
