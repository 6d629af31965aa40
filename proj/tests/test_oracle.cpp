#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "fanns/errors.hpp"
#include "fanns/oracle.hpp"
#include "test_util.hpp"

using namespace fanns;

TEST(ExactKnn, QueryEqualToStoredRow) {
  const Corpus c = testutil::random_corpus(100, 8, Metric::kL2, 1, false);
  const auto gt = exact_knn(c, c.row(17), 1);
  ASSERT_EQ(gt.size(), 1u);
  EXPECT_EQ(gt[0], (Neighbor{17, 0.0F}));
}

TEST(ExactKnn, ShortMaskExhausts) {
  const Corpus c = testutil::random_corpus(100, 8, Metric::kL2, 1, false);
  FilterMask m(100);
  for (RowId id : {5u, 50u, 95u}) m.set(id);
  const auto gt = exact_knn(c, c.row(0), 10, &m);
  EXPECT_EQ(testutil::sorted_ids(gt), (std::vector<RowId>{5, 50, 95}));
  EXPECT_TRUE(exact_knn(c, c.row(0), 10, std::make_unique<FilterMask>(100).get()).empty());
}

TEST(ExactKnn, MatchesSelectionSortForEveryMetric) {
  for (const Metric m : {Metric::kL2, Metric::kInnerProduct, Metric::kCosine}) {
    const Corpus c = testutil::random_corpus(600, 12, m, 21, false);
    const auto qs = testutil::random_queries(10, 12, 22);
    const FilterMask half = build_mask(c, 0.5);
    for (std::size_t q = 0; q < qs.size(); ++q) {
      for (const std::size_t k : {1u, 10u, 600u}) {
        EXPECT_EQ(exact_knn(c, qs[q], k), testutil::selection_sort_knn(c, qs[q], k));
        EXPECT_EQ(exact_knn(c, qs[q], k, &half), testutil::selection_sort_knn(c, qs[q], k, &half));
      }
    }
  }
}

TEST(ExactKnn, TiesBreakByAscendingId) {
  // Four identical rows: equal keys everywhere.
  const Corpus c(2, {1, 1, 1, 1, 1, 1, 1, 1}, {0, 0, 0, 0}, Metric::kL2, false);
  const std::vector<float> q{0, 0};
  EXPECT_EQ(testutil::ids_of(exact_knn(c, q, 3)), (std::vector<RowId>{0, 1, 2}));
}

TEST(ExactKnn, OutputInvariants) {
  const Corpus c = testutil::random_corpus(2000, 16, Metric::kCosine, 5);
  const auto qs = testutil::random_queries(20, 16, 6);
  const FilterMask m = build_mask(c, threshold_for_selectivity(c, 0.01));
  for (std::size_t q = 0; q < qs.size(); ++q) {
    const auto gt = exact_knn(c, qs[q], 100, &m);
    EXPECT_EQ(gt.size(), std::min<std::size_t>(100, m.valid_count()));
    std::set<RowId> seen;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      EXPECT_TRUE(m.test(gt[i].id));
      EXPECT_TRUE(seen.insert(gt[i].id).second);
      if (i > 0) EXPECT_LE(gt[i - 1].distance, gt[i].distance);
      EXPECT_NEAR(gt[i].distance, testutil::reference_key(qs[q], c.row(gt[i].id), Metric::kCosine),
                  1e-6);
    }
  }
}

TEST(ExactKnn, RelaxingMaskNeverWorsensJthNeighbor) {
  const Corpus c = testutil::random_corpus(1500, 8, Metric::kL2, 8, false);
  const auto qs = testutil::random_queries(15, 8, 9);
  const std::vector<double> thresholds{0.95, 0.8, 0.5, 0.2, 0.0};
  for (std::size_t q = 0; q < qs.size(); ++q) {
    std::vector<Neighbor> prev;
    for (const double t : thresholds) {
      const FilterMask m = build_mask(c, t);
      const auto gt = exact_knn(c, qs[q], 50, &m);
      for (std::size_t j = 0; j < prev.size() && j < gt.size(); ++j) {
        EXPECT_LE(gt[j].distance, prev[j].distance);
      }
      prev = gt;
    }
  }
}

TEST(ExactKnn, DistanceEvaluationsCountValidRows) {
  const Corpus c = testutil::random_corpus(300, 4, Metric::kL2, 2, false);
  const FilterMask m = build_mask(c, 0.7);
  std::uint64_t evals = 0;
  const DistanceComputer dc(c, c.row(0));
  exact_knn(dc, 5, &m, &evals);
  EXPECT_EQ(evals, m.valid_count());
}

TEST(BatchGroundTruth, SingleQueryFullMaskEqualsExactKnn) {
  const Corpus c = testutil::random_corpus(500, 8, Metric::kCosine, 3);
  const auto qs = testutil::random_queries(1, 8, 4);
  const FilterMask all(500, true);
  const FilterMask* masks[] = {&all};
  const GroundTruth gt = batch_ground_truth(c, qs, 10, masks);
  ASSERT_EQ(gt.rows.size(), 1u);
  EXPECT_EQ(gt.row(0, 0), exact_knn(c, qs[0], 10));
}

TEST(BatchGroundTruth, MaskMajorLayout) {
  const Corpus c = testutil::random_corpus(400, 8, Metric::kL2, 3, false);
  const auto qs = testutil::random_queries(5, 8, 4);
  const FilterMask a = build_mask(c, 0.5), b = build_mask(c, 0.9);
  const FilterMask* masks[] = {&a, nullptr, &b};
  const GroundTruth gt = batch_ground_truth(c, qs, 7, masks);
  EXPECT_EQ(gt.num_queries, 5u);
  EXPECT_EQ(gt.k_max, 7u);
  for (std::size_t m = 0; m < 3; ++m) {
    for (std::size_t q = 0; q < 5; ++q) EXPECT_EQ(gt.row(m, q), exact_knn(c, qs[q], 7, masks[m]));
  }
}

TEST(GroundTruthIo, RoundTripAtScale) {
  testutil::TempDir dir;
  const Corpus c = generate_synthetic({20000, 16, 1});
  QuerySet qs;
  qs.dim = 16;
  for (RowId i = 0; i < 1000; ++i) qs.data.insert(qs.data.end(), c.row(i * 20).begin(), c.row(i * 20).end());
  std::vector<FilterMask> owned;
  for (const double t : {0.01, 0.03, 0.05, 0.1, 0.2, 0.5}) {
    owned.push_back(build_mask(c, threshold_for_selectivity(c, t)));
  }
  std::vector<const FilterMask*> masks;
  for (const auto& m : owned) masks.push_back(&m);
  masks.push_back(nullptr);
  const GroundTruth gt = batch_ground_truth(c, qs, 100, masks);
  ASSERT_EQ(gt.rows.size(), 7000u);
  for (std::size_t q = 0; q < 1000; ++q) {
    for (const auto& n : gt.row(0, q)) ASSERT_TRUE(owned[0].test(n.id));
  }
  save_ground_truth(gt, dir / "a.fgt");
  const GroundTruth back = load_ground_truth(dir / "a.fgt");
  EXPECT_EQ(back, gt);
  save_ground_truth(back, dir / "b.fgt");
  std::ifstream fa(dir / "a.fgt", std::ios::binary), fb(dir / "b.fgt", std::ios::binary);
  const std::string sa{std::istreambuf_iterator<char>(fa), {}};
  const std::string sb{std::istreambuf_iterator<char>(fb), {}};
  EXPECT_EQ(sa, sb);
}

TEST(GroundTruthIo, Malformed) {
  testutil::TempDir dir;
  GroundTruth gt;
  gt.k_max = 2;
  gt.num_queries = 1;
  gt.rows = {{{3, 0.5F}, {1, 0.75F}}};
  save_ground_truth(gt, dir / "g.fgt");
  EXPECT_EQ(std::filesystem::file_size(dir / "g.fgt"), 12u + 4 + 2 * 8);
  std::filesystem::resize_file(dir / "g.fgt", 18);
  EXPECT_THROW(load_ground_truth(dir / "g.fgt"), FormatError);
  {
    std::ofstream out(dir / "bad.fgt", std::ios::binary);
    out << "NOPE00000000";
  }
  EXPECT_THROW(load_ground_truth(dir / "bad.fgt"), FormatError);
  EXPECT_THROW(load_ground_truth(dir / "missing.fgt"), IoError);
}
