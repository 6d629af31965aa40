#include "fanns/ivf.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "binary_io.hpp"
#include "fanns/errors.hpp"
#include "fanns/kernels.hpp"
#include "fanns/random.hpp"

namespace fanns {
namespace {

constexpr double kShiftTolerance = 1e-4;

// k-means++: first center uniform, then proportional to squared distance to
// the nearest chosen center. Falls back to a uniform unchosen row when every
// remaining row coincides with a center.
std::vector<float> seed_centroids(const Corpus& corpus, std::size_t c, Rng& rng) {
  const std::size_t n = corpus.size();
  const std::size_t d = corpus.dim();
  std::vector<float> centroids;
  centroids.reserve(c * d);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(n, false);

  auto add = [&](RowId r) {
    chosen[r] = true;
    const auto row = corpus.row(r);
    centroids.insert(centroids.end(), row.begin(), row.end());
    for (std::size_t i = 0; i < n; ++i) {
      const double v = squared_l2(corpus.row_ptr(static_cast<RowId>(i)), row.data(), d);
      d2[i] = std::min(d2[i], v);
    }
  };

  add(static_cast<RowId>(rng.below(n)));
  while (centroids.size() < c * d) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    RowId pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double running = 0.0;
      pick = static_cast<RowId>(n - 1);
      for (std::size_t i = 0; i < n; ++i) {
        running += d2[i];
        if (d2[i] > 0.0 && running > target) {
          pick = static_cast<RowId>(i);
          break;
        }
      }
      while (chosen[pick]) --pick;  // only reachable through rounding at the tail
    } else {
      std::vector<RowId> open;
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) open.push_back(static_cast<RowId>(i));
      }
      pick = open[rng.below(open.size())];
    }
    add(pick);
  }
  return centroids;
}

void check_probe(std::uint32_t n_probe, std::size_t clusters) {
  if (n_probe == 0 || n_probe > clusters) {
    throw InputError("n_probe must be in [1, " + std::to_string(clusters) + "], got " +
                     std::to_string(n_probe));
  }
}

}  // namespace

IvfIndex IvfIndex::build(const Corpus& corpus, const IvfParams& params) {
  const std::size_t n = corpus.size();
  const std::size_t d = corpus.dim();
  const std::size_t c = params.n_clusters;
  if (c == 0 || c > n) {
    throw InputError("n_clusters must be in [1, " + std::to_string(n) + "], got " +
                     std::to_string(c));
  }
  const auto start = std::chrono::steady_clock::now();

  IvfIndex index;
  index.size_ = n;
  index.dim_ = d;
  index.params_ = params;

  Rng rng(params.seed);
  std::vector<float> centroids = seed_centroids(corpus, c, rng);

  std::vector<std::uint32_t> labels(n);
  std::vector<float> dist(n);
  std::vector<double> sums(c * d);
  std::vector<std::size_t> counts(c);
  for (std::uint32_t iter = 0; iter < params.max_iters; ++iter) {
    kernels::parallel::assign_nearest(corpus.vectors(), d, centroids, labels, dist);
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const float* row = corpus.row_ptr(static_cast<RowId>(i));
      double* acc = sums.data() + labels[i] * d;
      for (std::size_t j = 0; j < d; ++j) acc[j] += row[j];
      ++counts[labels[i]];
    }

    double max_shift = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      float* cen = centroids.data() + j * d;
      std::vector<float> next(d);
      if (counts[j] > 0) {
        for (std::size_t t = 0; t < d; ++t) {
          next[t] = static_cast<float>(sums[j * d + t] / static_cast<double>(counts[j]));
        }
      } else {
        const auto largest = static_cast<std::uint32_t>(
            std::max_element(counts.begin(), counts.end()) - counts.begin());
        std::size_t far = n;
        for (std::size_t i = 0; i < n; ++i) {
          if (labels[i] == largest && (far == n || dist[i] > dist[far])) far = i;
        }
        const auto row = corpus.row(static_cast<RowId>(far));
        std::copy(row.begin(), row.end(), next.begin());
        // Move the donor so a second empty cluster picks a different point.
        labels[far] = static_cast<std::uint32_t>(j);
        dist[far] = 0.0F;
        --counts[largest];
        counts[j] = 1;
      }
      max_shift = std::max<double>(max_shift, std::sqrt(squared_l2(cen, next.data(), d)));
      std::copy(next.begin(), next.end(), cen);
    }
    index.iterations_ = iter + 1;
    if (max_shift < kShiftTolerance) break;
  }

  index.centroids_ = std::move(centroids);
  index.finalize_norms();
  kernels::parallel::assign_by_metric(corpus, index.centroids_, index.centroid_norms_, labels);

  index.offsets_.assign(c + 1, 0);
  for (const std::uint32_t l : labels) ++index.offsets_[l + 1];
  std::partial_sum(index.offsets_.begin(), index.offsets_.end(), index.offsets_.begin());
  index.ids_.resize(n);
  std::vector<std::uint32_t> cursor(index.offsets_.begin(), index.offsets_.end() - 1);
  for (std::size_t i = 0; i < n; ++i) index.ids_[cursor[labels[i]]++] = static_cast<RowId>(i);

  index.build_seconds_ =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return index;
}

void IvfIndex::finalize_norms() {
  const std::size_t c = centroids_.size() / dim_;
  centroid_norms_.resize(c);
  for (std::size_t j = 0; j < c; ++j) centroid_norms_[j] = l2_norm(centroids_.data() + j * dim_, dim_);
}

std::vector<std::uint32_t> IvfIndex::probe_order(const Corpus& corpus,
                                                 std::span<const float> query,
                                                 std::uint32_t n_probe) const {
  check_compatible(corpus, query);
  check_probe(n_probe, n_clusters());
  const DistanceComputer dc(corpus, query);
  std::vector<Neighbor> ranked(n_clusters());
  for (std::size_t j = 0; j < ranked.size(); ++j) {
    ranked[j] = {static_cast<RowId>(j), dc.to_point(centroids_.data() + j * dim_, centroid_norms_[j])};
  }
  std::partial_sort(ranked.begin(), ranked.begin() + n_probe, ranked.end(), closer);
  std::vector<std::uint32_t> order(n_probe);
  for (std::size_t j = 0; j < n_probe; ++j) order[j] = ranked[j].id;
  return order;
}

template <class Accept>
SearchResult IvfIndex::scan(const Corpus& corpus, std::span<const float> query, std::size_t k,
                            std::uint32_t n_probe, Accept&& accept) const {
  if (k == 0) throw InputError("k must be >= 1");
  const std::vector<std::uint32_t> probes = probe_order(corpus, query, n_probe);
  const DistanceComputer dc(corpus, query);
  SearchResult result;
  result.telemetry.centroid_evaluations = n_clusters();
  TopK top(k);
  for (const std::uint32_t c : probes) {
    for (const RowId id : list(c)) {
      ++result.telemetry.nodes_visited;
      if (!accept(id)) continue;
      top.push({id, dc(id)});
      ++result.telemetry.distance_evaluations;
    }
  }
  result.neighbors = top.take_sorted();
  return result;
}

SearchResult IvfIndex::search(const Corpus& corpus, std::span<const float> query, std::size_t k,
                              std::uint32_t n_probe) const {
  return scan(corpus, query, k, n_probe, [](RowId) { return true; });
}

SearchResult IvfIndex::search_prefilter(const Corpus& corpus, std::span<const float> query,
                                        std::size_t k, std::uint32_t n_probe,
                                        const FilterMask& mask) const {
  if (mask.size() != size_) throw InputError("mask length does not match index size");
  return scan(corpus, query, k, n_probe, [&mask](RowId id) { return mask.test(id); });
}

SearchResult IvfIndex::search_raw(const Corpus& corpus, std::span<const float> query,
                                  std::size_t pool_size, std::uint32_t n_probe) const {
  return scan(corpus, query, pool_size, n_probe, [](RowId) { return true; });
}

SearchResult IvfIndex::search_runtime(const Corpus& corpus, std::span<const float> query,
                                      std::size_t k, std::uint32_t n_probe,
                                      const RowPredicate& predicate) const {
  std::uint64_t calls = 0;
  SearchResult result = scan(corpus, query, k, n_probe, [&](RowId id) {
    ++calls;
    return predicate(id);
  });
  result.telemetry.predicate_invocations = calls;
  return result;
}

// "FIV1", u32 N, u32 d, u32 C, u64 seed, u32 max_iters, u32 iterations,
// f64 build_seconds, C x d f32 centroids, (C+1) x u32 offsets, N x u32 ids.
void IvfIndex::save(const std::filesystem::path& path) const {
  detail::BinaryWriter out(path);
  out.magic("FIV1");
  out.put(static_cast<std::uint32_t>(size_));
  out.put(static_cast<std::uint32_t>(dim_));
  out.put(static_cast<std::uint32_t>(n_clusters()));
  out.put(params_.seed);
  out.put(params_.max_iters);
  out.put(iterations_);
  out.put(build_seconds_);
  out.array(std::span<const float>(centroids_));
  out.array(std::span<const std::uint32_t>(offsets_));
  out.array(std::span<const RowId>(ids_));
  out.finish();
}

IvfIndex IvfIndex::load(const std::filesystem::path& path) {
  detail::BinaryReader in(path);
  in.expect_magic("FIV1");
  IvfIndex index;
  index.size_ = in.get<std::uint32_t>("row count");
  index.dim_ = in.get<std::uint32_t>("dimension");
  const auto c = in.get<std::uint32_t>("cluster count");
  index.params_.n_clusters = c;
  index.params_.seed = in.get<std::uint64_t>("seed");
  index.params_.max_iters = in.get<std::uint32_t>("max_iters");
  index.iterations_ = in.get<std::uint32_t>("iterations");
  index.build_seconds_ = in.get<double>("build time");
  const std::string where = "'" + path.string() + "': ";
  if (index.size_ == 0 || index.dim_ == 0 || c == 0 || c > index.size_) {
    throw FormatError(where + "inconsistent IVF header");
  }
  index.centroids_ = in.array<float>(std::uint64_t{c} * index.dim_, "centroids");
  index.offsets_ = in.array<std::uint32_t>(std::uint64_t{c} + 1, "list offsets");
  index.ids_ = in.array<RowId>(index.size_, "list ids");
  in.expect_end();
  if (index.offsets_.front() != 0 || index.offsets_.back() != index.size_ ||
      !std::is_sorted(index.offsets_.begin(), index.offsets_.end())) {
    throw FormatError(where + "corrupt list offsets");
  }
  std::vector<bool> seen(index.size_, false);
  for (const RowId id : index.ids_) {
    if (id >= index.size_ || seen[id]) throw FormatError(where + "lists do not partition the rows");
    seen[id] = true;
  }
  index.finalize_norms();
  return index;
}

}  // namespace fanns
