#include "fanns/kernels.hpp"

#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fanns::kernels {
namespace {

std::uint32_t nearest_centroid(const float* point, std::size_t dim,
                               std::span<const float> centroids, float* best_dist) {
  const std::size_t c = centroids.size() / dim;
  std::uint32_t best = 0;
  float best_d = std::numeric_limits<float>::infinity();
  for (std::size_t j = 0; j < c; ++j) {
    const float d = squared_l2(point, centroids.data() + j * dim, dim);
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::uint32_t>(j);
    }
  }
  *best_dist = best_d;
  return best;
}

std::uint32_t nearest_by_metric(const Corpus& corpus, RowId row, std::span<const float> centroids,
                                std::span<const float> centroid_norms) {
  const std::size_t dim = corpus.dim();
  const DistanceComputer dc(corpus, corpus.row(row));
  std::uint32_t best = 0;
  float best_key = std::numeric_limits<float>::infinity();
  for (std::size_t j = 0; j < centroid_norms.size(); ++j) {
    const float key = dc.to_point(centroids.data() + j * dim, centroid_norms[j]);
    if (key < best_key) {
      best_key = key;
      best = static_cast<std::uint32_t>(j);
    }
  }
  return best;
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace serial {

void compute_keys(const Corpus& corpus, std::span<const float> query, std::span<float> out) {
  const DistanceComputer dc(corpus, query);
  for (std::size_t i = 0; i < corpus.size(); ++i) out[i] = dc(static_cast<RowId>(i));
}

std::vector<GroundTruthRow> batch_exact_knn(const Corpus& corpus, const QuerySet& queries,
                                            std::size_t k, std::span<const KnnTask> tasks) {
  std::vector<GroundTruthRow> rows(tasks.size());
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const DistanceComputer dc(corpus, queries[tasks[t].query]);
    rows[t] = exact_knn(dc, k, tasks[t].mask);
  }
  return rows;
}

void assign_nearest(std::span<const float> points, std::size_t dim,
                    std::span<const float> centroids, std::span<std::uint32_t> labels,
                    std::span<float> distances) {
  const std::size_t n = points.size() / dim;
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = nearest_centroid(points.data() + i * dim, dim, centroids, &distances[i]);
  }
}

void assign_by_metric(const Corpus& corpus, std::span<const float> centroids,
                      std::span<const float> centroid_norms, std::span<std::uint32_t> labels) {
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    labels[i] = nearest_by_metric(corpus, static_cast<RowId>(i), centroids, centroid_norms);
  }
}

}  // namespace serial

namespace parallel {

void compute_keys(const Corpus& corpus, std::span<const float> query, std::span<float> out) {
  const DistanceComputer dc(corpus, query);
  const auto n = static_cast<std::int64_t>(corpus.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) out[i] = dc(static_cast<RowId>(i));
}

std::vector<GroundTruthRow> batch_exact_knn(const Corpus& corpus, const QuerySet& queries,
                                            std::size_t k, std::span<const KnnTask> tasks) {
  std::vector<GroundTruthRow> rows(tasks.size());
  const auto n = static_cast<std::int64_t>(tasks.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t t = 0; t < n; ++t) {
    const DistanceComputer dc(corpus, queries[tasks[t].query]);
    rows[t] = exact_knn(dc, k, tasks[t].mask);
  }
  return rows;
}

void assign_nearest(std::span<const float> points, std::size_t dim,
                    std::span<const float> centroids, std::span<std::uint32_t> labels,
                    std::span<float> distances) {
  const auto n = static_cast<std::int64_t>(points.size() / dim);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    labels[i] = nearest_centroid(points.data() + i * dim, dim, centroids, &distances[i]);
  }
}

void assign_by_metric(const Corpus& corpus, std::span<const float> centroids,
                      std::span<const float> centroid_norms, std::span<std::uint32_t> labels) {
  const auto n = static_cast<std::int64_t>(corpus.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    labels[i] = nearest_by_metric(corpus, static_cast<RowId>(i), centroids, centroid_norms);
  }
}

}  // namespace parallel
}  // namespace fanns::kernels
