#pragma once

// Data-parallel building blocks. Each kernel exists twice: an OpenMP version
// used by the library and a serial reference used by the tests and the
// benchmark. Both produce bit-identical output; parallelism is only ever
// across independent rows or queries, never inside a reduction.

#include <cstdint>
#include <span>
#include <vector>

#include "fanns/corpus.hpp"
#include "fanns/oracle.hpp"

namespace fanns::kernels {

/// Work item for batch exact k-NN.
struct KnnTask {
  std::size_t query = 0;
  const FilterMask* mask = nullptr;
};

namespace serial {

/// out[i] = ordering key from `query` to row i.
void compute_keys(const Corpus& corpus, std::span<const float> query, std::span<float> out);

std::vector<GroundTruthRow> batch_exact_knn(const Corpus& corpus, const QuerySet& queries,
                                            std::size_t k, std::span<const KnnTask> tasks);

/// Nearest centroid (squared L2, ties to the lower index) for every row.
void assign_nearest(std::span<const float> points, std::size_t dim,
                    std::span<const float> centroids, std::span<std::uint32_t> labels,
                    std::span<float> distances);

/// Nearest centroid of every corpus row under the corpus metric's ordering
/// key, ties to the lower index.
void assign_by_metric(const Corpus& corpus, std::span<const float> centroids,
                      std::span<const float> centroid_norms, std::span<std::uint32_t> labels);

}  // namespace serial

namespace parallel {

void compute_keys(const Corpus& corpus, std::span<const float> query, std::span<float> out);

std::vector<GroundTruthRow> batch_exact_knn(const Corpus& corpus, const QuerySet& queries,
                                            std::size_t k, std::span<const KnnTask> tasks);

void assign_nearest(std::span<const float> points, std::size_t dim,
                    std::span<const float> centroids, std::span<std::uint32_t> labels,
                    std::span<float> distances);

void assign_by_metric(const Corpus& corpus, std::span<const float> centroids,
                      std::span<const float> centroid_norms, std::span<std::uint32_t> labels);

}  // namespace parallel

int max_threads();

}  // namespace fanns::kernels
