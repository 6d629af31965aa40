#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fanns/corpus.hpp"
#include "fanns/search.hpp"

namespace fanns {

/// Row-major block of query vectors.
struct QuerySet {
  std::size_t dim = 0;
  std::vector<float> data;

  std::size_t size() const { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const float> operator[](std::size_t i) const { return {data.data() + i * dim, dim}; }
};

using GroundTruthRow = std::vector<Neighbor>;

/// Exact filtered k-NN results. Rows are laid out mask-major:
/// row(mask m, query q) = rows[m * num_queries + q].
struct GroundTruth {
  std::uint32_t k_max = 0;
  std::uint32_t num_queries = 0;
  std::vector<GroundTruthRow> rows;

  const GroundTruthRow& row(std::size_t mask_index, std::size_t query_index) const {
    return rows.at(mask_index * num_queries + query_index);
  }

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

/// Exhaustive scan over the rows passing `mask` (all rows when null).
/// Returns min(k, valid_count) neighbors, ties broken by ascending id.
GroundTruthRow exact_knn(const Corpus& corpus, std::span<const float> query, std::size_t k,
                         const FilterMask* mask = nullptr);

/// Same scan reusing a caller-built computer; adds the number of evaluated
/// rows to `distance_evaluations` when non-null.
GroundTruthRow exact_knn(const DistanceComputer& dc, std::size_t k, const FilterMask* mask,
                         std::uint64_t* distance_evaluations = nullptr);

/// One row per (mask, query) pair; a null mask means unfiltered.
/// Parallel across queries.
GroundTruth batch_ground_truth(const Corpus& corpus, const QuerySet& queries, std::size_t k,
                               std::span<const FilterMask* const> masks);

// "FGT1", u32 Q (query count), u32 k_max, then rows until end of file,
// each row: u32 m, m x (u32 id, f32 distance). Row order is mask-major.
void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& path);
GroundTruth load_ground_truth(const std::filesystem::path& path);

}  // namespace fanns
