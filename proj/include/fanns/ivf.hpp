#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fanns/index.hpp"

namespace fanns {

struct IvfParams {
  std::uint32_t n_clusters = 100;
  std::uint64_t seed = 42;
  std::uint32_t max_iters = 25;
};

/// Inverted file with flat storage.
///
/// k-means runs in L2 geometry on the stored rows (k-means++ seeding, Lloyd
/// until every centroid moves less than 1e-4 or max_iters). An empty cluster
/// is re-seeded with the farthest point of the currently largest cluster.
/// The final row-to-list assignment uses the corpus metric, so each row sits
/// in the list of its nearest centroid under that metric.
///
/// Search ranks all centroids with the full distance and scans the n_probe
/// nearest lists. Prefilter tests the mask before each row distance.
class IvfIndex final : public Index {
 public:
  static IvfIndex build(const Corpus& corpus, const IvfParams& params);

  static IvfIndex load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const override;

  IndexKind kind() const override { return IndexKind::kIvfFlat; }
  std::size_t size() const override { return size_; }
  std::size_t dim() const override { return dim_; }
  double build_seconds() const override { return build_seconds_; }
  const IvfParams& params() const { return params_; }

  std::size_t n_clusters() const { return offsets_.size() - 1; }
  std::uint32_t iterations() const { return iterations_; }
  std::span<const float> centroid(std::size_t c) const {
    return {centroids_.data() + c * dim_, dim_};
  }
  std::span<const RowId> list(std::size_t c) const {
    return {ids_.data() + offsets_[c], offsets_[c + 1] - offsets_[c]};
  }

  /// The n_probe list indices a query would scan, nearest first.
  std::vector<std::uint32_t> probe_order(const Corpus& corpus, std::span<const float> query,
                                         std::uint32_t n_probe) const;

  SearchResult search(const Corpus& corpus, std::span<const float> query, std::size_t k,
                      std::uint32_t n_probe) const override;
  SearchResult search_prefilter(const Corpus& corpus, std::span<const float> query, std::size_t k,
                                std::uint32_t n_probe, const FilterMask& mask) const override;
  SearchResult search_raw(const Corpus& corpus, std::span<const float> query,
                          std::size_t pool_size, std::uint32_t n_probe) const override;
  SearchResult search_runtime(const Corpus& corpus, std::span<const float> query, std::size_t k,
                              std::uint32_t n_probe, const RowPredicate& predicate) const override;

  friend bool operator==(const IvfIndex& a, const IvfIndex& b) {
    return a.size_ == b.size_ && a.dim_ == b.dim_ && a.params_.n_clusters == b.params_.n_clusters &&
           a.params_.seed == b.params_.seed && a.params_.max_iters == b.params_.max_iters &&
           a.iterations_ == b.iterations_ && a.centroids_ == b.centroids_ &&
           a.offsets_ == b.offsets_ && a.ids_ == b.ids_;
  }

 private:
  IvfIndex() = default;

  template <class Accept>
  SearchResult scan(const Corpus& corpus, std::span<const float> query, std::size_t k,
                    std::uint32_t n_probe, Accept&& accept) const;
  void finalize_norms();

  std::size_t size_ = 0;
  std::size_t dim_ = 0;
  IvfParams params_;
  std::uint32_t iterations_ = 0;
  std::vector<float> centroids_;       // C x d
  std::vector<float> centroid_norms_;  // derived, not persisted
  std::vector<std::uint32_t> offsets_;  // C + 1
  std::vector<RowId> ids_;
  double build_seconds_ = 0.0;
};

}  // namespace fanns
