#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fanns/index.hpp"

namespace fanns {

struct HnswParams {
  std::uint32_t M = 16;
  std::uint32_t ef_construction = 100;
  std::uint64_t seed = 42;
};

/// Hierarchical navigable small-world graph.
///
/// Nodes are inserted in id order. Level of a node: floor(-ln(U) / ln(M))
/// with U drawn from (0, 1] by `Rng` seeded with `params.seed`. Each inserted
/// node links to the M closest entries of its construction beam on every
/// layer it occupies; reverse links are kept and trimmed to the closest M
/// (2M on layer 0). No heuristic neighbor pruning.
///
/// Layer-0 search modes. ef_search is not raised to k, so ef < k yields at
/// most ef results.
///  - unfiltered: standard beam of width ef.
///  - prefilter (single pool): the expansion frontier holds at most ef
///    unexpanded nodes, valid or not; only mask-valid nodes enter the result
///    pool (capacity ef). A neighbor is admitted while the result pool is not
///    full or when it beats the worst result.
///  - dual pool: same result pool, but the navigation frontier is unbounded
///    so invalid nodes never evict useful navigation candidates. Stops when
///    the nearest unexpanded node is farther than the worst entry of a full
///    result pool.
///  - raw: unfiltered beam of width max(ef, pool_size).
///  - runtime: the single-pool traversal with the predicate evaluated lazily,
///    only for nodes that would enter the result pool.
class HnswIndex final : public Index {
 public:
  static HnswIndex build(const Corpus& corpus, const HnswParams& params);

  /// Wraps an explicit graph: layers[l][node] lists the out-links of node on
  /// layer l. Every node must appear on layer 0; node levels are the highest
  /// layer with a non-empty list (or 0).
  static HnswIndex from_graph(std::size_t dim, std::vector<std::vector<std::vector<RowId>>> layers,
                              RowId entry_point, const HnswParams& params);

  static HnswIndex load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const override;

  IndexKind kind() const override { return IndexKind::kHnsw; }
  std::size_t size() const override { return levels_.size(); }
  std::size_t dim() const override { return dim_; }
  double build_seconds() const override { return build_seconds_; }
  const HnswParams& params() const { return params_; }

  RowId entry_point() const { return entry_point_; }
  std::uint32_t max_level() const { return max_level_; }
  std::uint32_t level(RowId id) const { return levels_[id]; }
  std::span<const RowId> neighbors(RowId id, std::uint32_t layer) const { return links_[layer][id]; }

  SearchResult search(const Corpus& corpus, std::span<const float> query, std::size_t k,
                      std::uint32_t ef_search) const override;
  SearchResult search_prefilter(const Corpus& corpus, std::span<const float> query, std::size_t k,
                                std::uint32_t ef_search, const FilterMask& mask) const override;
  /// Same as above and records, in visit order, every node whose distance
  /// was computed on layer 0.
  SearchResult search_prefilter(const Corpus& corpus, std::span<const float> query, std::size_t k,
                                std::uint32_t ef_search, const FilterMask& mask,
                                std::vector<RowId>* visited) const;
  SearchResult search_dual_pool(const Corpus& corpus, std::span<const float> query, std::size_t k,
                                std::uint32_t ef_search, const FilterMask& mask) const override;
  bool supports_dual_pool() const override { return true; }
  SearchResult search_raw(const Corpus& corpus, std::span<const float> query,
                          std::size_t pool_size, std::uint32_t ef_search) const override;
  SearchResult search_runtime(const Corpus& corpus, std::span<const float> query, std::size_t k,
                              std::uint32_t ef_search,
                              const RowPredicate& predicate) const override;

  friend bool operator==(const HnswIndex& a, const HnswIndex& b) {
    return a.dim_ == b.dim_ && a.params_.M == b.params_.M &&
           a.params_.ef_construction == b.params_.ef_construction &&
           a.params_.seed == b.params_.seed && a.entry_point_ == b.entry_point_ &&
           a.max_level_ == b.max_level_ && a.levels_ == b.levels_ && a.links_ == b.links_;
  }

 private:
  HnswIndex() = default;

  struct Descent;
  Descent descend(const DistanceComputer& dc, SearchTelemetry& telemetry) const;

  std::size_t dim_ = 0;
  HnswParams params_;
  RowId entry_point_ = 0;
  std::uint32_t max_level_ = 0;
  std::vector<std::uint8_t> levels_;
  std::vector<std::vector<std::vector<RowId>>> links_;  // [layer][node]
  double build_seconds_ = 0.0;
};

}  // namespace fanns
