#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string_view>

#include "fanns/corpus.hpp"
#include "fanns/search.hpp"

namespace fanns {

enum class IndexKind : std::uint8_t { kHnsw, kIvfFlat };

std::string_view index_kind_name(IndexKind kind);

/// Lazily evaluated row predicate for runtime filtering.
using RowPredicate = std::function<bool(RowId)>;

/// Common search surface of the HNSW and IVFFlat indexes.
///
/// Indexes do not own the corpus; every call receives the corpus the index
/// was built over. `search_param` is ef_search for HNSW and n_probe for IVF.
/// All search methods are const and safe to call concurrently.
class Index {
 public:
  virtual ~Index() = default;

  virtual IndexKind kind() const = 0;
  virtual std::size_t size() const = 0;
  virtual std::size_t dim() const = 0;
  /// Wall-clock seconds spent in build(); persisted with the index.
  virtual double build_seconds() const = 0;

  virtual SearchResult search(const Corpus& corpus, std::span<const float> query, std::size_t k,
                              std::uint32_t search_param) const = 0;

  /// Pre-filtering with a materialized bitset.
  virtual SearchResult search_prefilter(const Corpus& corpus, std::span<const float> query,
                                        std::size_t k, std::uint32_t search_param,
                                        const FilterMask& mask) const = 0;

  /// Pre-filtering with separate result and navigation pools. HNSW only.
  virtual SearchResult search_dual_pool(const Corpus& corpus, std::span<const float> query,
                                        std::size_t k, std::uint32_t search_param,
                                        const FilterMask& mask) const;
  virtual bool supports_dual_pool() const { return false; }

  /// Unfiltered search returning `pool_size` candidates for post-filtering.
  virtual SearchResult search_raw(const Corpus& corpus, std::span<const float> query,
                                  std::size_t pool_size, std::uint32_t search_param) const = 0;

  /// Runtime filtering: the predicate is called on demand during traversal.
  virtual SearchResult search_runtime(const Corpus& corpus, std::span<const float> query,
                                      std::size_t k, std::uint32_t search_param,
                                      const RowPredicate& predicate) const = 0;

  virtual void save(const std::filesystem::path& path) const = 0;

 protected:
  void check_compatible(const Corpus& corpus, std::span<const float> query) const;
};

/// Loads either index type, dispatching on the file magic.
std::unique_ptr<Index> load_index(const std::filesystem::path& path);

}  // namespace fanns
