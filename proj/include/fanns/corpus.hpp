#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fanns {

using RowId = std::uint32_t;

enum class Metric : std::uint8_t { kL2 = 0, kInnerProduct = 1, kCosine = 2 };

std::string_view metric_name(Metric m);
Metric parse_metric(std::string_view name);

/// Row-aligned store of N float32 vectors of dimension d plus one float64
/// scalar attribute per row. Row ids are the implicit positions 0..N-1.
///
/// Immutable after construction. When `normalized` is set every row is
/// checked to have unit L2 norm (within 1e-5) at construction time.
class Corpus {
 public:
  Corpus(std::size_t dim, std::vector<float> vectors, std::vector<double> attribute,
         Metric metric, bool normalized);

  std::size_t size() const { return attribute_.size(); }
  std::size_t dim() const { return dim_; }
  Metric metric() const { return metric_; }
  bool normalized() const { return normalized_; }

  std::span<const float> row(RowId id) const {
    return {vectors_.data() + static_cast<std::size_t>(id) * dim_, dim_};
  }
  const float* row_ptr(RowId id) const {
    return vectors_.data() + static_cast<std::size_t>(id) * dim_;
  }
  double attribute(RowId id) const { return attribute_[id]; }
  float norm(RowId id) const { return norms_[id]; }

  std::span<const float> vectors() const { return vectors_; }
  std::span<const double> attributes() const { return attribute_; }

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.dim_ == b.dim_ && a.metric_ == b.metric_ && a.normalized_ == b.normalized_ &&
           a.vectors_ == b.vectors_ && a.attribute_ == b.attribute_;
  }

 private:
  std::size_t dim_;
  std::vector<float> vectors_;
  std::vector<double> attribute_;
  std::vector<float> norms_;
  Metric metric_;
  bool normalized_;
};

// ---------------------------------------------------------------------------
// Distance kernels
// ---------------------------------------------------------------------------

float dot_product(const float* a, const float* b, std::size_t d);
float squared_l2(const float* a, const float* b, std::size_t d);
float l2_norm(const float* a, std::size_t d);

/// Metric value as a user sees it: L2 distance, inner-product similarity or
/// cosine similarity. Throws InputError on dimension mismatch.
float distance(std::span<const float> a, std::span<const float> b, Metric m);

/// Unified "smaller is closer" ordering key: L2 distance, or the negated
/// similarity for inner product and cosine.
float order_key(std::span<const float> a, std::span<const float> b, Metric m);

/// Ordering keys from one query to corpus rows. Every index and the oracle
/// go through this type so that keys for the same (query, row) pair are
/// bit-identical across code paths.
class DistanceComputer {
 public:
  DistanceComputer(const Corpus& corpus, std::span<const float> query);

  float operator()(RowId id) const { return key(corpus_->row_ptr(id), corpus_->norm(id)); }

  /// Key against an arbitrary point (e.g. an IVF centroid).
  float to_point(const float* point) const;
  /// Same, with the point's L2 norm supplied by the caller.
  float to_point(const float* point, float point_norm) const { return key(point, point_norm); }

  const Corpus& corpus() const { return *corpus_; }
  std::span<const float> query() const { return query_; }

 private:
  float key(const float* row, float row_norm) const;

  const Corpus* corpus_;
  std::span<const float> query_;
  float query_norm_;
};

// ---------------------------------------------------------------------------
// Filters
// ---------------------------------------------------------------------------

/// Dense bitset over row ids holding a predicate's valid set.
class FilterMask {
 public:
  FilterMask() = default;
  explicit FilterMask(std::size_t n, bool value = false);

  template <class Pred>
  static FilterMask from_predicate(std::size_t n, Pred&& pred) {
    FilterMask mask(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (pred(static_cast<RowId>(i))) mask.set(static_cast<RowId>(i));
    }
    return mask;
  }

  bool test(RowId id) const { return (words_[id >> 6] >> (id & 63)) & 1U; }
  void set(RowId id);
  void reset(RowId id);

  std::size_t size() const { return size_; }
  std::size_t valid_count() const { return valid_count_; }
  bool empty() const { return valid_count_ == 0; }
  double global_selectivity() const {
    return size_ == 0 ? 0.0 : static_cast<double>(valid_count_) / static_cast<double>(size_);
  }
  /// True when every bit of `other` is also set here.
  bool contains(const FilterMask& other) const;
  std::span<const std::uint64_t> words() const { return words_; }

  friend bool operator==(const FilterMask&, const FilterMask&) = default;

 private:
  std::vector<std::uint64_t> words_;
  std::size_t size_ = 0;
  std::size_t valid_count_ = 0;
};

/// Bit i set iff attribute[i] >= threshold.
FilterMask build_mask(const Corpus& corpus, double threshold);

/// Threshold whose `>=` mask has the global selectivity closest to the
/// target among all attainable values. Ties on |sigma - target| prefer the
/// lower threshold. Requires 0 < target_sigma <= 1.
double threshold_for_selectivity(const Corpus& corpus, double target_sigma);

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

enum class AttributeMode { kIndependent, kClusterCorrelated };

struct SyntheticOptions {
  std::size_t n = 0;
  std::size_t dim = 0;
  std::uint64_t seed = 0;
  AttributeMode attr_mode = AttributeMode::kIndependent;
  /// Mixing weight of the cluster quantile in cluster-correlated mode.
  double strength = 1.0;
  Metric metric = Metric::kCosine;
};

inline constexpr std::size_t kSyntheticClusters = 16;
inline constexpr double kSyntheticClusterNoise = 0.5;

/// Unit-norm vectors plus an attribute column; deterministic given the seed.
///
/// Independent mode: vectors i.i.d. standard normal, attribute ~ U[0,1).
/// Cluster-correlated mode: each row belongs to one of 16 Gaussian clusters
/// (centers ~ N(0, I), per-row noise sd 0.5) and
///   attribute = strength * (cluster + u1) / 16 + (1 - strength) * u2.
Corpus generate_synthetic(const SyntheticOptions& opts);

/// Cluster label of each row produced by the cluster-correlated generator
/// (regenerated from the same seed). Empty for independent mode.
std::vector<std::uint32_t> synthetic_cluster_labels(const SyntheticOptions& opts);

// ---------------------------------------------------------------------------
// IO
// ---------------------------------------------------------------------------

void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& path);
void save_attribute_csv(const Corpus& corpus, const std::filesystem::path& path);

}  // namespace fanns
