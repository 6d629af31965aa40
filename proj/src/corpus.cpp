#include "fanns/corpus.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "fanns/errors.hpp"

namespace fanns {

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::kL2:
      return "l2";
    case Metric::kInnerProduct:
      return "ip";
    case Metric::kCosine:
      return "cosine";
  }
  return "unknown";
}

Metric parse_metric(std::string_view name) {
  if (name == "l2" || name == "L2") return Metric::kL2;
  if (name == "ip" || name == "inner_product" || name == "InnerProduct") return Metric::kInnerProduct;
  if (name == "cosine" || name == "Cosine") return Metric::kCosine;
  throw InputError("unknown metric '" + std::string(name) + "'");
}

Corpus::Corpus(std::size_t dim, std::vector<float> vectors, std::vector<double> attribute,
               Metric metric, bool normalized)
    : dim_(dim),
      vectors_(std::move(vectors)),
      attribute_(std::move(attribute)),
      metric_(metric),
      normalized_(normalized) {
  if (dim_ == 0) throw InputError("corpus dimensionality must be >= 1");
  if (attribute_.empty()) throw InputError("corpus must hold at least one row");
  if (vectors_.size() != attribute_.size() * dim_) {
    throw InputError("vector payload holds " + std::to_string(vectors_.size()) +
                     " floats, expected N*d = " + std::to_string(attribute_.size() * dim_));
  }
  norms_.resize(attribute_.size());
  for (std::size_t i = 0; i < attribute_.size(); ++i) {
    norms_[i] = l2_norm(vectors_.data() + i * dim_, dim_);
    if (normalized_ && std::abs(norms_[i] - 1.0F) > 1e-5F) {
      throw InputError("row " + std::to_string(i) + " has norm " + std::to_string(norms_[i]) +
                       " but the corpus is flagged as normalized");
    }
  }
}

// Eight independent accumulators let the compiler vectorize without
// reassociation flags; the summation order is fixed, so results are
// reproducible.
float dot_product(const float* a, const float* b, std::size_t d) {
  float acc[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= d; i += 8) {
    for (std::size_t j = 0; j < 8; ++j) acc[j] += a[i + j] * b[i + j];
  }
  for (std::size_t j = 0; i < d; ++i, ++j) acc[j] += a[i] * b[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

float squared_l2(const float* a, const float* b, std::size_t d) {
  float acc[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= d; i += 8) {
    for (std::size_t j = 0; j < 8; ++j) {
      const float t = a[i + j] - b[i + j];
      acc[j] += t * t;
    }
  }
  for (std::size_t j = 0; i < d; ++i, ++j) {
    const float t = a[i] - b[i];
    acc[j] += t * t;
  }
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

float l2_norm(const float* a, std::size_t d) { return std::sqrt(dot_product(a, a, d)); }

namespace {

float cosine_similarity(float dot, float norm_a, float norm_b) {
  const float denom = norm_a * norm_b;
  return denom > 0.0F ? dot / denom : 0.0F;
}

void check_dims(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw InputError("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
}

}  // namespace

float distance(std::span<const float> a, std::span<const float> b, Metric m) {
  check_dims(a, b);
  switch (m) {
    case Metric::kL2:
      return std::sqrt(squared_l2(a.data(), b.data(), a.size()));
    case Metric::kInnerProduct:
      return dot_product(a.data(), b.data(), a.size());
    case Metric::kCosine:
      return cosine_similarity(dot_product(a.data(), b.data(), a.size()),
                               l2_norm(a.data(), a.size()), l2_norm(b.data(), b.size()));
  }
  return 0.0F;
}

float order_key(std::span<const float> a, std::span<const float> b, Metric m) {
  const float v = distance(a, b, m);
  return m == Metric::kL2 ? v : -v;
}

DistanceComputer::DistanceComputer(const Corpus& corpus, std::span<const float> query)
    : corpus_(&corpus), query_(query), query_norm_(l2_norm(query.data(), query.size())) {
  if (query.size() != corpus.dim()) {
    throw InputError("query dimension " + std::to_string(query.size()) +
                     " does not match corpus dimension " + std::to_string(corpus.dim()));
  }
}

float DistanceComputer::key(const float* row, float row_norm) const {
  const std::size_t d = query_.size();
  switch (corpus_->metric()) {
    case Metric::kL2:
      return std::sqrt(squared_l2(query_.data(), row, d));
    case Metric::kInnerProduct:
      return -dot_product(query_.data(), row, d);
    case Metric::kCosine:
      return -cosine_similarity(dot_product(query_.data(), row, d), query_norm_, row_norm);
  }
  return 0.0F;
}

float DistanceComputer::to_point(const float* point) const {
  const float norm = corpus_->metric() == Metric::kCosine ? l2_norm(point, query_.size()) : 0.0F;
  return key(point, norm);
}

// ---------------------------------------------------------------------------

FilterMask::FilterMask(std::size_t n, bool value)
    : words_((n + 63) / 64, value ? ~std::uint64_t{0} : 0), size_(n), valid_count_(value ? n : 0) {
  if (value && n % 64 != 0) words_.back() = (std::uint64_t{1} << (n % 64)) - 1;
}

void FilterMask::set(RowId id) {
  std::uint64_t& w = words_[id >> 6];
  const std::uint64_t bit = std::uint64_t{1} << (id & 63);
  if (!(w & bit)) {
    w |= bit;
    ++valid_count_;
  }
}

void FilterMask::reset(RowId id) {
  std::uint64_t& w = words_[id >> 6];
  const std::uint64_t bit = std::uint64_t{1} << (id & 63);
  if (w & bit) {
    w &= ~bit;
    --valid_count_;
  }
}

bool FilterMask::contains(const FilterMask& other) const {
  if (other.size_ != size_) return false;
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if ((other.words_[i] & ~words_[i]) != 0) return false;
  }
  return true;
}

FilterMask build_mask(const Corpus& corpus, double threshold) {
  return FilterMask::from_predicate(corpus.size(),
                                    [&](RowId id) { return corpus.attribute(id) >= threshold; });
}

double threshold_for_selectivity(const Corpus& corpus, double target_sigma) {
  if (!(target_sigma > 0.0 && target_sigma <= 1.0)) {
    throw InputError("target selectivity must lie in (0, 1], got " + std::to_string(target_sigma));
  }
  std::vector<double> sorted(corpus.attributes().begin(), corpus.attributes().end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  const double target_count = target_sigma * n;

  // Candidate thresholds are the distinct attribute values; a threshold equal
  // to sorted[j] (first occurrence) passes N - j rows.
  double best_threshold = sorted.front();
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    if (j > 0 && sorted[j] == sorted[j - 1]) continue;
    const double gap = std::abs((n - static_cast<double>(j)) - target_count);
    if (gap < best_gap) {
      best_gap = gap;
      best_threshold = sorted[j];
    }
  }
  return best_threshold;
}

}  // namespace fanns
