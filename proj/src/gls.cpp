#include "fanns/gls.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>

#include <fmt/format.h>

#include "fanns/errors.hpp"
#include "fanns/kernels.hpp"
#include "fanns/random.hpp"

namespace fanns {
namespace {

void require_non_empty(const FilterMask& mask, std::size_t n) {
  if (mask.size() != n) throw InputError("mask length does not match corpus size");
  if (mask.empty()) throw InputError("GLS is undefined for an empty filter");
}

double valid_fraction(std::span<const Neighbor> neighbors, const FilterMask& mask) {
  if (neighbors.empty()) return 0.0;
  const auto valid = std::count_if(neighbors.begin(), neighbors.end(),
                                   [&mask](const Neighbor& n) { return mask.test(n.id); });
  return static_cast<double>(valid) / static_cast<double>(neighbors.size());
}

void fill_query(GlsReport& report, const Corpus& corpus, const QuerySet& queries, std::size_t q,
                std::span<const FilterMask* const> masks, std::size_t k_neighborhood) {
  const GroundTruthRow hood =
      exact_knn(corpus, queries[q], std::min(k_neighborhood, corpus.size()));
  for (const FilterMask* mask : masks) {
    if (mask->empty()) {
      ++report.skipped_empty;
      continue;
    }
    GlsEntry e = gls_from_selectivities(valid_fraction(hood, *mask), mask->global_selectivity());
    e.query_id = q;
    report.entries.push_back(e);
  }
}

GlsReport merge(std::vector<GlsReport>& parts) {
  GlsReport out;
  for (GlsReport& p : parts) {
    out.entries.insert(out.entries.end(), p.entries.begin(), p.entries.end());
    out.skipped_empty += p.skipped_empty;
  }
  out.rho_bar = out.entries.empty() ? 0.0 : gls_mean(out.entries);
  return out;
}

void check_batch(const Corpus& corpus, const QuerySet& queries,
                 std::span<const FilterMask* const> masks, std::size_t k_neighborhood) {
  if (k_neighborhood == 0) throw InputError("k_neighborhood must be >= 1");
  if (queries.dim != corpus.dim()) throw InputError("query dimension does not match corpus");
  for (const FilterMask* m : masks) {
    if (m == nullptr || m->size() != corpus.size()) {
      throw InputError("every GLS mask must cover the corpus");
    }
  }
}

}  // namespace

std::string_view gls_bin_name(GlsBin bin) {
  switch (bin) {
    case GlsBin::kLow:
      return "low";
    case GlsBin::kMedium:
      return "medium";
    case GlsBin::kHigh:
      return "high";
  }
  return "unknown";
}

double gls_rho(double ratio) {
  if (!(ratio >= 0.0)) throw InputError("selectivity ratio must be >= 0");
  return (ratio - 1.0) / (ratio + 1.0);
}

double gls_inverse(double rho) {
  if (!(rho >= -1.0 && rho < 1.0)) throw InputError("rho must lie in [-1, 1)");
  return (1.0 + rho) / (1.0 - rho);
}

GlsBin gls_bin(double rho) {
  if (rho < -0.3) return GlsBin::kLow;
  if (rho > 0.3) return GlsBin::kHigh;
  return GlsBin::kMedium;
}

GlsEntry gls_from_selectivities(double sigma_l, double sigma_g) {
  if (!(sigma_g > 0.0 && sigma_g <= 1.0)) throw InputError("sigma_g must lie in (0, 1]");
  if (!(sigma_l >= 0.0 && sigma_l <= 1.0)) throw InputError("sigma_l must lie in [0, 1]");
  GlsEntry e;
  e.sigma_g = sigma_g;
  e.sigma_l = sigma_l;
  e.ratio = sigma_l / sigma_g;
  e.rho = gls_rho(e.ratio);
  e.bin = gls_bin(e.rho);
  return e;
}

GlsEntry gls_exact(const Corpus& corpus, std::span<const float> query, const FilterMask& mask,
                   std::size_t k_neighborhood) {
  require_non_empty(mask, corpus.size());
  if (k_neighborhood == 0) throw InputError("k_neighborhood must be >= 1");
  const GroundTruthRow hood = exact_knn(corpus, query, std::min(k_neighborhood, corpus.size()));
  return gls_from_selectivities(valid_fraction(hood, mask), mask.global_selectivity());
}

GlsEntry gls_approx(const Corpus& corpus, const Index& index, std::span<const float> query,
                    const FilterMask& mask, std::size_t k_neighborhood, std::size_t sample_size,
                    std::uint64_t seed, std::uint32_t search_param) {
  require_non_empty(mask, corpus.size());
  if (k_neighborhood == 0) throw InputError("k_neighborhood must be >= 1");
  if (sample_size == 0 || sample_size > corpus.size()) {
    throw InputError("sample size must be in [1, N]");
  }
  const std::size_t k = std::min(k_neighborhood, corpus.size());
  std::uint32_t param = search_param;
  if (index.kind() == IndexKind::kHnsw) param = std::max<std::uint32_t>(param, static_cast<std::uint32_t>(k));
  const SearchResult hood = index.search(corpus, query, k, param);

  // Partial Fisher-Yates over row ids.
  std::vector<RowId> ids(corpus.size());
  std::iota(ids.begin(), ids.end(), RowId{0});
  Rng rng(seed);
  std::size_t valid = 0;
  for (std::size_t i = 0; i < sample_size; ++i) {
    std::swap(ids[i], ids[i + rng.below(ids.size() - i)]);
    valid += mask.test(ids[i]) ? 1 : 0;
  }
  if (valid == 0) {
    throw InputError("no valid row in a sample of " + std::to_string(sample_size) +
                     "; sigma_g estimate would be zero");
  }
  return gls_from_selectivities(
      valid_fraction(hood.neighbors, mask),
      static_cast<double>(valid) / static_cast<double>(sample_size));
}

double gls_mean(std::span<const GlsEntry> entries) {
  if (entries.empty()) throw InputError("mean of zero GLS entries");
  double sum = 0.0;
  for (const GlsEntry& e : entries) sum += e.rho;
  return sum / static_cast<double>(entries.size());
}

GlsReport gls_batch_serial(const Corpus& corpus, const QuerySet& queries,
                           std::span<const FilterMask* const> masks, std::size_t k_neighborhood) {
  check_batch(corpus, queries, masks, k_neighborhood);
  std::vector<GlsReport> parts(1);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    fill_query(parts[0], corpus, queries, q, masks, k_neighborhood);
  }
  return merge(parts);
}

GlsReport gls_batch(const Corpus& corpus, const QuerySet& queries,
                    std::span<const FilterMask* const> masks, std::size_t k_neighborhood) {
  check_batch(corpus, queries, masks, k_neighborhood);
  std::vector<GlsReport> parts(queries.size());
  const auto n = static_cast<std::int64_t>(queries.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t q = 0; q < n; ++q) {
    fill_query(parts[q], corpus, queries, static_cast<std::size_t>(q), masks, k_neighborhood);
  }
  return merge(parts);
}

DistanceCorrelation distance_correlation(const Corpus& corpus,
                                         std::span<const QueryMaskPair> pairs, std::size_t trials,
                                         std::uint64_t seed) {
  if (trials == 0) throw InputError("trials must be >= 1");
  DistanceCorrelation out;
  out.per_pair.reserve(pairs.size());
  const std::size_t n = corpus.size();
  std::vector<float> keys(n);
  std::vector<RowId> ids(n);
  Rng rng(seed);
  for (const QueryMaskPair& p : pairs) {
    if (p.mask == nullptr) throw InputError("distance correlation needs a mask per query");
    require_non_empty(*p.mask, n);
    kernels::serial::compute_keys(corpus, p.query, keys);

    float best_valid = std::numeric_limits<float>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (p.mask->test(static_cast<RowId>(i))) best_valid = std::min(best_valid, keys[i]);
    }

    const std::size_t m = p.mask->valid_count();
    double expected = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      std::iota(ids.begin(), ids.end(), RowId{0});
      float best = std::numeric_limits<float>::infinity();
      for (std::size_t i = 0; i < m; ++i) {
        std::swap(ids[i], ids[i + rng.below(n - i)]);
        best = std::min(best, keys[ids[i]]);
      }
      expected += best;
    }
    expected /= static_cast<double>(trials);
    out.per_pair.push_back(expected - static_cast<double>(best_valid));
  }
  if (!out.per_pair.empty()) {
    out.mean = std::accumulate(out.per_pair.begin(), out.per_pair.end(), 0.0) /
               static_cast<double>(out.per_pair.size());
  }
  return out;
}

void write_gls_csv(const GlsReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "query_id,sigma_g,sigma_l,ratio,rho,bin\n";
  for (const GlsEntry& e : report.entries) {
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", e.query_id, e.sigma_g,
                       e.sigma_l, e.ratio, e.rho, gls_bin_name(e.bin));
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace fanns
