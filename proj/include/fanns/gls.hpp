#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "fanns/corpus.hpp"
#include "fanns/index.hpp"
#include "fanns/oracle.hpp"

namespace fanns {

inline constexpr std::size_t kDefaultNeighborhood = 2048;

enum class GlsBin : std::uint8_t { kLow, kMedium, kHigh };
std::string_view gls_bin_name(GlsBin bin);

/// Global-local selectivity of one (query, filter) pair.
struct GlsEntry {
  std::size_t query_id = 0;
  double sigma_g = 0.0;
  double sigma_l = 0.0;
  double ratio = 0.0;  // sigma_l / sigma_g
  double rho = 0.0;    // (ratio - 1) / (ratio + 1)
  GlsBin bin = GlsBin::kMedium;
};

double gls_rho(double ratio);
/// r = (1 + rho) / (1 - rho); InputError unless -1 <= rho < 1.
double gls_inverse(double rho);
/// low iff rho < -0.3, high iff rho > 0.3.
GlsBin gls_bin(double rho);
GlsEntry gls_from_selectivities(double sigma_l, double sigma_g);

/// sigma_l from the exact unfiltered k_neighborhood-NN (fewer when N is
/// smaller), sigma_g from the mask. InputError on an empty mask.
GlsEntry gls_exact(const Corpus& corpus, std::span<const float> query, const FilterMask& mask,
                   std::size_t k_neighborhood = kDefaultNeighborhood);

/// sigma_l from the index's k_neighborhood results, sigma_g from a uniform
/// sample of `sample_size` rows drawn without replacement. For HNSW the
/// beam width is max(search_param, k_neighborhood). InputError when the
/// sample contains no valid row.
GlsEntry gls_approx(const Corpus& corpus, const Index& index, std::span<const float> query,
                    const FilterMask& mask, std::size_t k_neighborhood, std::size_t sample_size,
                    std::uint64_t seed, std::uint32_t search_param);

/// Arithmetic mean of rho; InputError on empty input.
double gls_mean(std::span<const GlsEntry> entries);

struct GlsReport {
  /// Query-major: every non-empty mask for query 0, then query 1, ...
  std::vector<GlsEntry> entries;
  std::size_t skipped_empty = 0;
  double rho_bar = 0.0;  // 0 when every pair was skipped
};

/// Exact GLS for every (query, mask) pair. Empty masks are skipped and
/// counted. The parallel version splits work across queries and returns the
/// same report as the serial one.
GlsReport gls_batch(const Corpus& corpus, const QuerySet& queries,
                    std::span<const FilterMask* const> masks,
                    std::size_t k_neighborhood = kDefaultNeighborhood);
GlsReport gls_batch_serial(const Corpus& corpus, const QuerySet& queries,
                           std::span<const FilterMask* const> masks,
                           std::size_t k_neighborhood = kDefaultNeighborhood);

/// Distance-based correlation in ordering-key units. For each pair,
/// value = E[min key over a uniform random subset R with |R| = |X_p|]
///         - min key over the valid set X_p,
/// with the expectation taken over `trials` seeded draws.
struct DistanceCorrelation {
  std::vector<double> per_pair;  // same order as the input pairs
  double mean = 0.0;
};

struct QueryMaskPair {
  std::span<const float> query;
  const FilterMask* mask = nullptr;
};

DistanceCorrelation distance_correlation(const Corpus& corpus,
                                         std::span<const QueryMaskPair> pairs,
                                         std::size_t trials = 10, std::uint64_t seed = 0);

/// "query_id,sigma_g,sigma_l,ratio,rho,bin"
void write_gls_csv(const GlsReport& report, const std::filesystem::path& path);

}  // namespace fanns
