#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fanns/corpus.hpp"
#include "fanns/hnsw.hpp"
#include "fanns/index.hpp"
#include "fanns/ivf.hpp"
#include "fanns/oracle.hpp"
#include "fanns/strategy.hpp"

namespace fanns {

// ---------------------------------------------------------------------------
// Workload
// ---------------------------------------------------------------------------

inline const std::vector<double> kDefaultTargets = {0.01, 0.03, 0.05, 0.1, 0.2, 0.5};
inline const std::vector<std::size_t> kDefaultKs = {1, 10, 40, 100};

struct WorkloadOptions {
  std::size_t n_queries = 1000;
  std::vector<double> targets = kDefaultTargets;
  std::vector<std::size_t> ks = kDefaultKs;
  bool include_unfiltered = true;
  std::uint64_t seed = 42;
  /// Optional corpus-format file whose rows replace the sampled queries.
  std::optional<std::filesystem::path> query_file;
};

/// One filter condition. The unfiltered condition has target 1, threshold
/// -inf and no mask.
struct FilterSpec {
  double target_sigma = 1.0;
  double threshold = -std::numeric_limits<double>::infinity();
  double realized_sigma = 1.0;
  bool unfiltered = true;
};

struct Workload {
  /// Corpus row of each sampled query; empty for external query files.
  std::vector<RowId> query_ids;
  QuerySet queries;
  std::vector<FilterSpec> filters;
  std::vector<std::size_t> ks;
  /// Targets whose realized selectivity is off by more than 10% relative.
  std::vector<std::string> warnings;

  std::size_t instance_count() const { return queries.size() * filters.size() * ks.size(); }
  std::size_t max_k() const;
  /// One entry per filter, null for the unfiltered condition.
  std::vector<std::optional<FilterMask>> build_masks(const Corpus& corpus) const;
};

/// Samples queries without replacement (seeded) and resolves each target to
/// the nearest attainable threshold. Filters are the targets in the given
/// order followed by the unfiltered condition.
Workload make_workload(const Corpus& corpus, const WorkloadOptions& options);

/// Exact ground truth for every (filter, query) pair at k = max_k().
GroundTruth workload_ground_truth(const Corpus& corpus, const Workload& workload);

// ---------------------------------------------------------------------------
// Recall
// ---------------------------------------------------------------------------

struct Recall {
  double recall = 0.0;      // hits / min(k, |GT|)
  double recall_eq1 = 0.0;  // hits / k
};

/// Hits are returned ids among the first min(k, |GT|) ground-truth ids, or
/// whose distance equals the ground truth's k-th distance. Only the first k
/// returned neighbors are counted. An empty ground truth gives recall 1.
Recall recall_at_k(std::span<const Neighbor> returned, std::span<const Neighbor> ground_truth,
                   std::size_t k);

// ---------------------------------------------------------------------------
// Experiment grid
// ---------------------------------------------------------------------------

/// A strategy as named in configs: a plan kind, optionally followed by a
/// modifier: "PreAnns:dual" for the dual pool, "Post:<e>" for a fixed
/// expansion.
struct StrategySpec {
  std::string label;
  StrategyPlan plan;
};
StrategySpec parse_strategy(const std::string& label);

struct RunConfig {
  std::string dataset = "synthetic";
  WorkloadOptions workload;
  std::vector<HnswParams> hnsw;
  std::vector<std::uint32_t> ef_search = {10, 100, 500};
  std::vector<IvfParams> ivf;
  std::vector<std::uint32_t> n_probe = {1, 10, 50};
  std::vector<StrategySpec> strategies;
  bool warmup = true;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_to_json(const RunConfig& config);

struct RunRow {
  std::string dataset;
  std::string index;
  std::uint32_t M = 0;
  std::uint32_t ef_construction = 0;
  std::uint32_t n_clusters = 0;
  std::string strategy;
  std::uint32_t search_param = 0;
  std::size_t k = 0;
  double target_sigma = 0.0;
  double realized_sigma = 0.0;
  std::size_t query_id = 0;
  double recall = 0.0;
  double recall_eq1 = 0.0;
  double latency_s = 0.0;
  double qps = 0.0;
  std::uint64_t dist_evals = 0;
  bool fallback_used = false;
  double build_time_s = 0.0;
};

struct RunOutput {
  std::vector<RunRow> rows;
  /// Grid cells that were not executed, with the reason.
  std::vector<std::string> skipped;
};

/// Callback receiving each row as soon as it is measured.
using RowSink = std::function<void(const RunRow&)>;

/// Runs every (index, search param, strategy, filter, k, query) cell. Each
/// query is timed on its own; the loop is single-threaded. `ground_truth`
/// must come from workload_ground_truth (or a file written from it).
RunOutput run_experiment(const Corpus& corpus, const Workload& workload,
                         const GroundTruth& ground_truth, std::span<const Index* const> indexes,
                         const RunConfig& config, const RowSink& sink = {});

/// Builds the HNSW and IVF configs listed in `config`.
std::vector<std::unique_ptr<Index>> build_indexes(const Corpus& corpus, const RunConfig& config);

inline constexpr std::string_view kResultsHeader =
    "dataset,index,M,ef_construction,n_clusters,strategy,search_param,k,target_sigma,"
    "realized_sigma,query_id,recall,recall_eq1,latency_s,qps,dist_evals,fallback_used,"
    "build_time_s";

std::string format_run_row(const RunRow& row);
void write_results_csv(std::span<const RunRow> rows, const std::filesystem::path& path);
std::vector<RunRow> read_results_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Summary
// ---------------------------------------------------------------------------

struct SummaryRow {
  std::string dataset;
  std::string index;
  std::uint32_t M = 0;
  std::uint32_t ef_construction = 0;
  std::uint32_t n_clusters = 0;
  std::string strategy;
  std::uint32_t search_param = 0;
  std::size_t k = 0;
  double target_sigma = 0.0;
  double realized_sigma = 0.0;
  std::size_t queries = 0;
  double mean_recall = 0.0;
  double mean_recall_eq1 = 0.0;
  double mean_latency_s = 0.0;
  double mean_qps = 0.0;
  double mean_dist_evals = 0.0;
  double fallback_rate = 0.0;
  double build_time_s = 0.0;
  bool pareto = false;
};

struct ParetoPoint {
  double recall = 0.0;
  double qps = 0.0;
};

/// Indices of the points not dominated in (recall, qps). A point dominates
/// another when it is no worse in both and strictly better in one.
std::vector<std::size_t> pareto_frontier(std::span<const ParetoPoint> points);

/// Means per configuration cell (everything except query_id), with the
/// Pareto flag computed among cells sharing (dataset, target_sigma, k).
/// InputError on empty input. Output is sorted by the grouping key.
std::vector<SummaryRow> summarize(std::span<const RunRow> rows);

inline constexpr std::string_view kSummaryHeader =
    "dataset,index,M,ef_construction,n_clusters,strategy,search_param,k,target_sigma,"
    "realized_sigma,queries,mean_recall,mean_recall_eq1,mean_latency_s,mean_qps,"
    "mean_dist_evals,fallback_rate,build_time_s,pareto";

void write_summary_csv(std::span<const SummaryRow> rows, const std::filesystem::path& path);

}  // namespace fanns
