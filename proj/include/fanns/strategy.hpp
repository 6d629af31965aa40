#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "fanns/corpus.hpp"
#include "fanns/index.hpp"
#include "fanns/search.hpp"

namespace fanns {

enum class PlanKind : std::uint8_t { kPreAnns, kPreExact, kPost, kRuntime, kAdaptiveAuto };

/// "PreAnns", "PreExact", "Post", "Runtime", "AdaptiveAuto".
std::string_view plan_kind_name(PlanKind kind);
PlanKind parse_plan_kind(std::string_view name);

struct StrategyPlan {
  PlanKind kind = PlanKind::kPreAnns;
  /// Post only: candidate pool = expansion * k. 0 selects ceil(1 / sigma_g)
  /// capped at N / k.
  double expansion = 0.0;
  double fallback_ratio_threshold = 0.93;
  bool safety_net = true;
  /// PreAnns on HNSW: use the dual-pool traversal instead of the single pool.
  bool dual_pool = false;

  void validate() const;
};

/// A filter as both a materialized bitset and the predicate it came from:
/// attribute >= threshold. A null mask means the query is unfiltered.
struct QueryFilter {
  const FilterMask* mask = nullptr;
  double threshold = 0.0;
};

struct ExecutionRecord {
  PlanKind plan_chosen = PlanKind::kPreAnns;
  std::vector<Neighbor> results;
  SearchTelemetry telemetry;
  double latency_seconds = 0.0;
};

/// Runs one filtered query. `index` may be null only for PreExact.
/// `search_param` is ef_search (HNSW) or n_probe (IVF).
/// Throws ConfigError for unsupported (plan, index) pairs and InputError for
/// an empty mask.
ExecutionRecord execute(const Index* index, const Corpus& corpus, std::span<const float> query,
                        std::size_t k, const QueryFilter& filter, const StrategyPlan& plan,
                        std::uint32_t search_param);

/// Post-filter pool multiplier used when the plan leaves it unset.
double default_expansion(double sigma_g, std::size_t n, std::size_t k);

/// Lazy predicate calls of a Runtime record; ConfigError for other plans.
std::uint64_t predicate_invocations(const ExecutionRecord& record);

}  // namespace fanns
