#include "fanns/strategy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "fanns/errors.hpp"
#include "fanns/oracle.hpp"

namespace fanns {
namespace {

constexpr struct {
  PlanKind kind;
  std::string_view name;
} kPlanNames[] = {
    {PlanKind::kPreAnns, "PreAnns"}, {PlanKind::kPreExact, "PreExact"}, {PlanKind::kPost, "Post"},
    {PlanKind::kRuntime, "Runtime"}, {PlanKind::kAdaptiveAuto, "AdaptiveAuto"},
};

const Index& require_index(const Index* index, PlanKind kind) {
  if (index == nullptr) {
    throw ConfigError("plan " + std::string(plan_kind_name(kind)) + " needs an index");
  }
  return *index;
}

SearchResult run_exact(const Corpus& corpus, std::span<const float> query, std::size_t k,
                       const FilterMask* mask) {
  SearchResult r;
  const DistanceComputer dc(corpus, query);
  r.neighbors = exact_knn(dc, k, mask, &r.telemetry.distance_evaluations);
  r.telemetry.nodes_visited = r.telemetry.distance_evaluations;
  return r;
}

SearchResult run_pre_anns(const Index& index, const Corpus& corpus, std::span<const float> query,
                          std::size_t k, const FilterMask* mask, std::uint32_t param, bool dual) {
  if (dual && !index.supports_dual_pool()) {
    throw ConfigError("dual-pool pre-filtering is not available for " +
                      std::string(index_kind_name(index.kind())));
  }
  if (mask == nullptr) return index.search(corpus, query, k, param);
  return dual ? index.search_dual_pool(corpus, query, k, param, *mask)
              : index.search_prefilter(corpus, query, k, param, *mask);
}

SearchResult run_post(const Index& index, const Corpus& corpus, std::span<const float> query,
                      std::size_t k, const FilterMask* mask, double expansion,
                      std::uint32_t param) {
  if (mask == nullptr) return index.search(corpus, query, k, param);
  const double e = expansion > 0.0 ? expansion : default_expansion(mask->global_selectivity(),
                                                                     corpus.size(), k);
  const auto pool = std::min<std::size_t>(
      corpus.size(), static_cast<std::size_t>(std::ceil(e * static_cast<double>(k))));
  SearchResult r = index.search_raw(corpus, query, std::max<std::size_t>(pool, 1), param);
  std::erase_if(r.neighbors, [mask](const Neighbor& n) { return !mask->test(n.id); });
  if (r.neighbors.size() > k) r.neighbors.resize(k);
  return r;
}

SearchResult run_runtime(const Index& index, const Corpus& corpus, std::span<const float> query,
                         std::size_t k, const QueryFilter& filter, std::uint32_t param) {
  if (filter.mask == nullptr) return index.search(corpus, query, k, param);
  const double threshold = filter.threshold;
  return index.search_runtime(corpus, query, k, param, [&corpus, threshold](RowId id) {
    return corpus.attribute(id) >= threshold;
  });
}

}  // namespace

std::string_view plan_kind_name(PlanKind kind) {
  for (const auto& entry : kPlanNames) {
    if (entry.kind == kind) return entry.name;
  }
  return "unknown";
}

PlanKind parse_plan_kind(std::string_view name) {
  for (const auto& entry : kPlanNames) {
    if (entry.name == name) return entry.kind;
  }
  throw ConfigError("unknown strategy '" + std::string(name) +
                    "' (expected PreAnns, PreExact, Post, Runtime or AdaptiveAuto)");
}

void StrategyPlan::validate() const {
  if (expansion != 0.0 && !(expansion >= 1.0)) {
    throw ConfigError("post-filter expansion must be >= 1, got " + std::to_string(expansion));
  }
  if (!(fallback_ratio_threshold > 0.0 && fallback_ratio_threshold < 1.0)) {
    throw ConfigError("fallback ratio threshold must lie in (0, 1)");
  }
}

double default_expansion(double sigma_g, std::size_t n, std::size_t k) {
  if (!(sigma_g > 0.0)) throw InputError("selectivity must be positive");
  const double cap = std::max(1.0, static_cast<double>(n) / static_cast<double>(k));
  return std::min(std::ceil(1.0 / sigma_g), cap);
}

ExecutionRecord execute(const Index* index, const Corpus& corpus, std::span<const float> query,
                        std::size_t k, const QueryFilter& filter, const StrategyPlan& plan,
                        std::uint32_t search_param) {
  plan.validate();
  if (k == 0) throw InputError("k must be >= 1");
  const FilterMask* mask = filter.mask;
  if (mask != nullptr) {
    if (mask->size() != corpus.size()) throw InputError("mask length does not match corpus size");
    if (mask->empty()) throw InputError("filter mask selects no rows");
  }

  const auto start = std::chrono::steady_clock::now();
  ExecutionRecord rec;
  rec.plan_chosen = plan.kind;
  SearchResult r;
  switch (plan.kind) {
    case PlanKind::kPreAnns:
      r = run_pre_anns(require_index(index, plan.kind), corpus, query, k, mask, search_param,
                       plan.dual_pool);
      break;
    case PlanKind::kPreExact:
      r = run_exact(corpus, query, k, mask);
      break;
    case PlanKind::kPost:
      r = run_post(require_index(index, plan.kind), corpus, query, k, mask, plan.expansion,
                   search_param);
      break;
    case PlanKind::kRuntime:
      r = run_runtime(require_index(index, plan.kind), corpus, query, k, filter, search_param);
      break;
    case PlanKind::kAdaptiveAuto: {
      const Index& idx = require_index(index, plan.kind);
      const double sigma = mask == nullptr ? 1.0 : mask->global_selectivity();
      if (1.0 - sigma > plan.fallback_ratio_threshold) {
        rec.plan_chosen = PlanKind::kPreExact;
        r = run_exact(corpus, query, k, mask);
        r.telemetry.fallback_used = true;
        break;
      }
      rec.plan_chosen = PlanKind::kPreAnns;
      r = run_pre_anns(idx, corpus, query, k, mask, search_param, idx.supports_dual_pool());
      const std::size_t want = std::min(k, mask == nullptr ? corpus.size() : mask->valid_count());
      if (plan.safety_net && r.neighbors.size() < want) {
        SearchResult exact = run_exact(corpus, query, k, mask);
        exact.telemetry.distance_evaluations += r.telemetry.distance_evaluations;
        exact.telemetry.centroid_evaluations += r.telemetry.centroid_evaluations;
        exact.telemetry.nodes_visited += r.telemetry.nodes_visited;
        exact.telemetry.fallback_used = true;
        r = std::move(exact);
      }
      break;
    }
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  rec.latency_seconds = std::max(elapsed, 1e-9);
  rec.results = std::move(r.neighbors);
  rec.telemetry = r.telemetry;
  return rec;
}

std::uint64_t predicate_invocations(const ExecutionRecord& record) {
  if (record.plan_chosen != PlanKind::kRuntime) {
    throw ConfigError("predicate invocations are only recorded by the Runtime plan");
  }
  return record.telemetry.predicate_invocations;
}

}  // namespace fanns
