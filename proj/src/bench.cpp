#include "fanns/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <tuple>
#include <unordered_set>

#include <fmt/format.h>

#include "fanns/errors.hpp"
#include "fanns/random.hpp"

namespace fanns {

// ---------------------------------------------------------------------------
// Workload

std::size_t Workload::max_k() const {
  return ks.empty() ? 0 : *std::max_element(ks.begin(), ks.end());
}

std::vector<std::optional<FilterMask>> Workload::build_masks(const Corpus& corpus) const {
  std::vector<std::optional<FilterMask>> masks;
  masks.reserve(filters.size());
  for (const FilterSpec& f : filters) {
    if (f.unfiltered) {
      masks.emplace_back(std::nullopt);
    } else {
      masks.emplace_back(build_mask(corpus, f.threshold));
    }
  }
  return masks;
}

Workload make_workload(const Corpus& corpus, const WorkloadOptions& options) {
  if (options.ks.empty()) throw InputError("workload needs at least one k");
  for (const std::size_t k : options.ks) {
    if (k == 0) throw InputError("k values must be >= 1");
  }
  if (options.targets.empty() && !options.include_unfiltered) {
    throw InputError("workload needs at least one filter condition");
  }
  if (options.n_queries == 0) throw InputError("workload needs at least one query");

  Workload w;
  w.ks = options.ks;
  if (options.query_file) {
    const Corpus external = load_corpus(*options.query_file);
    if (external.dim() != corpus.dim()) {
      throw InputError("query file dimension " + std::to_string(external.dim()) +
                       " does not match corpus dimension " + std::to_string(corpus.dim()));
    }
    if (options.n_queries > external.size()) {
      throw InputError("query file holds " + std::to_string(external.size()) + " rows, " +
                       std::to_string(options.n_queries) + " requested");
    }
    const auto v = external.vectors();
    w.queries.dim = corpus.dim();
    w.queries.data.assign(v.begin(), v.begin() + options.n_queries * corpus.dim());
  } else {
    if (options.n_queries > corpus.size()) {
      throw InputError("n_queries (" + std::to_string(options.n_queries) +
                       ") exceeds corpus size (" + std::to_string(corpus.size()) + ")");
    }
    std::vector<RowId> ids(corpus.size());
    std::iota(ids.begin(), ids.end(), RowId{0});
    Rng rng(options.seed);
    for (std::size_t i = 0; i < options.n_queries; ++i) {
      std::swap(ids[i], ids[i + rng.below(ids.size() - i)]);
    }
    ids.resize(options.n_queries);
    w.query_ids = ids;
    w.queries.dim = corpus.dim();
    w.queries.data.reserve(ids.size() * corpus.dim());
    for (const RowId id : ids) {
      const auto row = corpus.row(id);
      w.queries.data.insert(w.queries.data.end(), row.begin(), row.end());
    }
  }

  for (const double target : options.targets) {
    FilterSpec f;
    f.unfiltered = false;
    f.target_sigma = target;
    f.threshold = threshold_for_selectivity(corpus, target);
    const auto attrs = corpus.attributes();
    const auto passing = std::count_if(attrs.begin(), attrs.end(),
                                       [&f](double a) { return a >= f.threshold; });
    f.realized_sigma = static_cast<double>(passing) / static_cast<double>(corpus.size());
    if (std::abs(f.realized_sigma - target) > 0.1 * target) {
      w.warnings.push_back(fmt::format("target selectivity {} is not attainable; using {}",
                                       target, f.realized_sigma));
    }
    w.filters.push_back(f);
  }
  if (options.include_unfiltered) w.filters.push_back(FilterSpec{});
  return w;
}

GroundTruth workload_ground_truth(const Corpus& corpus, const Workload& workload) {
  const auto masks = workload.build_masks(corpus);
  std::vector<const FilterMask*> ptrs;
  ptrs.reserve(masks.size());
  for (const auto& m : masks) ptrs.push_back(m ? &*m : nullptr);
  return batch_ground_truth(corpus, workload.queries, workload.max_k(), ptrs);
}

// ---------------------------------------------------------------------------
// Recall

Recall recall_at_k(std::span<const Neighbor> returned, std::span<const Neighbor> ground_truth,
                   std::size_t k) {
  if (k == 0) throw InputError("k must be >= 1");
  const std::size_t denom = std::min(k, ground_truth.size());
  if (denom == 0) return {1.0, 0.0};
  std::unordered_set<RowId> truth;
  for (std::size_t i = 0; i < denom; ++i) truth.insert(ground_truth[i].id);
  const float kth = ground_truth[denom - 1].distance;
  std::size_t hits = 0;
  const std::size_t considered = std::min(k, returned.size());
  for (std::size_t i = 0; i < considered; ++i) {
    if (truth.count(returned[i].id) != 0 || returned[i].distance == kth) ++hits;
  }
  hits = std::min(hits, denom);
  return {static_cast<double>(hits) / static_cast<double>(denom),
          static_cast<double>(hits) / static_cast<double>(k)};
}

// ---------------------------------------------------------------------------
// Experiment

std::vector<std::unique_ptr<Index>> build_indexes(const Corpus& corpus, const RunConfig& config) {
  std::vector<std::unique_ptr<Index>> out;
  for (const HnswParams& p : config.hnsw) {
    out.push_back(std::make_unique<HnswIndex>(HnswIndex::build(corpus, p)));
  }
  for (const IvfParams& p : config.ivf) {
    out.push_back(std::make_unique<IvfIndex>(IvfIndex::build(corpus, p)));
  }
  return out;
}

namespace {

void check_ground_truth(const Workload& w, const GroundTruth& gt) {
  if (gt.num_queries != w.queries.size() ||
      gt.rows.size() != w.queries.size() * w.filters.size() || gt.k_max < w.max_k()) {
    throw ConfigError(fmt::format(
        "ground truth ({} queries, {} rows, k_max {}) does not match the workload "
        "({} queries, {} filters, max k {})",
        gt.num_queries, gt.rows.size(), gt.k_max, w.queries.size(), w.filters.size(), w.max_k()));
  }
}

void fill_index_columns(const Index& index, RunRow& row) {
  row.index = std::string(index_kind_name(index.kind()));
  row.build_time_s = index.build_seconds();
  if (const auto* h = dynamic_cast<const HnswIndex*>(&index)) {
    row.M = h->params().M;
    row.ef_construction = h->params().ef_construction;
  } else if (const auto* v = dynamic_cast<const IvfIndex*>(&index)) {
    row.n_clusters = static_cast<std::uint32_t>(v->n_clusters());
  }
}

}  // namespace

RunOutput run_experiment(const Corpus& corpus, const Workload& workload,
                         const GroundTruth& ground_truth, std::span<const Index* const> indexes,
                         const RunConfig& config, const RowSink& sink) {
  check_ground_truth(workload, ground_truth);
  if (config.strategies.empty()) throw ConfigError("no strategies configured");
  for (const Index* index : indexes) {
    if (index == nullptr || index->size() != corpus.size() || index->dim() != corpus.dim()) {
      throw ConfigError("index does not match the corpus");
    }
  }
  const auto masks = workload.build_masks(corpus);
  RunOutput out;

  // Untimed pass so the first measured query does not pay for cold pages.
  if (config.warmup) {
    for (const Index* index : indexes) {
      for (std::size_t q = 0; q < workload.queries.size(); ++q) {
        (void)index->search(corpus, workload.queries[q], 1, 1);
      }
    }
  }

  for (const Index* index : indexes) {
    RunRow base;
    base.dataset = config.dataset;
    fill_index_columns(*index, base);
    const bool is_ivf = index->kind() == IndexKind::kIvfFlat;
    const auto& params = is_ivf ? config.n_probe : config.ef_search;
    if (params.empty()) {
      out.skipped.push_back(base.index + ": no search parameters configured");
      continue;
    }
    for (const std::uint32_t param : params) {
      if (param == 0 || (is_ivf && param > static_cast<const IvfIndex*>(index)->n_clusters())) {
        out.skipped.push_back(fmt::format("{}: search parameter {} out of range", base.index, param));
        continue;
      }
      for (const StrategySpec& s : config.strategies) {
        if (s.plan.kind == PlanKind::kPreAnns && s.plan.dual_pool && !index->supports_dual_pool()) {
          out.skipped.push_back(
              fmt::format("{} param {}: strategy {} not supported", base.index, param, s.label));
          continue;
        }
        for (std::size_t f = 0; f < workload.filters.size(); ++f) {
          const FilterSpec& spec = workload.filters[f];
          const QueryFilter filter{masks[f] ? &*masks[f] : nullptr, spec.threshold};
          for (const std::size_t k : workload.ks) {
            for (std::size_t q = 0; q < workload.queries.size(); ++q) {
              const ExecutionRecord rec =
                  execute(index, corpus, workload.queries[q], k, filter, s.plan, param);
              const Recall r = recall_at_k(rec.results, ground_truth.row(f, q), k);
              RunRow row = base;
              row.strategy = s.label;
              row.search_param = param;
              row.k = k;
              row.target_sigma = spec.target_sigma;
              row.realized_sigma = spec.realized_sigma;
              row.query_id = workload.query_ids.empty() ? q : workload.query_ids[q];
              row.recall = r.recall;
              row.recall_eq1 = r.recall_eq1;
              row.latency_s = rec.latency_seconds;
              row.qps = 1.0 / rec.latency_seconds;
              row.dist_evals = rec.telemetry.distance_evaluations;
              row.fallback_used = rec.telemetry.fallback_used;
              if (sink) sink(row);
              out.rows.push_back(std::move(row));
            }
          }
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Results CSV

std::string format_run_row(const RunRow& r) {
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}", r.dataset, r.index,
                     r.M, r.ef_construction, r.n_clusters, r.strategy, r.search_param, r.k,
                     r.target_sigma, r.realized_sigma, r.query_id, r.recall, r.recall_eq1,
                     r.latency_s, r.qps, r.dist_evals, r.fallback_used ? 1 : 0, r.build_time_s);
}

void write_results_csv(std::span<const RunRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << kResultsHeader << '\n';
  for (const RunRow& r : rows) out << format_run_row(r) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

namespace {

class FieldParser {
 public:
  FieldParser(const std::filesystem::path& path, std::size_t line) : path_(path), line_(line) {}

  template <class T>
  T number(std::string_view field, const char* name) const {
    T value{};
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
      fail(fmt::format("bad {} '{}'", name, field));
    }
    return value;
  }

  // from_chars does not accept "inf"; std::stod does.
  double real(std::string_view field, const char* name) const {
    if (field == "inf") return std::numeric_limits<double>::infinity();
    if (field == "-inf") return -std::numeric_limits<double>::infinity();
    return number<double>(field, name);
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError(fmt::format("'{}' line {}: {}", path_.string(), line_, what));
  }

 private:
  const std::filesystem::path& path_;
  std::size_t line_;
};

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::vector<RunRow> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw FormatError("'" + path.string() + "': empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kResultsHeader) throw FormatError("'" + path.string() + "': unexpected header");

  std::vector<RunRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const FieldParser p(path, line_no);
    const auto f = split(line);
    if (f.size() != 18) p.fail(fmt::format("expected 18 fields, found {}", f.size()));
    RunRow r;
    r.dataset = std::string(f[0]);
    r.index = std::string(f[1]);
    r.M = p.number<std::uint32_t>(f[2], "M");
    r.ef_construction = p.number<std::uint32_t>(f[3], "ef_construction");
    r.n_clusters = p.number<std::uint32_t>(f[4], "n_clusters");
    r.strategy = std::string(f[5]);
    r.search_param = p.number<std::uint32_t>(f[6], "search_param");
    r.k = p.number<std::size_t>(f[7], "k");
    r.target_sigma = p.real(f[8], "target_sigma");
    r.realized_sigma = p.real(f[9], "realized_sigma");
    r.query_id = p.number<std::size_t>(f[10], "query_id");
    r.recall = p.real(f[11], "recall");
    r.recall_eq1 = p.real(f[12], "recall_eq1");
    r.latency_s = p.real(f[13], "latency_s");
    r.qps = p.real(f[14], "qps");
    r.dist_evals = p.number<std::uint64_t>(f[15], "dist_evals");
    const auto fb = p.number<int>(f[16], "fallback_used");
    if (fb != 0 && fb != 1) p.fail("fallback_used must be 0 or 1");
    r.fallback_used = fb == 1;
    r.build_time_s = p.real(f[17], "build_time_s");
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Summary

std::vector<std::size_t> pareto_frontier(std::span<const ParetoPoint> points) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < points.size() && !dominated; ++j) {
      const ParetoPoint& a = points[j];
      const ParetoPoint& b = points[i];
      dominated = a.recall >= b.recall && a.qps >= b.qps && (a.recall > b.recall || a.qps > b.qps);
    }
    if (!dominated) out.push_back(i);
  }
  return out;
}

std::vector<SummaryRow> summarize(std::span<const RunRow> rows) {
  if (rows.empty()) throw InputError("nothing to summarize");
  using Key = std::tuple<std::string, std::string, std::uint32_t, std::uint32_t, std::uint32_t,
                         double, std::size_t, std::string, std::uint32_t>;
  std::map<Key, SummaryRow> groups;
  for (const RunRow& r : rows) {
    const Key key{r.dataset,      r.index, r.M, r.ef_construction, r.n_clusters,
                  r.target_sigma, r.k,     r.strategy, r.search_param};
    SummaryRow& s = groups[key];
    if (s.queries == 0) {
      s.dataset = r.dataset;
      s.index = r.index;
      s.M = r.M;
      s.ef_construction = r.ef_construction;
      s.n_clusters = r.n_clusters;
      s.strategy = r.strategy;
      s.search_param = r.search_param;
      s.k = r.k;
      s.target_sigma = r.target_sigma;
      s.build_time_s = r.build_time_s;
    }
    ++s.queries;
    s.realized_sigma += r.realized_sigma;
    s.mean_recall += r.recall;
    s.mean_recall_eq1 += r.recall_eq1;
    s.mean_latency_s += r.latency_s;
    s.mean_qps += r.qps;
    s.mean_dist_evals += static_cast<double>(r.dist_evals);
    s.fallback_rate += r.fallback_used ? 1.0 : 0.0;
  }

  std::vector<SummaryRow> out;
  out.reserve(groups.size());
  for (auto& [key, s] : groups) {
    const auto n = static_cast<double>(s.queries);
    s.realized_sigma /= n;
    s.mean_recall /= n;
    s.mean_recall_eq1 /= n;
    s.mean_latency_s /= n;
    s.mean_qps /= n;
    s.mean_dist_evals /= n;
    s.fallback_rate /= n;
    out.push_back(s);
  }

  std::map<std::tuple<std::string, double, std::size_t>, std::vector<std::size_t>> panels;
  for (std::size_t i = 0; i < out.size(); ++i) {
    panels[{out[i].dataset, out[i].target_sigma, out[i].k}].push_back(i);
  }
  for (const auto& [panel, members] : panels) {
    std::vector<ParetoPoint> pts;
    pts.reserve(members.size());
    for (const std::size_t i : members) pts.push_back({out[i].mean_recall, out[i].mean_qps});
    for (const std::size_t j : pareto_frontier(pts)) out[members[j]].pareto = true;
  }
  return out;
}

void write_summary_csv(std::span<const SummaryRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << kSummaryHeader << '\n';
  for (const SummaryRow& s : rows) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", s.dataset,
                       s.index, s.M, s.ef_construction, s.n_clusters, s.strategy, s.search_param,
                       s.k, s.target_sigma, s.realized_sigma, s.queries, s.mean_recall,
                       s.mean_recall_eq1, s.mean_latency_s, s.mean_qps, s.mean_dist_evals,
                       s.fallback_rate, s.build_time_s, s.pareto ? 1 : 0);
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace fanns
