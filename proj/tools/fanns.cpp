// Command-line frontend: gen, build, gt, run, gls, summarize.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "fanns/bench.hpp"
#include "fanns/corpus.hpp"
#include "fanns/errors.hpp"
#include "fanns/gls.hpp"
#include "fanns/hnsw.hpp"
#include "fanns/index.hpp"
#include "fanns/ivf.hpp"
#include "fanns/oracle.hpp"

namespace fs = std::filesystem;
using namespace fanns;

namespace {

enum ExitCode { kOk = 0, kRuntime = 1, kUsage = 2, kIo = 3, kFormat = 4, kConfig = 5, kInput = 6 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void warn(const std::string& msg) { fmt::print(stderr, "warning: {}\n", msg); }

// Refuse to write over any input file.
void check_output(const fs::path& out, std::initializer_list<const fs::path*> inputs) {
  for (const fs::path* in : inputs) {
    if (in == nullptr || in->empty()) continue;
    std::error_code ec;
    if (fs::exists(out) && fs::equivalent(out, *in, ec)) {
      throw UsageError("output '" + out.string() + "' would overwrite input '" + in->string() + "'");
    }
  }
}

// Workload / grid options shared by gt, run and gls.
struct GridFlags {
  std::string config_path;
  std::optional<std::size_t> n_queries;
  std::optional<std::uint64_t> seed;
  std::vector<double> targets;
  std::vector<std::size_t> ks;
  bool no_unfiltered = false;

  void attach(CLI::App* app) {
    app->add_option("--workload,--config", config_path, "Run-config JSON (workload and grid)");
    app->add_option("--n-queries", n_queries, "Number of sampled queries");
    app->add_option("--seed", seed, "Query sampling seed");
    app->add_option("--targets", targets, "Selectivity targets");
    app->add_option("--ks", ks, "k values");
    app->add_flag("--no-unfiltered", no_unfiltered, "Drop the unfiltered condition");
  }

  RunConfig resolve() const {
    RunConfig c = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (n_queries) c.workload.n_queries = *n_queries;
    if (seed) c.workload.seed = *seed;
    if (!targets.empty()) c.workload.targets = targets;
    if (!ks.empty()) c.workload.ks = ks;
    if (no_unfiltered) c.workload.include_unfiltered = false;
    return c;
  }
};

Workload workload_for(const Corpus& corpus, const RunConfig& config) {
  Workload w = make_workload(corpus, config.workload);
  for (const std::string& msg : w.warnings) warn(msg);
  return w;
}

// ---------------------------------------------------------------------------

struct GenArgs {
  std::size_t n = 0;
  std::size_t d = 0;
  std::uint64_t seed = 0;
  std::string attr_mode = "independent";
  double strength = 1.0;
  std::string metric = "cosine";
  fs::path out;
  fs::path attributes_csv;
};

void cmd_gen(const GenArgs& a) {
  SyntheticOptions o;
  o.n = a.n;
  o.dim = a.d;
  o.seed = a.seed;
  o.strength = a.strength;
  o.metric = parse_metric(a.metric);
  if (a.attr_mode == "independent") {
    o.attr_mode = AttributeMode::kIndependent;
  } else if (a.attr_mode == "cluster_correlated") {
    o.attr_mode = AttributeMode::kClusterCorrelated;
  } else {
    throw UsageError("--attr-mode must be independent or cluster_correlated");
  }
  const Corpus corpus = generate_synthetic(o);
  save_corpus(corpus, a.out);
  if (!a.attributes_csv.empty()) save_attribute_csv(corpus, a.attributes_csv);
}

struct BuildArgs {
  fs::path corpus;
  std::string index;
  std::uint32_t M = 16;
  std::uint32_t ef_construction = 100;
  std::uint32_t n_clusters = 0;
  std::uint32_t max_iters = 25;
  std::uint64_t seed = 42;
  fs::path out;
};

void cmd_build(const BuildArgs& a) {
  check_output(a.out, {&a.corpus});
  const Corpus corpus = load_corpus(a.corpus);
  if (a.index == "hnsw") {
    HnswIndex::build(corpus, {a.M, a.ef_construction, a.seed}).save(a.out);
  } else {
    if (a.n_clusters == 0) throw UsageError("--n-clusters is required for ivfflat");
    IvfIndex::build(corpus, {a.n_clusters, a.seed, a.max_iters}).save(a.out);
  }
}

struct GtArgs {
  fs::path corpus;
  GridFlags grid;
  fs::path out;
};

void cmd_gt(const GtArgs& a) {
  check_output(a.out, {&a.corpus});
  const Corpus corpus = load_corpus(a.corpus);
  const RunConfig config = a.grid.resolve();
  const Workload w = workload_for(corpus, config);
  save_ground_truth(workload_ground_truth(corpus, w), a.out);
}

struct RunArgs {
  fs::path corpus;
  std::vector<fs::path> index_files;
  GridFlags grid;
  std::vector<std::string> strategies;
  std::vector<std::uint32_t> ef_search;
  std::vector<std::uint32_t> n_probe;
  std::string dataset;
  fs::path gt;
  bool no_warmup = false;
  fs::path out;
};

void cmd_run(const RunArgs& a) {
  check_output(a.out, {&a.corpus, &a.gt});
  for (const fs::path& p : a.index_files) check_output(a.out, {&p});

  const Corpus corpus = load_corpus(a.corpus);
  RunConfig config = a.grid.resolve();
  if (!a.strategies.empty()) {
    config.strategies.clear();
    for (const std::string& s : a.strategies) config.strategies.push_back(parse_strategy(s));
  }
  if (!a.ef_search.empty()) config.ef_search = a.ef_search;
  if (!a.n_probe.empty()) config.n_probe = a.n_probe;
  if (!a.dataset.empty()) config.dataset = a.dataset;
  if (a.no_warmup) config.warmup = false;
  if (config.strategies.empty()) throw ConfigError("no strategies given (--strategies or config)");

  std::vector<std::unique_ptr<Index>> owned;
  if (!a.index_files.empty()) {
    for (const fs::path& p : a.index_files) owned.push_back(load_index(p));
  } else {
    if (config.hnsw.empty() && config.ivf.empty()) {
      throw ConfigError("no indexes: pass --index-files or list hnsw/ivf configs");
    }
  }
  const Workload w = workload_for(corpus, config);
  std::optional<GroundTruth> gt;
  if (!a.gt.empty()) gt = load_ground_truth(a.gt);

  if (owned.empty()) owned = build_indexes(corpus, config);
  if (!gt) gt = workload_ground_truth(corpus, w);

  std::vector<const Index*> indexes;
  for (const auto& p : owned) indexes.push_back(p.get());
  const RunOutput result = run_experiment(corpus, w, *gt, indexes, config);
  for (const std::string& s : result.skipped) warn("skipped " + s);
  write_results_csv(result.rows, a.out);
}

struct GlsArgs {
  fs::path corpus;
  GridFlags grid;
  fs::path index;
  std::size_t k_neighborhood = kDefaultNeighborhood;
  std::size_t sample_size = 1000;
  std::uint32_t search_param = 0;
  std::uint64_t sample_seed = 1;
  fs::path out;
};

void cmd_gls(const GlsArgs& a) {
  check_output(a.out, {&a.corpus, &a.index});
  const Corpus corpus = load_corpus(a.corpus);
  std::unique_ptr<Index> index;
  if (!a.index.empty()) index = load_index(a.index);
  const RunConfig config = a.grid.resolve();
  const Workload w = workload_for(corpus, config);

  std::vector<FilterMask> masks;
  for (const FilterSpec& f : w.filters) {
    if (!f.unfiltered) masks.push_back(build_mask(corpus, f.threshold));
  }
  if (masks.empty()) throw ConfigError("GLS needs at least one selectivity target");

  GlsReport report;
  if (!index) {
    std::vector<const FilterMask*> ptrs;
    for (const FilterMask& m : masks) ptrs.push_back(&m);
    report = gls_batch(corpus, w.queries, ptrs, a.k_neighborhood);
  } else {
    const std::uint32_t param = a.search_param != 0 ? a.search_param
                                : index->kind() == IndexKind::kHnsw
                                    ? static_cast<std::uint32_t>(a.k_neighborhood)
                                    : 1;
    for (std::size_t q = 0; q < w.queries.size(); ++q) {
      for (const FilterMask& m : masks) {
        if (m.empty()) {
          ++report.skipped_empty;
          continue;
        }
        GlsEntry e = gls_approx(corpus, *index, w.queries[q], m, a.k_neighborhood,
                                std::min(a.sample_size, corpus.size()), a.sample_seed, param);
        e.query_id = q;
        report.entries.push_back(e);
      }
    }
    if (!report.entries.empty()) report.rho_bar = gls_mean(report.entries);
  }
  if (report.skipped_empty > 0) warn(fmt::format("{} empty filters skipped", report.skipped_empty));
  write_gls_csv(report, a.out);
  fmt::print("rho_bar {}\n", report.rho_bar);
}

struct SummarizeArgs {
  fs::path results;
  fs::path out;
};

void cmd_summarize(const SummarizeArgs& a) {
  check_output(a.out, {&a.results});
  const std::vector<RunRow> rows = read_results_csv(a.results);
  write_summary_csv(summarize(rows), a.out);
}

int report(const char* prefix, const std::exception& e, int code) {
  fmt::print(stderr, "{}: {}\n", prefix, e.what());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Filtered approximate nearest-neighbor search toolkit"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic corpus");
  g->add_option("--n", gen.n, "Rows")->required();
  g->add_option("--d", gen.d, "Dimensions")->required();
  g->add_option("--seed", gen.seed, "Seed")->required();
  g->add_option("--attr-mode", gen.attr_mode, "independent | cluster_correlated");
  g->add_option("--strength", gen.strength, "Correlation strength in [0, 1]");
  g->add_option("--metric", gen.metric, "l2 | ip | cosine");
  g->add_option("--out", gen.out, "Corpus file")->required();
  g->add_option("--attributes-csv", gen.attributes_csv, "Also write id,attribute CSV");

  BuildArgs build;
  auto* b = app.add_subcommand("build", "Build an index");
  b->add_option("--corpus", build.corpus)->required();
  b->add_option("--index", build.index)->required()->check(CLI::IsMember({"hnsw", "ivfflat"}));
  b->add_option("--M", build.M, "HNSW max out-degree");
  b->add_option("--ef-construction", build.ef_construction, "HNSW construction beam");
  b->add_option("--n-clusters", build.n_clusters, "IVF list count");
  b->add_option("--max-iters", build.max_iters, "IVF k-means iterations");
  b->add_option("--seed", build.seed);
  b->add_option("--out", build.out)->required();

  GtArgs gt;
  auto* t = app.add_subcommand("gt", "Compute exact ground truth for a workload");
  t->add_option("--corpus", gt.corpus)->required();
  gt.grid.attach(t);
  t->add_option("--out", gt.out)->required();

  RunArgs run;
  auto* r = app.add_subcommand("run", "Run the experiment grid");
  r->add_option("--corpus", run.corpus)->required();
  r->add_option("--index-files", run.index_files, "Prebuilt index files");
  run.grid.attach(r);
  r->add_option("--strategies", run.strategies, "PreAnns[:dual] PreExact Post[:e] Runtime AdaptiveAuto");
  r->add_option("--ef-search", run.ef_search);
  r->add_option("--n-probe", run.n_probe);
  r->add_option("--dataset", run.dataset);
  r->add_option("--gt", run.gt, "Ground-truth file from `gt`");
  r->add_flag("--no-warmup", run.no_warmup);
  r->add_option("--out", run.out)->required();

  GlsArgs gls;
  auto* s = app.add_subcommand("gls", "Per-query global-local selectivity");
  s->add_option("--corpus", gls.corpus)->required();
  gls.grid.attach(s);
  s->add_option("--index", gls.index, "Estimate with this index instead of exactly");
  s->add_option("--k-neighborhood", gls.k_neighborhood);
  s->add_option("--sample-size", gls.sample_size, "Rows sampled for sigma_g (with --index)");
  s->add_option("--sample-seed", gls.sample_seed);
  s->add_option("--search-param", gls.search_param, "ef_search or n_probe (with --index)");
  s->add_option("--out", gls.out)->required();

  SummarizeArgs sum;
  auto* m = app.add_subcommand("summarize", "Aggregate a results CSV");
  m->add_option("--results", sum.results)->required();
  m->add_option("--out", sum.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fmt::print(stderr, "usage error: {}\n", e.what());
    return kUsage;
  }

  try {
    if (*g) cmd_gen(gen);
    if (*b) cmd_build(build);
    if (*t) cmd_gt(gt);
    if (*r) cmd_run(run);
    if (*s) cmd_gls(gls);
    if (*m) cmd_summarize(sum);
  } catch (const UsageError& e) {
    return report("usage error", e, kUsage);
  } catch (const IoError& e) {
    return report("io error", e, kIo);
  } catch (const FormatError& e) {
    return report("format error", e, kFormat);
  } catch (const ConfigError& e) {
    return report("config error", e, kConfig);
  } catch (const InputError& e) {
    return report("input error", e, kInput);
  } catch (const std::exception& e) {
    return report("error", e, kRuntime);
  }
  return kOk;
}
