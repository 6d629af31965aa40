#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fanns/bench.hpp"
#include "fanns/errors.hpp"

namespace fanns {
namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (allowed.count(key) == 0) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
T get_as(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("'" + std::string(key) + "' in " + where + " has the wrong type");
  }
}

template <class T>
void read_opt(const json& obj, const char* key, T& out, const std::string& where) {
  if (obj.contains(key)) out = get_as<T>(obj, key, where);
}

WorkloadOptions parse_workload(const json& j) {
  const std::string where = "workload";
  reject_unknown(j, {"n_queries", "seed", "targets", "ks", "include_unfiltered", "query_file"},
                 where);
  WorkloadOptions w;
  read_opt(j, "n_queries", w.n_queries, where);
  read_opt(j, "seed", w.seed, where);
  read_opt(j, "targets", w.targets, where);
  read_opt(j, "ks", w.ks, where);
  read_opt(j, "include_unfiltered", w.include_unfiltered, where);
  if (j.contains("query_file")) w.query_file = get_as<std::string>(j, "query_file", where);
  for (const double t : w.targets) {
    if (!(t > 0.0 && t <= 1.0)) throw ConfigError("selectivity targets must lie in (0, 1]");
  }
  for (const std::size_t k : w.ks) {
    if (k == 0) throw ConfigError("k values must be >= 1");
  }
  return w;
}

HnswParams parse_hnsw(const json& j) {
  const std::string where = "hnsw entry";
  reject_unknown(j, {"M", "ef_construction", "seed"}, where);
  HnswParams p;
  read_opt(j, "M", p.M, where);
  read_opt(j, "ef_construction", p.ef_construction, where);
  read_opt(j, "seed", p.seed, where);
  if (p.M < 2 || p.ef_construction < p.M) {
    throw ConfigError("hnsw entries need M >= 2 and ef_construction >= M");
  }
  return p;
}

IvfParams parse_ivf(const json& j) {
  const std::string where = "ivf entry";
  reject_unknown(j, {"n_clusters", "seed", "max_iters"}, where);
  IvfParams p;
  read_opt(j, "n_clusters", p.n_clusters, where);
  read_opt(j, "seed", p.seed, where);
  read_opt(j, "max_iters", p.max_iters, where);
  if (p.n_clusters == 0) throw ConfigError("ivf entries need n_clusters >= 1");
  return p;
}

void check_dataset_name(const std::string& name) {
  if (name.empty() || name.find_first_of(",\"\r\n") != std::string::npos) {
    throw ConfigError("dataset name must be non-empty and free of commas, quotes and newlines");
  }
}

}  // namespace

StrategySpec parse_strategy(const std::string& label) {
  StrategySpec s;
  s.label = label;
  const auto colon = label.find(':');
  s.plan.kind = parse_plan_kind(std::string_view(label).substr(0, colon));
  if (colon != std::string::npos) {
    const std::string mod = label.substr(colon + 1);
    if (s.plan.kind == PlanKind::kPreAnns && mod == "dual") {
      s.plan.dual_pool = true;
    } else if (s.plan.kind == PlanKind::kPost) {
      std::size_t used = 0;
      try {
        s.plan.expansion = std::stod(mod, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != mod.size() || mod.empty()) {
        throw ConfigError("bad post-filter expansion in '" + label + "'");
      }
    } else {
      throw ConfigError("unknown modifier in strategy '" + label + "'");
    }
  }
  s.plan.validate();
  return s;
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("run config is not valid JSON: ") + e.what());
  }
  const std::string where = "run config";
  reject_unknown(j, {"dataset", "workload", "hnsw", "ef_search", "ivf", "n_probe", "strategies",
                     "warmup"},
                 where);
  RunConfig c;
  read_opt(j, "dataset", c.dataset, where);
  check_dataset_name(c.dataset);
  if (j.contains("workload")) c.workload = parse_workload(j.at("workload"));
  if (j.contains("hnsw")) {
    if (!j.at("hnsw").is_array()) throw ConfigError("'hnsw' must be an array");
    for (const json& e : j.at("hnsw")) c.hnsw.push_back(parse_hnsw(e));
  }
  if (j.contains("ivf")) {
    if (!j.at("ivf").is_array()) throw ConfigError("'ivf' must be an array");
    for (const json& e : j.at("ivf")) c.ivf.push_back(parse_ivf(e));
  }
  read_opt(j, "ef_search", c.ef_search, where);
  read_opt(j, "n_probe", c.n_probe, where);
  read_opt(j, "warmup", c.warmup, where);
  if (j.contains("strategies")) {
    for (const std::string& s : get_as<std::vector<std::string>>(j, "strategies", where)) {
      c.strategies.push_back(parse_strategy(s));
    }
  }
  for (const std::uint32_t v : c.ef_search) {
    if (v == 0) throw ConfigError("ef_search values must be >= 1");
  }
  for (const std::uint32_t v : c.n_probe) {
    if (v == 0) throw ConfigError("n_probe values must be >= 1");
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

std::string run_config_to_json(const RunConfig& c) {
  json j;
  j["dataset"] = c.dataset;
  json w;
  w["n_queries"] = c.workload.n_queries;
  w["seed"] = c.workload.seed;
  w["targets"] = c.workload.targets;
  w["ks"] = c.workload.ks;
  w["include_unfiltered"] = c.workload.include_unfiltered;
  if (c.workload.query_file) w["query_file"] = c.workload.query_file->string();
  j["workload"] = w;
  j["hnsw"] = json::array();
  for (const HnswParams& p : c.hnsw) {
    j["hnsw"].push_back({{"M", p.M}, {"ef_construction", p.ef_construction}, {"seed", p.seed}});
  }
  j["ef_search"] = c.ef_search;
  j["ivf"] = json::array();
  for (const IvfParams& p : c.ivf) {
    j["ivf"].push_back({{"n_clusters", p.n_clusters}, {"seed", p.seed}, {"max_iters", p.max_iters}});
  }
  j["n_probe"] = c.n_probe;
  j["strategies"] = json::array();
  for (const StrategySpec& s : c.strategies) j["strategies"].push_back(s.label);
  j["warmup"] = c.warmup;
  return j.dump(2);
}

}  // namespace fanns
