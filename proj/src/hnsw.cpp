#include "fanns/hnsw.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <string>

#include "binary_io.hpp"
#include "fanns/errors.hpp"
#include "fanns/random.hpp"

namespace fanns {
namespace {

using Adjacency = std::vector<std::vector<RowId>>;

// Per-thread visited marks, cleared in O(1) by bumping the epoch.
class VisitedTable {
 public:
  void reset(std::size_t n) {
    if (tags_.size() != n) {
      tags_.assign(n, 0);
      epoch_ = 0;
    }
    if (++epoch_ == 0) {
      std::fill(tags_.begin(), tags_.end(), 0);
      epoch_ = 1;
    }
  }
  // Returns true the first time `id` is seen since the last reset.
  bool visit(RowId id) {
    if (tags_[id] == epoch_) return false;
    tags_[id] = epoch_;
    return true;
  }

 private:
  std::vector<std::uint32_t> tags_;
  std::uint32_t epoch_ = 0;
};

VisitedTable& visited_table(std::size_t n) {
  thread_local VisitedTable table;
  table.reset(n);
  return table;
}

// At most `capacity` unexpanded nodes; the farthest is evicted on overflow.
// Stored farthest-first so the nearest pops from the back.
class BoundedFrontier {
 public:
  explicit BoundedFrontier(std::size_t capacity) : capacity_(capacity) {
    items_.reserve(capacity + 1);
  }
  bool empty() const { return items_.empty(); }
  void push(const Neighbor& n) {
    if (items_.size() >= capacity_ && !closer(n, items_.front())) return;
    const auto farther_first = [](const Neighbor& a, const Neighbor& b) { return closer(b, a); };
    items_.insert(std::upper_bound(items_.begin(), items_.end(), n, farther_first), n);
    if (items_.size() > capacity_) items_.erase(items_.begin());
  }
  Neighbor pop() {
    const Neighbor n = items_.back();
    items_.pop_back();
    return n;
  }

 private:
  std::size_t capacity_;
  std::vector<Neighbor> items_;
};

// Unbounded min-queue over all admitted nodes.
class NavigationPool {
 public:
  bool empty() const { return queue_.empty(); }
  void push(const Neighbor& n) { queue_.push(n); }
  Neighbor pop() {
    const Neighbor n = queue_.top();
    queue_.pop();
    return n;
  }

 private:
  struct Farther {
    bool operator()(const Neighbor& a, const Neighbor& b) const { return closer(b, a); }
  };
  std::priority_queue<Neighbor, std::vector<Neighbor>, Farther> queue_;
};

struct AlwaysValid {
  bool operator()(RowId) const { return true; }
};

struct Tracer {
  SearchTelemetry* telemetry;
  std::vector<RowId>* visited;
  void on_visit(RowId id) const {
    ++telemetry->nodes_visited;
    if (visited != nullptr) visited->push_back(id);
  }
};

// Best-first traversal of one layer. `Frontier` decides whether invalid
// nodes compete with valid ones for expansion slots; `is_valid` is only
// consulted for nodes that would enter the result pool.
template <class Frontier, class Valid>
std::vector<Neighbor> traverse_layer(const Adjacency& adj, const DistanceComputer& dc,
                                     Neighbor entry, std::size_t ef, Frontier frontier,
                                     Valid&& is_valid, VisitedTable& visited, const Tracer& tracer) {
  TopK results(ef);
  visited.visit(entry.id);
  tracer.on_visit(entry.id);
  frontier.push(entry);
  if (is_valid(entry.id)) results.push(entry);

  while (!frontier.empty()) {
    const Neighbor current = frontier.pop();
    if (results.full() && closer(results.worst(), current)) break;
    for (const RowId nb : adj[current.id]) {
      if (!visited.visit(nb)) continue;
      tracer.on_visit(nb);
      const Neighbor candidate{nb, dc(nb)};
      ++tracer.telemetry->distance_evaluations;
      if (!results.admits(candidate)) continue;
      frontier.push(candidate);
      if (is_valid(nb)) results.push(candidate);
    }
  }
  return results.take_sorted();
}

std::vector<Neighbor> truncate(std::vector<Neighbor> v, std::size_t k) {
  if (v.size() > k) v.resize(k);
  return v;
}

void check_ef(std::uint32_t ef) {
  if (ef == 0) throw InputError("ef_search must be >= 1");
}

void check_k(std::size_t k) {
  if (k == 0) throw InputError("k must be >= 1");
}

}  // namespace

struct HnswIndex::Descent {
  Neighbor entry;
};

HnswIndex::Descent HnswIndex::descend(const DistanceComputer& dc,
                                      SearchTelemetry& telemetry) const {
  Neighbor cur{entry_point_, dc(entry_point_)};
  ++telemetry.distance_evaluations;
  for (std::uint32_t layer = max_level_; layer >= 1; --layer) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (const RowId nb : links_[layer][cur.id]) {
        const Neighbor candidate{nb, dc(nb)};
        ++telemetry.distance_evaluations;
        if (closer(candidate, cur)) {
          cur = candidate;
          changed = true;
        }
      }
    }
  }
  return {cur};
}

HnswIndex HnswIndex::build(const Corpus& corpus, const HnswParams& params) {
  if (params.M < 2) throw InputError("HNSW M must be >= 2");
  if (params.ef_construction < params.M) throw InputError("HNSW ef_construction must be >= M");
  const auto start = std::chrono::steady_clock::now();

  HnswIndex index;
  index.dim_ = corpus.dim();
  index.params_ = params;
  const std::size_t n = corpus.size();

  Rng rng(params.seed);
  const double ml = 1.0 / std::log(static_cast<double>(params.M));
  index.levels_.resize(n);
  std::uint32_t top_level = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double level = std::floor(-std::log(rng.uniform_open_closed()) * ml);
    index.levels_[i] = static_cast<std::uint8_t>(std::min(level, 255.0));
    top_level = std::max<std::uint32_t>(top_level, index.levels_[i]);
  }
  index.links_.assign(top_level + 1, Adjacency(n));

  SearchTelemetry scratch;
  const Tracer tracer{&scratch, nullptr};
  index.entry_point_ = 0;
  index.max_level_ = index.levels_[0];

  for (std::size_t i = 1; i < n; ++i) {
    const auto v = static_cast<RowId>(i);
    const std::uint32_t v_level = index.levels_[v];
    const DistanceComputer dc(corpus, corpus.row(v));

    Neighbor ep{index.entry_point_, dc(index.entry_point_)};
    for (std::uint32_t layer = index.max_level_; layer > v_level; --layer) {
      bool changed = true;
      while (changed) {
        changed = false;
        for (const RowId nb : index.links_[layer][ep.id]) {
          const Neighbor candidate{nb, dc(nb)};
          if (closer(candidate, ep)) {
            ep = candidate;
            changed = true;
          }
        }
      }
    }

    for (std::uint32_t layer = std::min(v_level, index.max_level_) + 1; layer-- > 0;) {
      Adjacency& adj = index.links_[layer];
      VisitedTable& visited = visited_table(n);
      std::vector<Neighbor> beam =
          traverse_layer(adj, dc, ep, params.ef_construction,
                         BoundedFrontier(params.ef_construction), AlwaysValid{}, visited, tracer);
      const std::size_t max_degree = layer == 0 ? 2 * params.M : params.M;
      const std::size_t take = std::min<std::size_t>(params.M, beam.size());
      auto& own = adj[v];
      own.clear();
      for (std::size_t j = 0; j < take; ++j) own.push_back(beam[j].id);

      for (std::size_t j = 0; j < take; ++j) {
        const RowId u = beam[j].id;
        auto& list = adj[u];
        list.push_back(v);
        if (list.size() > max_degree) {
          const DistanceComputer du(corpus, corpus.row(u));
          std::vector<Neighbor> scored;
          scored.reserve(list.size());
          for (const RowId x : list) scored.push_back({x, du(x)});
          std::sort(scored.begin(), scored.end(), closer);
          list.clear();
          for (std::size_t t = 0; t < max_degree; ++t) list.push_back(scored[t].id);
        }
      }
      ep = beam.front();
    }

    if (v_level > index.max_level_) {
      index.max_level_ = v_level;
      index.entry_point_ = v;
    }
  }

  index.build_seconds_ =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return index;
}

HnswIndex HnswIndex::from_graph(std::size_t dim, std::vector<Adjacency> layers, RowId entry_point,
                                const HnswParams& params) {
  if (layers.empty() || layers[0].empty()) throw InputError("graph needs a non-empty layer 0");
  const std::size_t n = layers[0].size();
  if (entry_point >= n) throw InputError("entry point out of range");
  HnswIndex index;
  index.dim_ = dim;
  index.params_ = params;
  index.entry_point_ = entry_point;
  index.max_level_ = static_cast<std::uint32_t>(layers.size() - 1);
  index.levels_.assign(n, 0);
  for (std::size_t layer = 0; layer < layers.size(); ++layer) {
    if (layers[layer].size() != n) throw InputError("every layer must list all nodes");
    for (std::size_t v = 0; v < n; ++v) {
      for (const RowId nb : layers[layer][v]) {
        if (nb >= n) throw InputError("edge target out of range");
      }
      if (!layers[layer][v].empty()) index.levels_[v] = static_cast<std::uint8_t>(layer);
    }
  }
  index.levels_[entry_point] = static_cast<std::uint8_t>(index.max_level_);
  index.links_ = std::move(layers);
  return index;
}

SearchResult HnswIndex::search(const Corpus& corpus, std::span<const float> query, std::size_t k,
                               std::uint32_t ef_search) const {
  check_compatible(corpus, query);
  check_k(k);
  check_ef(ef_search);
  const std::size_t width = ef_search;
  const DistanceComputer dc(corpus, query);
  SearchResult result;
  const Descent d = descend(dc, result.telemetry);
  const Tracer tracer{&result.telemetry, nullptr};
  result.neighbors = truncate(traverse_layer(links_[0], dc, d.entry, width,
                                             BoundedFrontier(width), AlwaysValid{},
                                             visited_table(size()), tracer),
                              k);
  return result;
}

SearchResult HnswIndex::search_prefilter(const Corpus& corpus, std::span<const float> query,
                                         std::size_t k, std::uint32_t ef_search,
                                         const FilterMask& mask) const {
  return search_prefilter(corpus, query, k, ef_search, mask, nullptr);
}

SearchResult HnswIndex::search_prefilter(const Corpus& corpus, std::span<const float> query,
                                         std::size_t k, std::uint32_t ef_search,
                                         const FilterMask& mask,
                                         std::vector<RowId>* visited) const {
  check_compatible(corpus, query);
  check_k(k);
  check_ef(ef_search);
  const std::size_t width = ef_search;
  if (mask.size() != size()) throw InputError("mask length does not match index size");
  const DistanceComputer dc(corpus, query);
  SearchResult result;
  const Descent d = descend(dc, result.telemetry);
  const Tracer tracer{&result.telemetry, visited};
  result.neighbors = truncate(
      traverse_layer(links_[0], dc, d.entry, width, BoundedFrontier(width),
                     [&mask](RowId id) { return mask.test(id); }, visited_table(size()), tracer),
      k);
  return result;
}

SearchResult HnswIndex::search_dual_pool(const Corpus& corpus, std::span<const float> query,
                                         std::size_t k, std::uint32_t ef_search,
                                         const FilterMask& mask) const {
  check_compatible(corpus, query);
  check_k(k);
  check_ef(ef_search);
  const std::size_t width = ef_search;
  if (mask.size() != size()) throw InputError("mask length does not match index size");
  const DistanceComputer dc(corpus, query);
  SearchResult result;
  const Descent d = descend(dc, result.telemetry);
  const Tracer tracer{&result.telemetry, nullptr};
  result.neighbors = truncate(
      traverse_layer(links_[0], dc, d.entry, width, NavigationPool{},
                     [&mask](RowId id) { return mask.test(id); }, visited_table(size()), tracer),
      k);
  return result;
}

SearchResult HnswIndex::search_raw(const Corpus& corpus, std::span<const float> query,
                                   std::size_t pool_size, std::uint32_t ef_search) const {
  check_compatible(corpus, query);
  check_k(pool_size);
  check_ef(ef_search);
  const DistanceComputer dc(corpus, query);
  SearchResult result;
  const Descent d = descend(dc, result.telemetry);
  const Tracer tracer{&result.telemetry, nullptr};
  const std::size_t width = std::max<std::size_t>(ef_search, pool_size);
  result.neighbors =
      truncate(traverse_layer(links_[0], dc, d.entry, width, BoundedFrontier(width), AlwaysValid{},
                              visited_table(size()), tracer),
               pool_size);
  return result;
}

SearchResult HnswIndex::search_runtime(const Corpus& corpus, std::span<const float> query,
                                       std::size_t k, std::uint32_t ef_search,
                                       const RowPredicate& predicate) const {
  check_compatible(corpus, query);
  check_k(k);
  check_ef(ef_search);
  const std::size_t width = ef_search;
  const DistanceComputer dc(corpus, query);
  SearchResult result;
  const Descent d = descend(dc, result.telemetry);
  const Tracer tracer{&result.telemetry, nullptr};
  std::uint64_t& calls = result.telemetry.predicate_invocations;
  result.neighbors = truncate(traverse_layer(links_[0], dc, d.entry, width,
                                             BoundedFrontier(width),
                                             [&](RowId id) {
                                               ++calls;
                                               return predicate(id);
                                             },
                                             visited_table(size()), tracer),
                              k);
  return result;
}

// "FHN1", u32 N, u32 d, u32 M, u32 ef_construction, u64 seed, u32 max_level,
// u32 entry, f64 build_seconds, N x u8 levels, then per layer 0..max_level:
// (N+1) x u32 offsets and the concatenated neighbor ids.
void HnswIndex::save(const std::filesystem::path& path) const {
  detail::BinaryWriter out(path);
  out.magic("FHN1");
  out.put(static_cast<std::uint32_t>(size()));
  out.put(static_cast<std::uint32_t>(dim_));
  out.put(params_.M);
  out.put(params_.ef_construction);
  out.put(params_.seed);
  out.put(max_level_);
  out.put(entry_point_);
  out.put(build_seconds_);
  out.array(std::span<const std::uint8_t>(levels_));
  for (const Adjacency& adj : links_) {
    std::vector<std::uint32_t> offsets(adj.size() + 1, 0);
    std::vector<RowId> ids;
    for (std::size_t v = 0; v < adj.size(); ++v) {
      ids.insert(ids.end(), adj[v].begin(), adj[v].end());
      offsets[v + 1] = static_cast<std::uint32_t>(ids.size());
    }
    out.array(std::span<const std::uint32_t>(offsets));
    out.array(std::span<const RowId>(ids));
  }
  out.finish();
}

HnswIndex HnswIndex::load(const std::filesystem::path& path) {
  detail::BinaryReader in(path);
  in.expect_magic("FHN1");
  HnswIndex index;
  const auto n = in.get<std::uint32_t>("node count");
  index.dim_ = in.get<std::uint32_t>("dimension");
  index.params_.M = in.get<std::uint32_t>("M");
  index.params_.ef_construction = in.get<std::uint32_t>("ef_construction");
  index.params_.seed = in.get<std::uint64_t>("seed");
  index.max_level_ = in.get<std::uint32_t>("max level");
  index.entry_point_ = in.get<std::uint32_t>("entry point");
  index.build_seconds_ = in.get<double>("build time");
  if (n == 0 || index.entry_point_ >= n || index.max_level_ > 255) {
    throw FormatError("'" + path.string() + "': inconsistent HNSW header");
  }
  index.levels_ = in.array<std::uint8_t>(n, "level table");
  index.links_.resize(index.max_level_ + 1);
  for (Adjacency& adj : index.links_) {
    const auto offsets = in.array<std::uint32_t>(std::uint64_t{n} + 1, "adjacency offsets");
    const auto ids = in.array<RowId>(offsets.back(), "adjacency ids");
    adj.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
      if (offsets[v] > offsets[v + 1] || offsets[v + 1] > ids.size()) {
        throw FormatError("'" + path.string() + "': corrupt adjacency offsets");
      }
      adj[v].assign(ids.begin() + offsets[v], ids.begin() + offsets[v + 1]);
      for (const RowId id : adj[v]) {
        if (id >= n) throw FormatError("'" + path.string() + "': edge target out of range");
      }
    }
  }
  in.expect_end();
  return index;
}

}  // namespace fanns
