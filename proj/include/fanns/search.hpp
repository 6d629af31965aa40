#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "fanns/corpus.hpp"

namespace fanns {

/// One ranked result: row id and its ordering key (smaller is closer).
struct Neighbor {
  RowId id = 0;
  float distance = 0.0F;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Strict total order used everywhere: by key, then by ascending id.
inline bool closer(const Neighbor& a, const Neighbor& b) {
  return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
}

struct SearchTelemetry {
  std::uint64_t distance_evaluations = 0;
  /// IVF only: query-to-centroid evaluations, kept apart from row evaluations.
  std::uint64_t centroid_evaluations = 0;
  std::uint64_t nodes_visited = 0;
  /// Runtime filtering only: number of lazy predicate calls.
  std::uint64_t predicate_invocations = 0;
  bool fallback_used = false;
};

struct SearchResult {
  std::vector<Neighbor> neighbors;
  SearchTelemetry telemetry;
};

/// Bounded collection of the `capacity` closest neighbors seen so far.
class TopK {
 public:
  explicit TopK(std::size_t capacity) : capacity_(capacity) { heap_.reserve(capacity + 1); }

  bool full() const { return heap_.size() >= capacity_; }
  std::size_t size() const { return heap_.size(); }
  bool empty() const { return heap_.empty(); }
  /// Worst retained neighbor; only meaningful when non-empty.
  const Neighbor& worst() const { return heap_.front(); }

  /// Would `n` be retained if pushed?
  bool admits(const Neighbor& n) const { return capacity_ > 0 && (!full() || closer(n, worst())); }

  void push(const Neighbor& n) {
    if (!admits(n)) return;
    heap_.push_back(n);
    std::push_heap(heap_.begin(), heap_.end(), closer);
    if (heap_.size() > capacity_) {
      std::pop_heap(heap_.begin(), heap_.end(), closer);
      heap_.pop_back();
    }
  }

  /// Ascending order; leaves the collection empty.
  std::vector<Neighbor> take_sorted() {
    std::sort_heap(heap_.begin(), heap_.end(), closer);
    return std::move(heap_);
  }

 private:
  std::size_t capacity_;
  std::vector<Neighbor> heap_;  // max-heap under `closer`
};

}  // namespace fanns
