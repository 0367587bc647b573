// Timestamp arithmetic for the systematic scan and the shared memoization
// state used by the backward-deduction engines.
//
// The scan updates vertex i(t) = t mod n at time t, with the nonnegative
// residue convention so that negative timestamps are well-defined.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include <absl/container/flat_hash_map.h>

namespace cttp {

using Timestamp = int64_t;

// Query or recursion exceeded the configured work budget; the owning
// session is poisoned afterwards.
struct BudgetAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr Timestamp kTimestampGuard = Timestamp{1} << 62;

inline void check_timestamp(Timestamp t) {
  if (t >= kTimestampGuard || t <= -kTimestampGuard)
    throw std::logic_error("timestamp magnitude exceeds 2^62 guard");
}

// Vertex updated at time t: the nonnegative residue of t mod n.
inline int32_t scan_vertex(Timestamp t, int32_t n) {
  check_timestamp(t);
  Timestamp r = t % n;
  if (r < 0) r += n;
  return static_cast<int32_t>(r);
}

// Last time t' <= t at which the scan updates vertex u.
inline Timestamp pred(Timestamp t, int32_t u, int32_t n) {
  check_timestamp(t);
  Timestamp r = (t - u) % n;
  if (r < 0) r += n;
  return t - r;
}

struct CostStats {
  uint64_t resolve_calls = 0;        // resolves that ran an evaluation (memo misses)
  uint64_t check_calls = 0;          // checks that ran an evaluation (past all shortcuts)
  uint64_t evaluate_iterations = 0;  // proposal-loop iterations inside evaluations
  uint64_t coin_flips = 0;           // neighborhood-coin flips fed to the Bernoulli factory
  uint64_t rng_draws = 0;            // raw 64-bit draws from the session stream
};

// Surviving color list: dynamic array with swap-removal plus a color ->
// position index, so membership tests and removals are O(1) for any q.
class ColorList {
 public:
  explicit ColorList(int32_t q) : items_(q), pos_(q) {
    for (int32_t c = 0; c < q; ++c) {
      items_[c] = c;
      pos_[c] = c;
    }
  }

  int64_t size() const { return static_cast<int64_t>(items_.size()); }
  int32_t at(int64_t idx) const { return items_[idx]; }
  bool contains(int32_t c) const { return pos_[c] >= 0; }

  void remove(int32_t c) {
    if (!contains(c)) throw std::logic_error("ColorList: removing absent color");
    int32_t idx = pos_[c];
    int32_t last = items_.back();
    items_[idx] = last;
    pos_[last] = idx;
    items_.pop_back();
    pos_[c] = -1;
  }

 private:
  std::vector<int32_t> items_;
  std::vector<int32_t> pos_;
};

// Optional vertex pinning, shared immutably across sessions/replicas.
// pins[v] == -1 means unpinned.
using PinTable = std::vector<int32_t>;
using PinTablePtr = std::shared_ptr<const PinTable>;

// Open-addressing map from timestamps to outcomes, tuned for the engines'
// access pattern: write-once keys, no per-key erase, and a clear() per
// sampling replica. Slots are generation-stamped so clear() is O(1); stale
// generations read as empty.
class TimestampValueMap {
 public:
  TimestampValueMap() { slots_.resize(kInitialSlots); }

  std::optional<int32_t> find(Timestamp t) const {
    size_t i = index(t);
    while (true) {
      const Slot& s = slots_[i];
      if (s.gen != gen_) return std::nullopt;
      if (s.key == t) return s.value;
      i = (i + 1) & (slots_.size() - 1);
    }
  }

  // False if the key is already present.
  bool emplace(Timestamp t, int32_t value) {
    if ((size_ + 1) * 10 >= slots_.size() * 7) grow();
    size_t i = index(t);
    while (true) {
      Slot& s = slots_[i];
      if (s.gen != gen_) {
        s = Slot{t, gen_, value};
        ++size_;
        return true;
      }
      if (s.key == t) return false;
      i = (i + 1) & (slots_.size() - 1);
    }
  }

  void clear() {
    size_ = 0;
    if (++gen_ == 0) {  // generation counter wrapped: physically reset once
      for (auto& s : slots_) s.gen = 0;
      gen_ = 1;
    }
  }

  size_t size() const { return size_; }

 private:
  struct Slot {
    Timestamp key = 0;
    uint32_t gen = 0;
    int32_t value = 0;
  };
  static constexpr size_t kInitialSlots = 64;

  size_t index(Timestamp t) const {
    // splitmix64 finalizer; slots_.size() is a power of two
    uint64_t z = static_cast<uint64_t>(t) + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return static_cast<size_t>(z) & (slots_.size() - 1);
  }

  void grow() {
    std::vector<Slot> old;
    old.swap(slots_);
    slots_.resize(old.size() * 2);
    const uint32_t live = gen_;
    gen_ = 1;
    size_ = 0;
    for (const auto& s : old)
      if (s.gen == live) emplace(s.key, s.value);
    // entries were reinserted under gen 1; continue from there
  }

  std::vector<Slot> slots_;
  uint32_t gen_ = 1;
  size_t size_ = 0;
};

// The global maps of the backward deduction: m (resolved update outcomes,
// write-once) and lists (surviving colors, shrink-only; an absent key is
// the implicit full set [q]).
struct MemoState {
  TimestampValueMap m;
  absl::flat_hash_map<Timestamp, ColorList> lists;
  PinTablePtr pins;
  CostStats stats;

  std::optional<int32_t> memo_get(Timestamp t) const { return m.find(t); }

  void memo_set(Timestamp t, int32_t value) {
    if (!lists.empty())
      if (auto it = lists.find(t); it != lists.end() && !it->second.contains(value))
        throw std::logic_error("memo_set: value not in surviving list");
    if (!m.emplace(t, value)) throw std::logic_error("memo_set: double set");
  }

  // Snapshot of L(t); the implicit full set [q] when never shrunk.
  std::vector<int32_t> list_get(Timestamp t, int32_t q) const {
    auto it = lists.find(t);
    if (it == lists.end()) {
      std::vector<int32_t> full(q);
      for (int32_t c = 0; c < q; ++c) full[c] = c;
      return full;
    }
    std::vector<int32_t> out;
    out.reserve(static_cast<size_t>(it->second.size()));
    for (int64_t i = 0; i < it->second.size(); ++i) out.push_back(it->second.at(i));
    return out;
  }

  int64_t list_size(Timestamp t, int32_t q) const {
    if (lists.empty()) return q;
    auto it = lists.find(t);
    return it == lists.end() ? q : it->second.size();
  }

  int32_t list_at(Timestamp t, int32_t /*q*/, int64_t idx) const {
    if (lists.empty()) return static_cast<int32_t>(idx);
    auto it = lists.find(t);
    return it == lists.end() ? static_cast<int32_t>(idx) : it->second.at(idx);
  }

  bool list_contains(Timestamp t, int32_t q, int32_t c) const {
    if (lists.empty()) return c >= 0 && c < q;
    auto it = lists.find(t);
    return it == lists.end() ? (c >= 0 && c < q) : it->second.contains(c);
  }

  // Materializes the list from [q] on first removal.
  void list_remove(Timestamp t, int32_t q, int32_t c) {
    auto [it, inserted] = lists.try_emplace(t, q);
    (void)inserted;
    it->second.remove(c);
  }

  int32_t pin_of(int32_t v) const { return pins ? (*pins)[v] : -1; }

  void clear() {
    m.clear();
    if (!lists.empty()) lists.clear();
    stats = CostStats{};
  }
};

}  // namespace cttp
