#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rjch/hashing.hpp"

namespace rjch {

enum class Strategy { CH, CH_BL, CH_BL_REHASH, RJ_CH };

const char* to_string(Strategy s);
std::optional<Strategy> strategy_from_string(std::string_view name);

inline constexpr std::size_t kUnboundedCapacity = std::numeric_limits<std::size_t>::max();

// C = ceil((1 + epsilon) * n / k)
std::size_t capacity_for(std::size_t n_expected, std::size_t k, double epsilon);

struct BiasSpec {
  std::uint32_t hotspot = 0;
  double probability = 0.0;
};

struct RingParams {
  int address_bits = 20;
  std::uint64_t seed = 1;
  Strategy strategy = Strategy::RJ_CH;
  std::size_t capacity = kUnboundedCapacity;  // per bin; unbounded for plain CH
  int virtual_copies = 0;                     // extra slots per bin
  std::optional<BiasSpec> object_bias;        // applies to object hashing only
};

struct PlacementOutcome {
  int bin = -1;                        // ordinal of the chosen bin
  std::uint64_t bin_searches = 0;      // bins inspected, full or not
  std::uint64_t slot_steps = 0;        // array indices examined, empty ones included
  bool rehash_fallback = false;        // CH_BL_REHASH cycle guard fired
};

struct RelocationStats {
  std::size_t objects = 0;
  std::uint64_t bin_searches = 0;
  std::uint64_t slot_steps = 0;
};

enum class RemovalMode { kLazy, kEager };

struct RingSaturatedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OverflowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoAliveBinError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The slot-array ring. Bins and objects hash into an address space of
// 2^address_bits positions; the placement strategy decides how an object
// travels from its hashed position to a bin. Slot storage is sparse (an
// ordered map over occupied indices plus a dense index for probe lookups);
// clockwise step counts are computed as wrap-around distances, which equals
// literally examining every index in between.
class RingTable {
 public:
  struct Bin {
    std::string id;
    std::vector<std::string> keys;
    std::unordered_map<std::string, std::size_t> key_pos;
    bool alive = true;
    bool failed = false;  // keeps its slots but is skipped as if full
    struct SlotSource {
      std::uint32_t word = 0;  // full 32-bit hash word behind the slot
      std::uint32_t attempt = 0;
      std::uint8_t word_ix = 0;
    };
    std::vector<std::uint32_t> slots;  // home slot first
    std::vector<SlotSource> slot_sources;

    std::size_t load() const { return keys.size(); }
  };

  explicit RingTable(RingParams params);

  // --- bins ---
  int add_bin(const std::string& id);
  RelocationStats remove_bin(const std::string& id, RemovalMode mode);
  void set_failed(const std::string& id, bool failed);
  void set_failed(int ordinal, bool failed);
  // Pads a bin to capacity with synthetic keys; used to freeze ring states.
  void fill_bin(const std::string& id);

  // --- objects ---
  PlacementOutcome insert(const std::string& key);
  PlacementOutcome plan(const std::string& key) const;  // insert without committing
  std::optional<int> lookup_ordinal(const std::string& key) const;
  std::optional<std::string> lookup(const std::string& key) const;
  bool remove_object(const std::string& key);

  // --- observers ---
  const RingParams& params() const { return params_; }
  std::size_t alive_bins() const { return alive_count_; }
  std::size_t full_bins() const { return full_count_; }
  std::size_t fillable_bins() const { return fillable_count_; }
  std::size_t total_load() const { return total_load_; }
  std::size_t occupied_slots() const { return slots_.size(); }
  std::vector<std::size_t> load_vector() const;  // alive bins, ordinal order
  double full_fraction() const;
  int ordinal_of(const std::string& id) const;  // -1 when unknown
  const Bin& bin(int ordinal) const { return bins_[static_cast<std::size_t>(ordinal)]; }
  std::size_t bin_count() const { return bins_.size(); }
  bool is_full(int ordinal) const {
    return bins_[static_cast<std::size_t>(ordinal)].load() >= params_.capacity;
  }
  // Arc mass feeding each alive bin: number of addresses whose clockwise walk
  // reaches that bin first, summed over its slots. Zero-arc only when the bin
  // owns no slots.
  std::vector<std::uint64_t> arc_mass() const;

  // Same bins, keys and statuses with slot positions rescaled to a new
  // address width (the stored 32-bit words are re-truncated).
  RingTable remapped(int address_bits) const;

  // --- cache-style ops (trace simulator); duplicates across bins allowed ---
  bool bin_contains(int ordinal, const std::string& key) const;
  void cache_add(int ordinal, const std::string& key);
  bool cache_erase(int ordinal, const std::string& key);
  void cache_clear(int ordinal);

  // --- traversal ---
  enum class WalkAction { kTake, kSkip, kAbort };
  struct WalkResult {
    int bin = -1;
    std::uint64_t bin_searches = 0;
    std::uint64_t slot_steps = 0;
    bool exhausted = false;        // budget or full lap without a decision
    bool aborted = false;          // visitor stopped the walk
    bool rehash_fallback = false;
  };

  // Visits every alive bin in the strategy's visitation order for `key`.
  // The visitor sees the bin ordinal and answers kTake to stop there, kSkip to
  // treat the bin as full and move on, kAbort to stop with no bin. Walks with
  // no natural stopping point terminate after `max_probe_attempts` rehash
  // rounds (probe strategies) or one full lap (clockwise strategies).
  template <class Visitor>
  WalkResult walk(std::string_view key, Visitor&& visit,
                  std::uint64_t max_probe_attempts) const {
    if (params_.strategy == Strategy::RJ_CH) {
      return walk_probe(key, visit, max_probe_attempts);
    }
    return walk_clockwise(key, visit);
  }

  // Attempt budget that keeps the spurious-termination probability of a
  // bounded lookup negligible at the ring's address density.
  std::uint64_t lookup_probe_budget() const;

  struct TimedPlan {
    PlacementOutcome outcome;
    std::uint64_t nanoseconds = 0;
  };
  // plan() with the clockwise walks carried out index by index instead of by
  // distance arithmetic, timed with a monotonic clock. Step counts are
  // identical to plan(); only the traversal mechanics differ.
  TimedPlan timed_plan(const std::string& key) const;

 private:
  static constexpr int kDenseBitsLimit = 24;

  template <class Visitor>
  WalkResult walk_clockwise(std::string_view key, Visitor&& visit) const {
    WalkResult r;
    if (slots_.empty()) {
      r.exhausted = true;
      return r;
    }
    const std::uint64_t mask = address_mask();
    std::uint64_t pos = first_probe_slot(key);
    const std::size_t occupied = slots_.size();
    std::size_t visited = 0;
    std::uint64_t rehashes = 0;
    const bool rehashing = params_.strategy == Strategy::CH_BL_REHASH;
    bool jumps_left = rehashing;
    while (true) {
      auto it = slots_.lower_bound(pos);
      if (it == slots_.end()) it = slots_.begin();
      const std::uint64_t slot = it->first;
      r.slot_steps += ((slot - pos) & mask) + 1;
      r.bin_searches += 1;
      const int ord = it->second;
      const WalkAction action = visit(ord);
      if (action == WalkAction::kTake) {
        r.bin = ord;
        return r;
      }
      if (action == WalkAction::kAbort) {
        r.aborted = true;
        return r;
      }
      if (jumps_left) {
        if (rehashes < occupied) {
          ++rehashes;
          pos = rehash_of_slot(bins_[static_cast<std::size_t>(ord)].slots.front());
          continue;
        }
        // cycle guard: fall back to a plain clockwise walk
        jumps_left = false;
        r.rehash_fallback = true;
        visited = 0;
      }
      pos = (slot + 1) & mask;
      if (++visited >= occupied) {
        r.exhausted = true;
        return r;
      }
    }
  }

  template <class Visitor>
  WalkResult walk_probe(std::string_view key, Visitor&& visit,
                        std::uint64_t max_attempts) const {
    WalkResult r;
    if (slots_.empty()) {
      r.exhausted = true;
      return r;
    }
    for (std::uint64_t attempt = 0; attempt < max_attempts; ++attempt) {
      const Digest128 d = object_probe_digest(key, attempt);
      const auto words = d.words();
      for (int w = 0; w < 4; ++w) {
        const std::uint32_t slot = slot_from_word(words[w], params_.address_bits);
        ++r.slot_steps;
        const int ord = slot_owner(slot);
        if (ord < 0) continue;
        ++r.bin_searches;
        const WalkAction action = visit(ord);
        if (action == WalkAction::kTake) {
          r.bin = ord;
          return r;
        }
        if (action == WalkAction::kAbort) {
          r.aborted = true;
          return r;
        }
      }
    }
    r.exhausted = true;
    return r;
  }

  std::uint64_t address_mask() const {
    return (std::uint64_t{1} << params_.address_bits) - 1;
  }
  std::uint64_t address_size() const { return std::uint64_t{1} << params_.address_bits; }

  Digest128 object_probe_digest(std::string_view base, std::uint64_t attempt) const;
  std::uint64_t first_probe_slot(std::string_view key) const;
  std::uint32_t rehash_of_slot(std::uint32_t slot) const;
  int slot_owner(std::uint32_t slot) const {
    if (!dense_.empty()) return dense_[slot];
    auto it = sparse_.find(slot);
    return it == sparse_.end() ? -1 : it->second;
  }

  void occupy_slot(std::uint32_t slot, int ordinal);
  void vacate_slot(std::uint32_t slot);
  bool slot_free(std::uint32_t slot) const { return slot_owner(slot) < 0; }
  std::uint32_t place_copy(const std::string& base, int ordinal, Bin::SlotSource& source);
  void commit(const std::string& key, int ordinal);
  void uncommit_key(int ordinal, const std::string& key);
  void check_can_place() const;
  PlacementOutcome plan_unchecked(const std::string& key) const;
  void refresh_fillable(int ordinal, bool was_fillable);

  RingParams params_;
  std::vector<Bin> bins_;
  std::unordered_map<std::string, int> bin_ordinals_;
  std::map<std::uint64_t, int> slots_;             // ordered: clockwise walks
  std::unordered_map<std::uint32_t, int> sparse_;  // O(1) probe lookups
  std::vector<std::int32_t> dense_;                // when address_bits <= 24
  std::unordered_map<std::string, int> key_index_;
  std::size_t alive_count_ = 0;
  std::size_t full_count_ = 0;      // alive bins at capacity
  std::size_t fillable_count_ = 0;  // alive, not failed, below capacity
  std::size_t total_load_ = 0;
  std::uint64_t fill_serial_ = 0;  // synthetic key counter for fill_bin
};

// Convenience constructor used by the simulators: k bins named by the caller,
// capacity from the (n, k, epsilon) formula, collisions resolved by rehashing.
RingTable build_ring(const std::vector<std::string>& bin_ids, double epsilon,
                     std::size_t n_expected, int virtual_copies, Strategy strategy,
                     std::uint64_t seed, int address_bits = 20);

}  // namespace rjch
