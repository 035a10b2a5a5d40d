#include "rjch/ring.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace rjch {

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::CH: return "CH";
    case Strategy::CH_BL: return "CH_BL";
    case Strategy::CH_BL_REHASH: return "CH_BL_REHASH";
    case Strategy::RJ_CH: return "RJ_CH";
  }
  return "?";
}

std::optional<Strategy> strategy_from_string(std::string_view name) {
  if (name == "CH") return Strategy::CH;
  if (name == "CH_BL") return Strategy::CH_BL;
  if (name == "CH_BL_REHASH") return Strategy::CH_BL_REHASH;
  if (name == "RJ_CH") return Strategy::RJ_CH;
  return std::nullopt;
}

std::size_t capacity_for(std::size_t n_expected, std::size_t k, double epsilon) {
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  if (epsilon < 0) throw std::invalid_argument("epsilon must be >= 0");
  const double c = std::ceil((1.0 + epsilon) * static_cast<double>(n_expected) /
                             static_cast<double>(k));
  return static_cast<std::size_t>(c);
}

namespace {

constexpr char kRehashTag = '~';
constexpr std::uint64_t kInsertAttemptGuard = std::uint64_t{1} << 40;

std::string copy_base(const std::string& id, int copy) {
  if (copy == 0) return id;
  return id + "+" + std::to_string(copy);
}

}  // namespace

RingTable::RingTable(RingParams params) : params_(params) {
  check_address_bits(params_.address_bits);
  if (params_.virtual_copies < 0) throw std::invalid_argument("virtual copies must be >= 0");
  if (params_.object_bias) {
    const double p = params_.object_bias->probability;
    if (p < 0 || p > 1) throw std::invalid_argument("bias probability must be in [0, 1]");
  }
  if (params_.address_bits <= kDenseBitsLimit) {
    dense_.assign(address_size(), -1);
  }
}

Digest128 RingTable::object_probe_digest(std::string_view base, std::uint64_t attempt) const {
  if (!params_.object_bias || params_.object_bias->probability <= 0) {
    return probe_digest(params_.seed, base, attempt);
  }
  return biased_probe_digest(params_.seed, base, attempt, params_.object_bias->hotspot,
                             params_.address_bits, params_.object_bias->probability);
}

std::uint64_t RingTable::first_probe_slot(std::string_view key) const {
  const Digest128 d = object_probe_digest(key, 0);
  return slot_from_word(d.words()[0], params_.address_bits);
}

std::uint32_t RingTable::rehash_of_slot(std::uint32_t slot) const {
  char buf[16];
  buf[0] = kRehashTag;
  auto [end, ec] = std::to_chars(buf + 1, buf + sizeof(buf), slot);
  (void)ec;
  const Digest128 d =
      digest(params_.seed, std::string_view(buf, static_cast<std::size_t>(end - buf)));
  return slot_from_word(d.words()[0], params_.address_bits);
}

void RingTable::occupy_slot(std::uint32_t slot, int ordinal) {
  slots_.emplace(slot, ordinal);
  sparse_.emplace(slot, ordinal);
  if (!dense_.empty()) dense_[slot] = ordinal;
}

void RingTable::vacate_slot(std::uint32_t slot) {
  slots_.erase(slot);
  sparse_.erase(slot);
  if (!dense_.empty()) dense_[slot] = -1;
}

std::uint32_t RingTable::place_copy(const std::string& base, int ordinal,
                                    Bin::SlotSource& source) {
  for (std::uint32_t attempt = 0;; ++attempt) {
    const Digest128 d = probe_digest(params_.seed, base, attempt);
    const auto words = d.words();
    for (std::uint8_t w = 0; w < 4; ++w) {
      const std::uint32_t slot = slot_from_word(words[w], params_.address_bits);
      if (slot_free(slot)) {
        occupy_slot(slot, ordinal);
        source = {words[w], attempt, w};
        return slot;
      }
    }
  }
}

int RingTable::add_bin(const std::string& id) {
  if (bin_ordinals_.contains(id)) throw std::invalid_argument("duplicate bin id: " + id);
  const std::size_t copies = static_cast<std::size_t>(params_.virtual_copies) + 1;
  if (slots_.size() + copies > address_size()) throw RingSaturatedError("ring saturated");
  const int ordinal = static_cast<int>(bins_.size());
  Bin b;
  b.id = id;
  b.slots.reserve(copies);
  b.slot_sources.resize(copies);
  bins_.push_back(std::move(b));
  bin_ordinals_.emplace(id, ordinal);
  Bin& nb = bins_.back();
  for (std::size_t c = 0; c < copies; ++c) {
    nb.slots.push_back(place_copy(copy_base(id, static_cast<int>(c)), ordinal,
                                  nb.slot_sources[c]));
  }
  ++alive_count_;
  if (nb.load() < params_.capacity) {
    ++fillable_count_;
  } else {
    ++full_count_;
  }
  return ordinal;
}

void RingTable::refresh_fillable(int ordinal, bool was_fillable) {
  const Bin& b = bins_[static_cast<std::size_t>(ordinal)];
  const bool now = b.alive && !b.failed && b.load() < params_.capacity;
  if (was_fillable && !now) --fillable_count_;
  if (!was_fillable && now) ++fillable_count_;
}

void RingTable::commit(const std::string& key, int ordinal) {
  Bin& b = bins_[static_cast<std::size_t>(ordinal)];
  const bool was_fillable = b.alive && !b.failed && b.load() < params_.capacity;
  const bool was_full = b.load() >= params_.capacity;
  b.key_pos.emplace(key, b.keys.size());
  b.keys.push_back(key);
  ++total_load_;
  key_index_[key] = ordinal;
  if (!was_full && b.load() >= params_.capacity && b.alive) ++full_count_;
  refresh_fillable(ordinal, was_fillable);
}

void RingTable::uncommit_key(int ordinal, const std::string& key) {
  Bin& b = bins_[static_cast<std::size_t>(ordinal)];
  auto it = b.key_pos.find(key);
  if (it == b.key_pos.end()) return;
  const bool was_fillable = b.alive && !b.failed && b.load() < params_.capacity;
  const bool was_full = b.load() >= params_.capacity;
  const std::size_t pos = it->second;
  const std::size_t last = b.keys.size() - 1;
  if (pos != last) {
    b.keys[pos] = std::move(b.keys[last]);
    b.key_pos[b.keys[pos]] = pos;
  }
  b.keys.pop_back();
  b.key_pos.erase(it);
  --total_load_;
  auto gi = key_index_.find(key);
  if (gi != key_index_.end() && gi->second == ordinal) key_index_.erase(gi);
  if (was_full && b.load() < params_.capacity && b.alive) --full_count_;
  refresh_fillable(ordinal, was_fillable);
}

void RingTable::check_can_place() const {
  if (alive_count_ == 0) throw NoAliveBinError("no alive bin");
  if (fillable_count_ == 0) throw OverflowError("overflow: all bins full");
}

PlacementOutcome RingTable::plan_unchecked(const std::string& key) const {
  const std::size_t cap = params_.capacity;
  const WalkResult r = walk(
      key,
      [&](int ord) {
        const Bin& b = bins_[static_cast<std::size_t>(ord)];
        return (!b.failed && b.load() < cap) ? WalkAction::kTake : WalkAction::kSkip;
      },
      kInsertAttemptGuard);
  if (r.bin < 0) throw std::logic_error("placement walk exhausted with spare capacity");
  return {r.bin, r.bin_searches, r.slot_steps, r.rehash_fallback};
}

PlacementOutcome RingTable::plan(const std::string& key) const {
  check_can_place();
  return plan_unchecked(key);
}

PlacementOutcome RingTable::insert(const std::string& key) {
  if (key_index_.contains(key)) throw std::invalid_argument("key already present: " + key);
  check_can_place();
  const PlacementOutcome out = plan_unchecked(key);
  commit(key, out.bin);
  return out;
}

std::optional<int> RingTable::lookup_ordinal(const std::string& key) const {
  if (slots_.empty()) return std::nullopt;
  const std::size_t cap = params_.capacity;
  const WalkResult r = walk(
      key,
      [&](int ord) {
        const Bin& b = bins_[static_cast<std::size_t>(ord)];
        if (b.failed) return WalkAction::kSkip;
        if (b.key_pos.contains(key)) return WalkAction::kTake;
        return b.load() < cap ? WalkAction::kAbort : WalkAction::kSkip;
      },
      lookup_probe_budget());
  if (r.bin < 0) return std::nullopt;
  return r.bin;
}

std::optional<std::string> RingTable::lookup(const std::string& key) const {
  const auto ord = lookup_ordinal(key);
  if (!ord) return std::nullopt;
  return bins_[static_cast<std::size_t>(*ord)].id;
}

bool RingTable::remove_object(const std::string& key) {
  auto it = key_index_.find(key);
  if (it == key_index_.end()) return false;
  uncommit_key(it->second, key);
  return true;
}

RelocationStats RingTable::remove_bin(const std::string& id, RemovalMode mode) {
  auto it = bin_ordinals_.find(id);
  if (it == bin_ordinals_.end()) throw std::invalid_argument("unknown bin id: " + id);
  const int ordinal = it->second;
  Bin& b = bins_[static_cast<std::size_t>(ordinal)];
  if (!b.alive) throw std::invalid_argument("bin already removed: " + id);

  const bool was_fillable = b.alive && !b.failed && b.load() < params_.capacity;
  const bool was_full = b.load() >= params_.capacity;
  for (std::uint32_t slot : b.slots) vacate_slot(slot);
  b.slots.clear();
  b.slot_sources.clear();
  b.alive = false;
  b.failed = false;
  --alive_count_;
  if (was_full) --full_count_;
  if (was_fillable) --fillable_count_;

  std::vector<std::string> moved = std::move(b.keys);
  b.keys.clear();
  b.key_pos.clear();
  total_load_ -= moved.size();
  for (const auto& key : moved) {
    auto gi = key_index_.find(key);
    if (gi != key_index_.end() && gi->second == ordinal) key_index_.erase(gi);
  }

  RelocationStats stats;
  if (mode == RemovalMode::kEager) {
    for (const auto& key : moved) {
      const PlacementOutcome out = insert(key);
      ++stats.objects;
      stats.bin_searches += out.bin_searches;
      stats.slot_steps += out.slot_steps;
    }
  }
  return stats;
}

void RingTable::set_failed(const std::string& id, bool failed) {
  const int ord = ordinal_of(id);
  if (ord < 0) throw std::invalid_argument("unknown bin id: " + id);
  set_failed(ord, failed);
}

void RingTable::set_failed(int ordinal, bool failed) {
  Bin& b = bins_[static_cast<std::size_t>(ordinal)];
  if (!b.alive) throw std::invalid_argument("bin is removed: " + b.id);
  if (b.failed == failed) return;
  const bool was_fillable = b.alive && !b.failed && b.load() < params_.capacity;
  b.failed = failed;
  refresh_fillable(ordinal, was_fillable);
}

void RingTable::fill_bin(const std::string& id) {
  const int ord = ordinal_of(id);
  if (ord < 0) throw std::invalid_argument("unknown bin id: " + id);
  if (params_.capacity == kUnboundedCapacity) {
    throw std::invalid_argument("cannot fill a bin with unbounded capacity");
  }
  Bin& b = bins_[static_cast<std::size_t>(ord)];
  if (!b.alive) throw std::invalid_argument("bin is removed: " + id);
  while (b.load() < params_.capacity) {
    commit("!pad/" + id + "/" + std::to_string(fill_serial_++), ord);
  }
}

std::vector<std::size_t> RingTable::load_vector() const {
  std::vector<std::size_t> loads;
  loads.reserve(alive_count_);
  for (const Bin& b : bins_) {
    if (b.alive) loads.push_back(b.load());
  }
  return loads;
}

double RingTable::full_fraction() const {
  if (alive_count_ == 0) return 0.0;
  return static_cast<double>(full_count_) / static_cast<double>(alive_count_);
}

int RingTable::ordinal_of(const std::string& id) const {
  auto it = bin_ordinals_.find(id);
  return it == bin_ordinals_.end() ? -1 : it->second;
}

std::vector<std::uint64_t> RingTable::arc_mass() const {
  std::vector<std::uint64_t> mass(bins_.size(), 0);
  if (slots_.empty()) return mass;
  const std::uint64_t mask = address_mask();
  std::uint64_t prev = slots_.rbegin()->first;
  for (const auto& [slot, ord] : slots_) {
    const std::uint64_t arc =
        slots_.size() == 1 ? address_size() : ((slot - prev) & mask);
    mass[static_cast<std::size_t>(ord)] += arc;
    prev = slot;
  }
  return mass;
}

bool RingTable::bin_contains(int ordinal, const std::string& key) const {
  return bins_[static_cast<std::size_t>(ordinal)].key_pos.contains(key);
}

void RingTable::cache_add(int ordinal, const std::string& key) {
  if (bin_contains(ordinal, key)) return;
  commit(key, ordinal);
}

bool RingTable::cache_erase(int ordinal, const std::string& key) {
  if (!bin_contains(ordinal, key)) return false;
  uncommit_key(ordinal, key);
  return true;
}

void RingTable::cache_clear(int ordinal) {
  Bin& b = bins_[static_cast<std::size_t>(ordinal)];
  const bool was_fillable = b.alive && !b.failed && b.load() < params_.capacity;
  const bool was_full = b.load() >= params_.capacity;
  for (const auto& key : b.keys) {
    auto gi = key_index_.find(key);
    if (gi != key_index_.end() && gi->second == ordinal) key_index_.erase(gi);
  }
  total_load_ -= b.keys.size();
  b.keys.clear();
  b.key_pos.clear();
  if (was_full && b.alive) --full_count_;
  refresh_fillable(ordinal, was_fillable);
}

std::uint64_t RingTable::lookup_probe_budget() const {
  const std::uint64_t occupied = slots_.size();
  if (occupied == 0) return 0;
  // Enough rounds that a bounded lookup misses every occupied slot with
  // probability < e^-16 at this address density; never below one round per
  // occupied slot.
  const double per_round = 4.0 * static_cast<double>(occupied);
  const double rounds = 16.0 * static_cast<double>(address_size()) / per_round;
  return std::max<std::uint64_t>(occupied, static_cast<std::uint64_t>(std::llround(rounds)));
}

RingTable RingTable::remapped(int address_bits) const {
  RingParams p = params_;
  p.address_bits = address_bits;
  RingTable out(p);
  out.fill_serial_ = fill_serial_;
  for (const Bin& src : bins_) {
    const int ordinal = static_cast<int>(out.bins_.size());
    Bin nb;
    nb.id = src.id;
    nb.alive = src.alive;
    nb.failed = src.failed;
    out.bins_.push_back(std::move(nb));
    out.bin_ordinals_.emplace(src.id, ordinal);
    Bin& dst = out.bins_.back();
    if (!src.alive) continue;
    for (std::size_t c = 0; c < src.slot_sources.size(); ++c) {
      const std::uint32_t slot = slot_from_word(src.slot_sources[c].word, address_bits);
      if (out.slot_free(slot)) {
        out.occupy_slot(slot, ordinal);
        dst.slots.push_back(slot);
        dst.slot_sources.push_back(src.slot_sources[c]);
      } else {
        // rescaled collision: resume this copy's probe sequence
        Bin::SlotSource source;
        dst.slots.push_back(
            out.place_copy(copy_base(src.id, static_cast<int>(c)), ordinal, source));
        dst.slot_sources.push_back(source);
      }
    }
    dst.keys = src.keys;
    dst.key_pos = src.key_pos;
    out.total_load_ += dst.load();
    for (const auto& key : dst.keys) out.key_index_[key] = ordinal;
    ++out.alive_count_;
    if (dst.alive && !dst.failed && dst.load() < p.capacity) {
      ++out.fillable_count_;
    }
    if (dst.load() >= p.capacity) ++out.full_count_;
  }
  return out;
}

RingTable::TimedPlan RingTable::timed_plan(const std::string& key) const {
  if (params_.address_bits > kDenseBitsLimit) {
    throw std::invalid_argument("timed_plan requires address_bits <= 24");
  }
  check_can_place();
  const std::size_t cap = params_.capacity;
  const auto fillable = [&](int ord) {
    const Bin& b = bins_[static_cast<std::size_t>(ord)];
    return !b.failed && b.load() < cap;
  };

  TimedPlan result;
  const auto t0 = std::chrono::steady_clock::now();
  if (params_.strategy == Strategy::RJ_CH) {
    const WalkResult r = walk_probe(
        key,
        [&](int ord) { return fillable(ord) ? WalkAction::kTake : WalkAction::kSkip; },
        kInsertAttemptGuard);
    result.outcome = {r.bin, r.bin_searches, r.slot_steps, false};
  } else {
    const std::uint64_t mask = address_mask();
    std::uint64_t pos = first_probe_slot(key);
    const std::size_t occupied = slots_.size();
    std::uint64_t steps = 0, searches = 0, rehashes = 0;
    bool jumps_left = params_.strategy == Strategy::CH_BL_REHASH;
    bool fallback = false;
    int chosen = -1;
    // one segment per rehash jump plus the fallback lap, each at most one lap
    const std::uint64_t guard = (static_cast<std::uint64_t>(occupied) + 3) * address_size();
    while (steps < guard) {
      const int ord = dense_[pos];
      ++steps;
      if (ord >= 0) {
        ++searches;
        if (fillable(ord)) {
          chosen = ord;
          break;
        }
        if (jumps_left) {
          if (rehashes < occupied) {
            ++rehashes;
            pos = rehash_of_slot(bins_[static_cast<std::size_t>(ord)].slots.front());
            continue;
          }
          jumps_left = false;
          fallback = true;
        }
      }
      pos = (pos + 1) & mask;
    }
    if (chosen < 0) throw std::logic_error("timed walk exhausted with spare capacity");
    result.outcome = {chosen, searches, steps, fallback};
  }
  const auto t1 = std::chrono::steady_clock::now();
  result.nanoseconds = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
  return result;
}

RingTable build_ring(const std::vector<std::string>& bin_ids, double epsilon,
                     std::size_t n_expected, int virtual_copies, Strategy strategy,
                     std::uint64_t seed, int address_bits) {
  if (bin_ids.empty()) throw std::invalid_argument("need at least one bin");
  RingParams p;
  p.address_bits = address_bits;
  p.seed = seed;
  p.strategy = strategy;
  p.virtual_copies = virtual_copies;
  p.capacity = strategy == Strategy::CH
                   ? kUnboundedCapacity
                   : capacity_for(n_expected, bin_ids.size(), epsilon);
  RingTable table(p);
  for (const auto& id : bin_ids) table.add_bin(id);
  return table;
}

}  // namespace rjch
