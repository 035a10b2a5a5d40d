#include "rjch/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <list>
#include <queue>
#include <random>
#include <unordered_map>

#include <json.hpp>

#include "rjch/simulator.hpp"

namespace rjch::trace {

std::vector<TraceEvent> parse_trace(std::istream& in) {
  std::vector<TraceEvent> events;
  std::string line;
  std::size_t line_no = 0;
  double prev = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw TraceParseError(line_no, "empty line");
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos) throw TraceParseError(line_no, "expected timestamp,url");
    double t = 0;
    const char* begin = line.data();
    const char* end = line.data() + comma;
    const auto [ptr, ec] = std::from_chars(begin, end, t);
    if (ec != std::errc() || ptr != end) {
      if (line_no == 1) continue;  // optional header
      throw TraceParseError(line_no, "bad timestamp: " + line.substr(0, comma));
    }
    if (t < 0) throw TraceParseError(line_no, "negative timestamp");
    if (!events.empty() && t < prev) {
      throw TraceParseError(line_no, "non-monotone timestamp");
    }
    std::string key = line.substr(comma + 1);
    if (key.empty()) throw TraceParseError(line_no, "empty url");
    events.push_back({t, std::move(key)});
    prev = t;
  }
  return events;
}

void write_trace(std::ostream& out, const std::vector<TraceEvent>& events) {
  out << "timestamp_minutes,url\n";
  char buf[64];
  for (const auto& e : events) {
    std::snprintf(buf, sizeof(buf), "%.3f", e.minutes);
    out << buf << ',' << e.key << '\n';
  }
}

std::vector<TraceEvent> generate_synthetic_trace(std::size_t num_events,
                                                 std::size_t num_unique, double zipf_s,
                                                 double duration_minutes, std::uint64_t seed) {
  if (num_unique == 0 || num_unique > num_events) {
    throw std::invalid_argument("need 1 <= num_unique <= num_events");
  }
  if (zipf_s < 0 || duration_minutes <= 0) {
    throw std::invalid_argument("need zipf_s >= 0 and duration > 0");
  }
  std::vector<double> cumulative(num_unique);
  double total = 0;
  for (std::size_t r = 0; r < num_unique; ++r) {
    total += std::pow(static_cast<double>(r + 1), -zipf_s);
    cumulative[r] = total;
  }

  std::mt19937_64 rng(seed);
  const auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  std::vector<double> times(num_events);
  for (auto& t : times) t = unit() * duration_minutes;
  std::sort(times.begin(), times.end());

  std::vector<TraceEvent> events;
  events.reserve(num_events);
  char buf[32];
  for (std::size_t i = 0; i < num_events; ++i) {
    const double u = unit() * total;
    const std::size_t rank = static_cast<std::size_t>(
        std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    std::snprintf(buf, sizeof(buf), "url-%06zu", std::min(rank, num_unique - 1));
    events.push_back({times[i], buf});
  }
  return events;
}

CacheConfig parse_cache_config(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  CacheConfig c;
  c.servers = j.at("servers").get<std::size_t>();
  c.cache_size = j.at("cache_size").get<std::size_t>();
  c.evict_minutes = j.at("evict_minutes").get<double>();
  c.serve_minutes = j.at("serve_minutes").get<double>();
  c.recovery_minutes = j.at("recovery_minutes").get<double>();
  c.failure_threshold = j.at("failure_threshold").get<std::size_t>();
  if (c.servers == 0 || c.cache_size == 0 || c.evict_minutes <= 0 || c.serve_minutes <= 0 ||
      c.recovery_minutes <= 0 || c.failure_threshold == 0) {
    throw std::invalid_argument("cache config values must be positive");
  }
  return c;
}

std::string cache_config_to_json(const CacheConfig& c) {
  nlohmann::ordered_json j;
  j["servers"] = c.servers;
  j["cache_size"] = c.cache_size;
  j["evict_minutes"] = c.evict_minutes;
  j["serve_minutes"] = c.serve_minutes;
  j["recovery_minutes"] = c.recovery_minutes;
  j["failure_threshold"] = c.failure_threshold;
  return j.dump(2);
}

std::uint64_t run_baseline(const CacheConfig& config, const std::vector<TraceEvent>& events) {
  std::unordered_map<std::string, double> last_access;
  last_access.reserve(events.size());
  std::uint64_t misses = 0;
  for (const auto& e : events) {
    auto it = last_access.find(e.key);
    if (it == last_access.end()) {
      ++misses;
      last_access.emplace(e.key, e.minutes);
    } else {
      if (it->second < e.minutes - config.evict_minutes) ++misses;
      it->second = e.minutes;
    }
  }
  return misses;
}

namespace {

struct ServerState {
  // recency list, oldest first; refreshes move entries to the back
  std::list<std::pair<std::string, double>> lru;
  std::unordered_map<std::string, std::list<std::pair<std::string, double>>::iterator> index;
  std::priority_queue<double, std::vector<double>, std::greater<double>> active;
  double failed_until = -1;

  void clear_cache() {
    lru.clear();
    index.clear();
  }
};

}  // namespace

CacheStats run_cache_sim(const CacheConfig& config, const std::vector<TraceEvent>& events,
                         Strategy strategy, std::uint64_t seed) {
  CacheStats stats;
  std::mt19937_64 rng(seed);
  RingParams params;
  params.seed = seed;
  params.strategy = strategy;
  params.capacity = strategy == Strategy::CH ? kUnboundedCapacity : config.cache_size;
  RingTable ring(params);
  for (std::size_t i = 0; i < config.servers; ++i) ring.add_bin(sim::hex_key(rng));
  std::vector<ServerState> servers(config.servers);

  const std::size_t capacity = ring.params().capacity;
  const auto touch = [&](int ord, double now) {
    ServerState& s = servers[static_cast<std::size_t>(ord)];
    if (ring.bin(ord).failed) {
      if (s.failed_until <= now) {
        ring.set_failed(ord, false);  // recovered with an empty cache
        s.failed_until = -1;
      } else {
        return;
      }
    }
    while (!s.active.empty() && s.active.top() <= now) s.active.pop();
    while (!s.lru.empty() && s.lru.front().second < now - config.evict_minutes) {
      ring.cache_erase(ord, s.lru.front().first);
      s.index.erase(s.lru.front().first);
      s.lru.pop_front();
    }
  };

  const auto fail_check = [&](int ord, double now) {
    ServerState& s = servers[static_cast<std::size_t>(ord)];
    if (s.active.size() > config.failure_threshold) {
      ++stats.failures;
      ring.cache_clear(ord);
      s.clear_cache();
      s.active = {};
      ring.set_failed(ord, true);
      s.failed_until = now + config.recovery_minutes;
    }
  };

  for (const auto& e : events) {
    const double now = e.minutes;
    bool hit = false;
    const auto result = ring.walk(
        e.key,
        [&](int ord) {
          touch(ord, now);
          const auto& bin = ring.bin(ord);
          if (bin.failed) return RingTable::WalkAction::kSkip;
          if (servers[static_cast<std::size_t>(ord)].index.contains(e.key)) {
            hit = true;
            return RingTable::WalkAction::kTake;
          }
          // first non-full alive bin without the key: the responsible bin
          return bin.load() < capacity ? RingTable::WalkAction::kTake
                                       : RingTable::WalkAction::kSkip;
        },
        ring.lookup_probe_budget());

    if (result.bin < 0) {
      // every alive bin full: served upstream, nothing cached, no miss counted
      ++stats.uncacheable_serves;
      continue;
    }
    const int ord = result.bin;
    ServerState& s = servers[static_cast<std::size_t>(ord)];
    if (hit) {
      auto it = s.index.find(e.key);
      it->second->second = now;
      s.lru.splice(s.lru.end(), s.lru, it->second);
    } else {
      ++stats.total_misses;
      ring.cache_add(ord, e.key);
      s.lru.emplace_back(e.key, now);
      s.index[e.key] = std::prev(s.lru.end());
    }
    s.active.push(now + config.serve_minutes);
    fail_check(ord, now);
  }

  stats.baseline_misses = run_baseline(config, events);
  stats.additional_misses = static_cast<std::int64_t>(stats.total_misses) -
                            static_cast<std::int64_t>(stats.baseline_misses);
  return stats;
}

}  // namespace rjch::trace
