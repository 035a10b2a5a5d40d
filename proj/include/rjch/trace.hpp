#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rjch/ring.hpp"

namespace rjch::trace {

struct TraceEvent {
  double minutes = 0;  // non-decreasing across a trace
  std::string key;
};

struct TraceParseError : std::runtime_error {
  std::size_t line;
  TraceParseError(std::size_t line_no, const std::string& what)
      : std::runtime_error("line " + std::to_string(line_no) + ": " + what), line(line_no) {}
};

// CSV with columns timestamp_minutes,url; a single header line is optional.
// Throws TraceParseError on malformed lines or decreasing timestamps.
std::vector<TraceEvent> parse_trace(std::istream& in);

// Canonical form: header line plus %.3f timestamps; parse(write(x)) is
// byte-stable.
void write_trace(std::ostream& out, const std::vector<TraceEvent>& events);

// Keys drawn from a Zipf(s) distribution over num_unique urls, timestamps
// uniform over [0, duration_minutes), sorted.
std::vector<TraceEvent> generate_synthetic_trace(std::size_t num_events,
                                                 std::size_t num_unique, double zipf_s,
                                                 double duration_minutes, std::uint64_t seed);

struct CacheConfig {
  std::size_t servers = 1;
  std::size_t cache_size = 1;
  double evict_minutes = 60;
  double serve_minutes = 1;
  double recovery_minutes = 10;
  std::size_t failure_threshold = 100;  // concurrent requests a server survives
};

// JSON object with keys servers, cache_size, evict_minutes, serve_minutes,
// recovery_minutes, failure_threshold.
CacheConfig parse_cache_config(const std::string& json_text);
std::string cache_config_to_json(const CacheConfig& config);

struct CacheStats {
  std::uint64_t total_misses = 0;
  std::uint64_t baseline_misses = 0;
  std::int64_t additional_misses = 0;  // total - baseline
  std::uint64_t failures = 0;
  std::uint64_t uncacheable_serves = 0;  // every alive bin full: served, not cached
};

// Misses of a single infinite-capacity failure-free cache under the same
// eviction window.
std::uint64_t run_baseline(const CacheConfig& config, const std::vector<TraceEvent>& events);

// Full distributed-cache simulation: time-based eviction, bounded caches,
// overload-induced failures with recovery, miss accounting against the
// baseline. Only the ring construction consumes the seed.
CacheStats run_cache_sim(const CacheConfig& config, const std::vector<TraceEvent>& events,
                         Strategy strategy, std::uint64_t seed);

}  // namespace rjch::trace
