#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "rjch/trace.hpp"

using namespace rjch;

TEST_CASE("trace parsing accepts sorted rows and an optional header") {
  std::istringstream in("0.0,a\n1.5,b\n");
  const auto events = trace::parse_trace(in);
  REQUIRE(events.size() == 2);
  CHECK(events[0].key == "a");
  CHECK(events[1].minutes == 1.5);

  std::istringstream with_header("timestamp_minutes,url\n2.0,x\n");
  CHECK(trace::parse_trace(with_header).size() == 1);

  std::istringstream empty("");
  CHECK(trace::parse_trace(empty).empty());
}

TEST_CASE("trace parsing reports the offending line") {
  std::istringstream reversed("1.0,a\n0.5,b\n");
  CHECK_THROWS_WITH_AS(trace::parse_trace(reversed), "line 2: non-monotone timestamp",
                       trace::TraceParseError);
  std::istringstream junk("0.5,a\nnot-a-number,b\n");
  try {
    trace::parse_trace(junk);
    FAIL("expected parse error");
  } catch (const trace::TraceParseError& e) {
    CHECK(e.line == 2);
  }
  std::istringstream nocomma("0.5 a\n");
  CHECK_THROWS_AS(trace::parse_trace(nocomma), trace::TraceParseError);
  std::istringstream negative("-1,a\n");
  CHECK_THROWS_AS(trace::parse_trace(negative), trace::TraceParseError);
}

TEST_CASE("canonical writer round-trips bit-exactly") {
  const auto events = trace::generate_synthetic_trace(1000, 200, 1.0, 500.0, 77);
  std::ostringstream first;
  trace::write_trace(first, events);
  std::istringstream back(first.str());
  const auto reparsed = trace::parse_trace(back);
  std::ostringstream second;
  trace::write_trace(second, reparsed);
  CHECK(first.str() == second.str());
  CHECK(reparsed.size() == events.size());
}

TEST_CASE("synthetic traces follow the requested key distribution") {
  SUBCASE("degenerate zipf: uniform within sampling error") {
    const auto events = trace::generate_synthetic_trace(100'000, 50, 0.0, 100.0, 5);
    std::map<std::string, int> counts;
    for (const auto& e : events) counts[e.key]++;
    const double expected = 100'000.0 / 50;
    const double sigma = std::sqrt(expected * (1 - 1.0 / 50));
    for (const auto& [k, c] : counts) CHECK(std::abs(c - expected) < 5 * sigma);
  }
  SUBCASE("single url") {
    const auto events = trace::generate_synthetic_trace(100, 1, 1.0, 10.0, 5);
    for (const auto& e : events) CHECK(e.key == "url-000000");
  }
  SUBCASE("top-rank frequency matches the harmonic normalization") {
    const std::size_t unique = 1000;
    const auto events = trace::generate_synthetic_trace(1'000'000, unique, 1.0, 100.0, 5);
    double h = 0;
    for (std::size_t r = 1; r <= unique; ++r) h += 1.0 / static_cast<double>(r);
    std::size_t top = 0;
    for (const auto& e : events) top += e.key == "url-000000";
    const double p = 1.0 / h;
    const double sigma = std::sqrt(p * (1 - p) / 1e6);
    CHECK(std::abs(static_cast<double>(top) / 1e6 - p) < 5 * sigma);
  }
  SUBCASE("timestamps sorted within duration") {
    const auto events = trace::generate_synthetic_trace(1000, 10, 1.0, 42.0, 5);
    for (std::size_t i = 1; i < events.size(); ++i) {
      CHECK(events[i].minutes >= events[i - 1].minutes);
      CHECK(events[i].minutes < 42.0);
    }
  }
  SUBCASE("invalid parameters") {
    CHECK_THROWS_AS(trace::generate_synthetic_trace(10, 20, 1.0, 5.0, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(trace::generate_synthetic_trace(10, 5, -1.0, 5.0, 1),
                    std::invalid_argument);
  }
}

TEST_CASE("baseline misses") {
  trace::CacheConfig config;
  config.evict_minutes = 10;
  SUBCASE("all-unique trace misses every request") {
    std::vector<trace::TraceEvent> events{{0, "a"}, {1, "b"}, {2, "c"}};
    CHECK(trace::run_baseline(config, events) == 3);
  }
  SUBCASE("repeat within the window hits") {
    std::vector<trace::TraceEvent> events{{0, "a"}, {5, "a"}, {9, "a"}};
    CHECK(trace::run_baseline(config, events) == 1);
  }
  SUBCASE("repeat after the window re-misses") {
    std::vector<trace::TraceEvent> events{{0, "a"}, {20, "a"}};
    CHECK(trace::run_baseline(config, events) == 2);
  }
}

TEST_CASE("cache sim: hits, eviction and unavoidable-miss accounting") {
  trace::CacheConfig config{4, 10, 30, 1, 5, 100};
  SUBCASE("second request within the window is a hit") {
    std::vector<trace::TraceEvent> events{{0, "a"}, {10, "a"}};
    const auto stats = trace::run_cache_sim(config, events, Strategy::RJ_CH, 3);
    CHECK(stats.total_misses == 1);
    CHECK(stats.baseline_misses == 1);
    CHECK(stats.additional_misses == 0);
    CHECK(stats.failures == 0);
  }
  SUBCASE("eviction forces a re-miss") {
    std::vector<trace::TraceEvent> events{{0, "a"}, {40, "a"}};
    const auto stats = trace::run_cache_sim(config, events, Strategy::RJ_CH, 3);
    CHECK(stats.total_misses == 2);
    CHECK(stats.additional_misses == 0);
  }
}

TEST_CASE("cache sim: ample capacity and no failures add no misses") {
  const auto events = trace::generate_synthetic_trace(20'000, 500, 1.0, 300.0, 9);
  trace::CacheConfig config{50, 200, 60, 1, 5, 1000};  // 10000 slots for 500 keys
  for (Strategy s : {Strategy::CH_BL, Strategy::RJ_CH}) {
    CAPTURE(std::string(to_string(s)));
    const auto stats = trace::run_cache_sim(config, events, s, 3);
    CHECK(stats.additional_misses == 0);
    CHECK(stats.failures == 0);
    CHECK(stats.uncacheable_serves == 0);
  }
}

TEST_CASE("cache sim: overload wipes the cache and the server recovers") {
  // one server, threshold 1: the second in-flight request kills it
  trace::CacheConfig config{1, 10, 1000, 10, 20, 1};
  std::vector<trace::TraceEvent> events{
      {0, "a"},   // miss, cached, 1 in flight
      {1, "b"},   // miss, cached, 2 in flight -> failure, wiped, down until 21
      {2, "a"},   // server down: served upstream, uncacheable
      {30, "a"},  // recovered with empty cache: miss again
  };
  const auto stats = trace::run_cache_sim(config, events, Strategy::CH_BL, 3);
  CHECK(stats.failures == 1);
  CHECK(stats.uncacheable_serves == 1);
  CHECK(stats.total_misses == 3);
}

TEST_CASE("cache sim: full bins serve without caching or counting a miss") {
  trace::CacheConfig config{1, 1, 1000, 1, 5, 100};
  std::vector<trace::TraceEvent> events{
      {0, "a"},  // miss, cached; the only slot is now taken
      {1, "b"},  // full bin lacking b: served upstream, no miss
      {2, "a"},  // hit
  };
  const auto stats = trace::run_cache_sim(config, events, Strategy::RJ_CH, 3);
  CHECK(stats.total_misses == 1);
  CHECK(stats.uncacheable_serves == 1);
  CHECK(stats.baseline_misses == 2);
}

TEST_CASE("cache sim is deterministic") {
  const auto events = trace::generate_synthetic_trace(5000, 800, 1.0, 100.0, 4);
  trace::CacheConfig config{20, 30, 20, 2, 5, 10};
  const auto a = trace::run_cache_sim(config, events, Strategy::CH_BL, 55);
  const auto b = trace::run_cache_sim(config, events, Strategy::CH_BL, 55);
  CHECK(a.total_misses == b.total_misses);
  CHECK(a.failures == b.failures);
  CHECK(a.uncacheable_serves == b.uncacheable_serves);
}

TEST_CASE("cache config JSON round trip and validation") {
  trace::CacheConfig config{150, 100, 300, 10, 20, 50};
  const auto parsed = trace::parse_cache_config(trace::cache_config_to_json(config));
  CHECK(parsed.servers == 150);
  CHECK(parsed.cache_size == 100);
  CHECK(parsed.evict_minutes == 300);
  CHECK(parsed.failure_threshold == 50);
  CHECK_THROWS(trace::parse_cache_config("{"));
  CHECK_THROWS(trace::parse_cache_config("{\"servers\": 0}"));
  CHECK_THROWS_AS(
      trace::parse_cache_config(
          R"({"servers":1,"cache_size":0,"evict_minutes":1,"serve_minutes":1,)"
          R"("recovery_minutes":1,"failure_threshold":1})"),
      std::invalid_argument);
}
