#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rjch::verify {

struct Check {
  std::string name;
  std::string instance;
  bool pass = false;
  std::string detail;
};

struct Report {
  std::vector<Check> checks;

  bool all_pass() const {
    for (const auto& c : checks) {
      if (!c.pass) return false;
    }
    return true;
  }
  const Check* first_failure() const {
    for (const auto& c : checks) {
      if (!c.pass) return &c;
    }
    return nullptr;
  }
};

// Exact small-instance checks of the placement-scheme lemmas: pinned-object
// invariance, constrained-multinomial conditioning, indicator-sum dominance,
// cluster-length proportionality.
Report run_lemma_suite(int max_k, int max_n, std::uint64_t seed);

// Exact convex dominance and interpolation monotonicity over every
// enumerable (k, C, n) instance with f in {x, x^2, x^3, 1{x=C}}.
Report run_dominance_suite(int max_k, int max_n);

// Analytic search-bound ordering plus empirical worst-case frozen-ring means
// against the 1 + 1/eps bound.
Report run_bounds_suite(std::uint64_t seed);

Report run_all(int max_k, int max_n, std::uint64_t seed);

std::string report_json(const Report& report);

}  // namespace rjch::verify
