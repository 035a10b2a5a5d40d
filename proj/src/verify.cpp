#include "rjch/verify.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

#include <json.hpp>

#include "rjch/hashing.hpp"
#include "rjch/simulator.hpp"
#include "rjch/metrics.hpp"
#include "rjch/oracle.hpp"
#include "rjch/ring.hpp"
#include "rjch/stats.hpp"

namespace rjch::verify {

namespace {

using oracle::Rational;

std::string fmt(const char* pattern, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, args...);
  return buf;
}

void enumerate_loads(int K, int C, std::vector<int>& b, std::size_t idx,
                     const std::function<void(const std::vector<int>&)>& fn) {
  if (idx == b.size()) {
    fn(b);
    return;
  }
  for (int v = 0; v < C; ++v) {
    b[idx] = v;
    enumerate_loads(K, C, b, idx + 1, fn);
  }
}

}  // namespace

Report run_lemma_suite(int max_k, int max_n, std::uint64_t seed) {
  Report report;
  const int kmax = std::min(max_k, 4);
  const int nmax = std::min(max_n, 6);

  // pinned-object invariance over every enumerable initial-load vector
  for (int K = 2; K <= kmax; ++K) {
    for (int C = 1; C <= 3; ++C) {
      for (int N = 1; N <= nmax; ++N) {
        std::vector<int> b(static_cast<std::size_t>(K), 0);
        enumerate_loads(K, C, b, 0, [&](const std::vector<int>& loads) {
          int total = N;
          for (int x : loads) total += x;
          if (total > K * C) return;
          const double tv = oracle::check_lemma1_invariance(K, C, loads, N);
          std::string inst = fmt("K=%d C=%d N=%d b=(", K, C, N);
          for (std::size_t i = 0; i < loads.size(); ++i) {
            inst += std::to_string(loads[i]);
            inst += i + 1 < loads.size() ? "," : ")";
          }
          report.checks.push_back({"pinned_object_invariance", inst, tv < 1e-12,
                                   fmt("max TV distance %.3e", tv)});
        });
      }
    }
  }

  // conditioning closure of the constrained multinomial
  for (int k = 2; k <= kmax; ++k) {
    for (int C = 2; C <= 3; ++C) {
      const int n_cap = std::min(nmax, k * (C - 1));
      for (int n = 1; n <= n_cap; ++n) {
        std::vector<Rational> p;
        Rational total = 0;
        for (int i = 1; i <= k; ++i) total += i;
        for (int i = 1; i <= k; ++i) p.emplace_back(Rational(i) / total);
        std::vector<std::vector<int>> subsets{{0}, {k - 1}};
        if (k >= 3) subsets.push_back({0, 1});
        if (k >= 4) subsets.push_back({1, 2, 3});
        for (const auto& subset : subsets) {
          const double diff = oracle::check_conditional_closure(n, p, C, subset);
          report.checks.push_back(
              {"constrained_multinomial_closure",
               fmt("k=%d C=%d n=%d subset_size=%zu", k, C, n, subset.size()),
               diff < 1e-12, fmt("max probability diff %.3e", diff)});
        }
      }
    }
  }

  // indicator-sum dominance on random probability vectors
  {
    std::mt19937_64 rng(derive_seed(seed, "lemma3"));
    const auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    for (int t = 0; t < 50; ++t) {
      const int n = 2 + static_cast<int>(rng() % 14);
      std::vector<double> p;
      p.reserve(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) p.push_back(0.5 * unit());
      const int C = 1 + static_cast<int>(rng() % static_cast<unsigned>(n));
      const auto res = oracle::check_poisson_binomial_dominance(p, C);
      report.checks.push_back({"success_count_dominance", fmt("trial=%d n=%d C=%d", t, n, C),
                               res.ok,
                               res.ok ? fmt("min slack %.3e", res.margin)
                                      : fmt("violated at x=%d", res.violating_x)});
    }
  }

  // cluster-length proportionality on random frozen idealized rings
  {
    std::mt19937_64 rng(derive_seed(seed, "lemma4"));
    for (int t = 0; t < 10; ++t) {
      std::vector<bool> mask(24);
      bool any_nonfull = false;
      for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = rng() % 3 != 0;
        any_nonfull = any_nonfull || !mask[i];
      }
      if (!any_nonfull) mask[0] = false;
      const double pval = oracle::check_lemma4_proportionality(
          mask, 100'000, derive_seed(seed, "lemma4/" + std::to_string(t)));
      report.checks.push_back({"cluster_length_proportionality", fmt("frozen_state=%d", t),
                               pval > 0.001, fmt("chi-square p=%.4f", pval)});
    }
  }
  return report;
}

Report run_dominance_suite(int max_k, int max_n) {
  Report report;
  const int kmax = std::min(max_k, 4);
  for (int k = 2; k <= kmax; ++k) {
    for (int C = 1; C <= 3; ++C) {
      const int n_cap = std::min(max_n, k * C);
      for (int n = 1; n <= n_cap; ++n) {
        // one distribution chain per instance, evaluated under each f
        std::vector<oracle::LoadDistribution> chain;
        chain.reserve(static_cast<std::size_t>(n) + 1);
        for (int m = 0; m <= n; ++m) {
          chain.push_back(oracle::exact_distribution(k, C, n, {m}));
        }
        const auto run_f = [&](const char* fname, const std::vector<Rational>& f) {
          bool monotone = true;
          int bad_m = -1;
          Rational prev = oracle::expected_f_sum(chain.front(), f);
          Rational last = prev;
          for (int m = 1; m <= n; ++m) {
            const Rational cur = oracle::expected_f_sum(chain[static_cast<std::size_t>(m)], f);
            if (cur < prev) {
              monotone = false;
              if (bad_m < 0) bad_m = m - 1;
            }
            prev = cur;
            last = cur;
          }
          const Rational first = oracle::expected_f_sum(chain.front(), f);
          const bool ok = monotone && first <= last;
          report.checks.push_back(
              {"convex_dominance", fmt("k=%d C=%d n=%d f=%s", k, C, n, fname), ok,
               ok ? fmt("margin %.6g", static_cast<double>(last - first))
                  : fmt("monotonicity broken at m=%d", bad_m)});
        };
        std::vector<Rational> fx, fx2, fx3, ind(static_cast<std::size_t>(C) + 1, Rational(0));
        for (int x = 0; x <= C; ++x) {
          fx.emplace_back(x);
          fx2.emplace_back(x * x);
          fx3.emplace_back(x * x * x);
        }
        ind.back() = 1;
        run_f("x", fx);
        run_f("x^2", fx2);
        run_f("x^3", fx3);
        run_f("full_indicator", ind);
      }
    }
  }
  return report;
}

Report run_bounds_suite(std::uint64_t seed) {
  Report report;

  for (double eps = 0.05; eps <= 0.9 + 1e-9; eps += 0.05) {
    const double probe = metrics::rjch_search_bound(eps);
    const double clockwise = metrics::chbl_search_bound(eps);
    report.checks.push_back({"bound_ordering_small_eps", fmt("eps=%.2f", eps),
                             probe < clockwise, fmt("%.3f vs %.3f", probe, clockwise)});
  }
  for (double eps : {8.0, 16.0, 32.0, 64.0}) {
    const double probe = metrics::rjch_search_bound(eps);
    const double clockwise = metrics::chbl_search_bound(eps);
    report.checks.push_back({"bound_ordering_large_eps", fmt("eps=%.0f", eps),
                             probe < clockwise, fmt("%.4f vs %.4f", probe, clockwise)});
  }

  // worst-case frozen ring: floor(n/C) bins full, fresh-key placements
  const std::size_t n = 10000, k = 1000;
  for (double eps : {0.1, 0.3, 1.0, 3.0}) {
    const std::size_t cap = capacity_for(n, k, eps);
    const std::size_t full = n / cap;
    RingParams params;
    params.seed = derive_seed(seed, fmt("bounds/%.1f", eps));
    params.strategy = Strategy::RJ_CH;
    params.capacity = cap;
    RingTable table(params);
    std::mt19937_64 rng(params.seed);
    for (std::size_t i = 0; i < k; ++i) table.add_bin(sim::hex_key(rng));
    for (std::size_t i = 0; i < full; ++i) {
      table.fill_bin(table.bin(static_cast<int>(i)).id);
    }
    double sum = 0;
    const int kSamples = 100'000;
    for (int i = 0; i < kSamples; ++i) {
      sum += static_cast<double>(table.plan(sim::hex_key(rng)).bin_searches);
    }
    const double mean = sum / kSamples;
    const double bound = metrics::rjch_search_bound(eps);
    const double geometric =
        static_cast<double>(k) / static_cast<double>(k - full);
    report.checks.push_back(
        {"worst_case_probe_searches", fmt("eps=%.1f full=%zu", eps, full), mean <= bound,
         fmt("empirical %.4f, geometric %.4f, bound %.4f", mean, geometric, bound)});
  }
  return report;
}

Report run_all(int max_k, int max_n, std::uint64_t seed) {
  Report all = run_lemma_suite(max_k, max_n, seed);
  Report dom = run_dominance_suite(max_k, std::max(max_n, 12));
  Report bounds = run_bounds_suite(seed);
  all.checks.insert(all.checks.end(), dom.checks.begin(), dom.checks.end());
  all.checks.insert(all.checks.end(), bounds.checks.begin(), bounds.checks.end());
  return all;
}

std::string report_json(const Report& report) {
  nlohmann::ordered_json j;
  j["passed"] = report.all_pass();
  std::size_t failures = 0;
  j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : report.checks) {
    nlohmann::ordered_json cj;
    cj["name"] = c.name;
    cj["instance"] = c.instance;
    cj["pass"] = c.pass;
    cj["detail"] = c.detail;
    j["checks"].push_back(cj);
    if (!c.pass) ++failures;
  }
  j["total"] = report.checks.size();
  j["failures"] = failures;
  return j.dump(2) + "\n";
}

}  // namespace rjch::verify
