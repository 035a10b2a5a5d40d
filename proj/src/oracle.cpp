#include "rjch/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "rjch/hashing.hpp"
#include "rjch/stats.hpp"

namespace rjch::oracle {

namespace {

using BigInt = boost::multiprecision::cpp_int;

void check_instance(int k, int C, int n) {
  if (k < 1 || C < 1 || n < 0) throw std::invalid_argument("k, C >= 1 and n >= 0 required");
  if (n > k * C) throw std::invalid_argument("infeasible: n > k * C");
  double states = 1;
  for (int i = 0; i < k; ++i) states *= C + 1;
  if (states > 2e5 || n > 64) throw std::invalid_argument("instance too large to enumerate");
}

int clockwise_dest(const LoadVector& loads, int start, int C) {
  const int k = static_cast<int>(loads.size());
  for (int d = 0; d < k; ++d) {
    const int j = (start + d) % k;
    if (loads[j] < C) return j;
  }
  return -1;
}

void add_prob(LoadDistribution& dist, const LoadVector& v, const Rational& p) {
  dist[v] += p;
}

}  // namespace

LoadDistribution exact_distribution(int k, int C, int n, SchemeSpec scheme) {
  check_instance(k, C, n);
  if (scheme.m < 0 || scheme.m > n) throw std::invalid_argument("scheme m must be in [0, n]");
  const Rational uni_k(1, k);
  LoadDistribution states;
  states.emplace(LoadVector(static_cast<std::size_t>(k), 0), Rational(1));
  for (int t = 1; t <= n; ++t) {
    LoadDistribution next;
    const bool clockwise = t <= scheme.m;
    for (const auto& [v, p] : states) {
      if (clockwise) {
        for (int i = 0; i < k; ++i) {
          const int dest = clockwise_dest(v, i, C);
          LoadVector w = v;
          ++w[static_cast<std::size_t>(dest)];
          add_prob(next, w, p * uni_k);
        }
      } else {
        std::vector<int> nonfull;
        for (int i = 0; i < k; ++i) {
          if (v[static_cast<std::size_t>(i)] < C) nonfull.push_back(i);
        }
        const Rational q(1, static_cast<long long>(nonfull.size()));
        for (int i : nonfull) {
          LoadVector w = v;
          ++w[static_cast<std::size_t>(i)];
          add_prob(next, w, p * q);
        }
      }
    }
    states = std::move(next);
  }
  return states;
}

LoadDistribution constrained_multinomial_pmf(int n, const std::vector<Rational>& p, int C) {
  const int k = static_cast<int>(p.size());
  if (k < 1 || n < 0 || C < 1) throw std::invalid_argument("bad multinomial instance");
  if (n > k * (C - 1)) throw std::invalid_argument("empty support: n > k * (C - 1)");

  // factorials as big integers for exact multinomial coefficients
  std::vector<BigInt> fact(static_cast<std::size_t>(n) + 1, 1);
  for (int i = 1; i <= n; ++i) fact[static_cast<std::size_t>(i)] = fact[i - 1] * i;

  LoadDistribution dist;
  Rational total = 0;
  LoadVector x(static_cast<std::size_t>(k), 0);
  // depth-first over compositions of n with parts <= C - 1
  auto rec = [&](auto&& self, int idx, int remaining) -> void {
    if (idx == k - 1) {
      if (remaining > C - 1) return;
      x[static_cast<std::size_t>(idx)] = remaining;
      BigInt denom = 1;
      for (int xi : x) denom *= fact[static_cast<std::size_t>(xi)];
      Rational prob(fact[static_cast<std::size_t>(n)], denom);
      for (int i = 0; i < k; ++i) {
        for (int c = 0; c < x[static_cast<std::size_t>(i)]; ++c) {
          prob *= p[static_cast<std::size_t>(i)];
        }
      }
      dist.emplace(x, prob);
      total += prob;
      return;
    }
    const int cap = std::min(remaining, C - 1);
    for (int v = 0; v <= cap; ++v) {
      x[static_cast<std::size_t>(idx)] = v;
      self(self, idx + 1, remaining - v);
    }
  };
  rec(rec, 0, n);
  if (total == 0) throw std::invalid_argument("empty support");
  for (auto& [v, prob] : dist) prob /= total;
  return dist;
}

Rational expected_f_sum(const LoadDistribution& dist, const std::vector<Rational>& f) {
  Rational total = 0;
  for (const auto& [v, p] : dist) {
    Rational s = 0;
    for (int xi : v) s += f.at(static_cast<std::size_t>(xi));
    total += p * s;
  }
  return total;
}

double total_variation(const LoadDistribution& a, const LoadDistribution& b) {
  Rational tv = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      tv += boost::multiprecision::abs(ia->second);
      ++ia;
    } else if (ia == a.end() || ib->first < ia->first) {
      tv += boost::multiprecision::abs(ib->second);
      ++ib;
    } else {
      tv += boost::multiprecision::abs(ia->second - ib->second);
      ++ia;
      ++ib;
    }
  }
  return static_cast<double>(tv / 2);
}

DominanceReport check_convex_dominance(int k, int C, int n, const std::vector<Rational>& f) {
  if (static_cast<int>(f.size()) != C + 1) {
    throw std::invalid_argument("f must be tabulated on {0..C}");
  }
  for (int x = 1; x < C; ++x) {
    if (f[static_cast<std::size_t>(x + 1)] + f[static_cast<std::size_t>(x - 1)] <
        2 * f[static_cast<std::size_t>(x)]) {
      throw std::invalid_argument("f is not convex on {0..C}");
    }
  }
  DominanceReport report;
  std::vector<Rational> sums;
  sums.reserve(static_cast<std::size_t>(n) + 1);
  for (int m = 0; m <= n; ++m) {
    sums.push_back(expected_f_sum(exact_distribution(k, C, n, {m}), f));
  }
  report.monotone = true;
  for (int m = 0; m < n; ++m) {
    if (sums[static_cast<std::size_t>(m)] > sums[static_cast<std::size_t>(m + 1)]) {
      report.monotone = false;
      report.violating_m = m;
      break;
    }
  }
  report.ok = sums.front() <= sums.back() && report.monotone;
  report.margin = static_cast<double>(sums.back() - sums.front());
  return report;
}

LoadDistribution pinned_object_distribution(int K, int C, const std::vector<int>& b, int N,
                                            int m) {
  if (static_cast<int>(b.size()) != K) throw std::invalid_argument("b must have K entries");
  for (int bi : b) {
    // loads at capacity are allowed: a full bin simply forces reassignment
    if (bi < 0 || bi > C) throw std::invalid_argument("initial loads must satisfy 0 <= b_i <= C");
  }
  int total = N;
  for (int bi : b) total += bi;
  check_instance(K, C, total);
  if (m < 1 || m > N) throw std::invalid_argument("m must be in [1, N]");

  const Rational uni_k(1, K);
  LoadDistribution states;
  states.emplace(b, Rational(1));
  for (int t = 1; t <= N; ++t) {
    LoadDistribution next;
    for (const auto& [v, p] : states) {
      std::vector<int> nonfull;
      for (int i = 0; i < K; ++i) {
        if (v[static_cast<std::size_t>(i)] < C) nonfull.push_back(i);
      }
      const Rational reassigned = Rational(1, static_cast<long long>(nonfull.size()));
      auto drop_on = [&](int i, const Rational& weight) {
        if (v[static_cast<std::size_t>(i)] < C) {
          LoadVector w = v;
          ++w[static_cast<std::size_t>(i)];
          add_prob(next, w, weight);
        } else {
          for (int j : nonfull) {
            LoadVector w = v;
            ++w[static_cast<std::size_t>(j)];
            add_prob(next, w, weight * reassigned);
          }
        }
      };
      if (t == m) {
        drop_on(0, p);
      } else {
        for (int i = 0; i < K; ++i) drop_on(i, p * uni_k);
      }
    }
    states = std::move(next);
  }
  return states;
}

double check_lemma1_invariance(int K, int C, const std::vector<int>& b, int N) {
  std::vector<LoadDistribution> dists;
  dists.reserve(static_cast<std::size_t>(N));
  for (int m = 1; m <= N; ++m) dists.push_back(pinned_object_distribution(K, C, b, N, m));
  double worst = 0;
  for (std::size_t i = 0; i < dists.size(); ++i) {
    for (std::size_t j = i + 1; j < dists.size(); ++j) {
      worst = std::max(worst, total_variation(dists[i], dists[j]));
    }
  }
  return worst;
}

double check_conditional_closure(int n, const std::vector<Rational>& p, int C,
                                 const std::vector<int>& subset) {
  const int k = static_cast<int>(p.size());
  for (int idx : subset) {
    if (idx < 0 || idx >= k) throw std::invalid_argument("subset index out of range");
  }
  if (subset.empty()) throw std::invalid_argument("subset must be non-empty");
  const LoadDistribution joint = constrained_multinomial_pmf(n, p, C);

  Rational psub = 0;
  for (int idx : subset) psub += p[static_cast<std::size_t>(idx)];
  std::vector<Rational> renorm;
  renorm.reserve(subset.size());
  for (int idx : subset) renorm.push_back(p[static_cast<std::size_t>(idx)] / psub);

  double worst = 0;
  for (int nstar = 0; nstar <= n; ++nstar) {
    // conditional of the subset coordinates given their sum
    std::map<LoadVector, Rational> conditional;
    Rational mass = 0;
    for (const auto& [v, prob] : joint) {
      int s = 0;
      LoadVector sub;
      sub.reserve(subset.size());
      for (int idx : subset) {
        s += v[static_cast<std::size_t>(idx)];
        sub.push_back(v[static_cast<std::size_t>(idx)]);
      }
      if (s != nstar) continue;
      conditional[sub] += prob;
      mass += prob;
    }
    if (mass == 0) continue;
    for (auto& [v, prob] : conditional) prob /= mass;
    const LoadDistribution target = constrained_multinomial_pmf(nstar, renorm, C);
    for (const auto& [v, prob] : target) {
      auto it = conditional.find(v);
      const Rational got = it == conditional.end() ? Rational(0) : it->second;
      worst = std::max(worst, std::abs(static_cast<double>(got - prob)));
    }
    for (const auto& [v, prob] : conditional) {
      if (!target.contains(v)) worst = std::max(worst, std::abs(static_cast<double>(prob)));
    }
  }
  return worst;
}

PoissonBinomialReport check_poisson_binomial_dominance(const std::vector<double>& p, int C) {
  const int n = static_cast<int>(p.size());
  if (n < 1 || n > 25) throw std::invalid_argument("need 1 <= n <= 25 indicators");
  for (double pi : p) {
    if (pi < 0 || pi > 0.5) throw std::invalid_argument("all p_i must lie in [0, 1/2]");
  }
  std::vector<double> pmf(1, 1.0);
  for (double pi : p) {
    std::vector<double> next(pmf.size() + 1, 0.0);
    for (std::size_t x = 0; x < pmf.size(); ++x) {
      next[x] += pmf[x] * (1 - pi);
      next[x + 1] += pmf[x] * pi;
    }
    pmf = std::move(next);
  }
  const auto success = [&](int x) { return pmf[static_cast<std::size_t>(x)]; };
  const auto failure = [&](int x) { return pmf[static_cast<std::size_t>(n - x)]; };

  PoissonBinomialReport report;
  constexpr double tol = 1e-12;
  const auto note = [&](int x, double slack) {
    report.margin = std::min(report.margin, slack);
    if (slack < -tol && report.ok) {
      report.ok = false;
      report.violating_x = x;
    }
  };
  for (int x = (n + 1) / 2; x <= n; ++x) {
    note(x, failure(x) - success(x));
    note(n - x, success(n - x) - failure(n - x));
  }
  // conditioned on both counts below C: n - C < x < C
  const int lo = std::max(0, n - C + 1);
  const int hi = std::min(n, C - 1);
  double window = 0;
  for (int x = lo; x <= hi; ++x) window += success(x);
  if (window > 0) {
    for (int x = std::max((n + 1) / 2, n - C); x < C; ++x) {
      const double s = (x >= lo && x <= hi) ? success(x) / window : 0.0;
      const double fcond = (x >= lo && x <= hi) ? failure(x) / window : 0.0;
      note(x, fcond - s);
    }
  }
  return report;
}

double check_lemma4_proportionality(const std::vector<bool>& full_mask, std::size_t samples,
                                    std::uint64_t seed) {
  const std::size_t k = full_mask.size();
  if (k < 2) throw std::invalid_argument("need at least 2 bins");
  std::vector<std::size_t> nonfull;
  for (std::size_t i = 0; i < k; ++i) {
    if (!full_mask[i]) nonfull.push_back(i);
  }
  if (nonfull.empty()) throw std::invalid_argument("need at least one non-full bin");

  // expected mass: own arc plus the run of full bins cascading into the bin
  std::vector<double> expected;
  expected.reserve(nonfull.size());
  for (std::size_t b : nonfull) {
    std::size_t cluster = 0;
    std::size_t i = (b + k - 1) % k;
    while (full_mask[i] && cluster < k) {
      ++cluster;
      i = (i + k - 1) % k;
    }
    expected.push_back(static_cast<double>(cluster + 1) / static_cast<double>(k));
  }

  std::vector<double> observed(nonfull.size(), 0.0);
  std::vector<std::size_t> dest_of(k);  // landing bin -> absorbing non-full index
  for (std::size_t idx = 0; idx < nonfull.size(); ++idx) dest_of[nonfull[idx]] = idx;
  for (std::size_t i = 0; i < k; ++i) {
    if (!full_mask[i]) continue;
    std::size_t j = i;
    while (full_mask[j]) j = (j + 1) % k;
    dest_of[i] = dest_of[j];
  }
  std::mt19937_64 rng(seed);
  for (std::size_t s = 0; s < samples; ++s) {
    observed[dest_of[rng() % k]] += 1.0;
  }
  if (nonfull.size() == 1) return 1.0;  // forced placement, nothing to test
  return stats::chi_square_gof_pvalue(observed, expected);
}

}  // namespace rjch::oracle
