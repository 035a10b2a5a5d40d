#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace rjch::oracle {

// Exact-arithmetic reference implementations over the idealized ring: k bins
// in a cycle with equal arc lengths. The clockwise rule drops an object on a
// uniformly random bin and cascades to the next non-full bin; the uniform
// rule places it on a uniformly random non-full bin. These are deliberately
// independent of the hashed RingTable so they can serve as oracles for it.

using Rational = boost::multiprecision::cpp_rational;
using LoadVector = std::vector<int>;
using LoadDistribution = std::map<LoadVector, Rational>;

// First `m` objects placed by the clockwise rule, the remaining n - m by the
// uniform rule.
struct SchemeSpec {
  int m = 0;
};

// Exact joint pmf of the final load vector after n placements into k bins of
// capacity C under the given scheme. Throws when the state space is too big.
LoadDistribution exact_distribution(int k, int C, int n, SchemeSpec scheme);

// Multinomial pmf of n draws over probabilities p, conditioned on every count
// being at most C - 1, exactly normalized. Throws on empty support.
LoadDistribution constrained_multinomial_pmf(int n, const std::vector<Rational>& p, int C);

Rational expected_f_sum(const LoadDistribution& dist, const std::vector<Rational>& f);

double total_variation(const LoadDistribution& a, const LoadDistribution& b);

struct DominanceReport {
  bool ok = false;        // uniform-rule E-sum <= clockwise-rule E-sum
  bool monotone = false;  // E-sum nondecreasing along the m-interpolation
  int violating_m = -1;   // first m with E-sum(m) > E-sum(m+1), when any
  double margin = 0;      // E-sum(n) - E-sum(0)
};

// Checks sum_i E[f(X_i)] for a convex f table on {0..C}: endpoint dominance
// and monotonicity over every interpolation step. Rejects non-convex f.
DominanceReport check_convex_dominance(int k, int C, int n, const std::vector<Rational>& f);

// Final joint distribution when all N added objects are placed by the
// uniform rule except the m-th, which drops on bin 1 and is reassigned by the
// uniform rule if bin 1 is full. Initial loads b (all below C).
LoadDistribution pinned_object_distribution(int K, int C, const std::vector<int>& b, int N,
                                            int m);

// Max pairwise total-variation distance across m = 1..N; exactly 0 when the
// pinned object's position is irrelevant.
double check_lemma1_invariance(int K, int C, const std::vector<int>& b, int N);

// Max absolute probability difference between the conditional of a
// constrained multinomial on a subset sum and the constrained multinomial
// with renormalized probabilities; exactly 0 when conditioning is closed.
double check_conditional_closure(int n, const std::vector<Rational>& p, int C,
                                 const std::vector<int>& subset);

struct PoissonBinomialReport {
  bool ok = true;
  int violating_x = -1;
  double margin = 0;  // most negative slack seen
};

// For independent indicators with success probabilities p_i <= 1/2, verifies
// that the count of successes is stochastically below the count of failures,
// both unconditionally and conditioned on both staying below C.
PoissonBinomialReport check_poisson_binomial_dominance(const std::vector<double>& p, int C);

// Simulates next-placements on a frozen idealized ring with the given
// full-bin mask and chi-square-tests the non-full-bin frequencies against
// (cluster length + 1) / k. Returns the p-value.
double check_lemma4_proportionality(const std::vector<bool>& full_mask, std::size_t samples,
                                    std::uint64_t seed);

}  // namespace rjch::oracle
