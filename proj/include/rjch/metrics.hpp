#pragma once

#include <cstdint>
#include <vector>

#include "rjch/ring.hpp"

namespace rjch::metrics {

// Population variance of bin loads; the ideal uniform assignment scores 0.
double load_variance(const std::vector<std::size_t>& loads);
double load_variance_d(const std::vector<double>& loads);

// Upper bound on the expected bin searches of a clockwise bounded-load
// insert: 2/eps^2 below eps = 1, 1 + ln(1+eps)/(1+eps) at or above it.
double chbl_search_bound(double epsilon);

// Upper bound for the probe strategy: 1 + 1/eps.
double rjch_search_bound(double epsilon);

// Placement probability of each alive non-full bin, estimated from effective
// cluster mass: a bin's probability is proportional to its own arc plus the
// arcs of the contiguous run of full bins that cascade into it. For the probe
// strategy the estimate is slots-proportional, which is uniform across
// non-full bins. Entries sum to 1; full (and failed) bins are excluded.
// Returns an empty vector when every alive bin is full.
std::vector<double> cluster_mass_probabilities(const RingTable& table);

struct AssignProbSeries {
  // var[j - 1] estimates the cross-bin variance of the placement probability
  // when exactly j bins are full, for j = 1..size().
  std::vector<double> var;
};

// Monte-Carlo of the idealized overflow process: k bins start with equal
// probability 1/k; at each step a uniformly random non-full bin becomes full
// and its mass is added to the next non-full bin clockwise. Returns the mean
// cross-bin variance per full-bin count over `trials` runs.
AssignProbSeries assign_prob_variance_idealized(std::size_t k, std::size_t j_max,
                                                std::size_t trials, std::uint64_t seed);

struct RatioEstimate {
  double ratio = 0;       // mean Var(p^j) / Var(p^{j-1})
  double std_error = 0;   // batch-means standard error of the ratio
};

// One-step growth ratio of the idealized process variance at full-bin count j.
RatioEstimate idealized_growth_ratio(std::size_t k, std::size_t j, std::size_t trials,
                                     std::uint64_t seed);

}  // namespace rjch::metrics
