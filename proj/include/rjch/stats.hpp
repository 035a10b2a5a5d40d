#pragma once

#include <cstddef>
#include <vector>

namespace rjch::stats {

double mean(const std::vector<double>& xs);

// Population standard deviation (divide by N). The ideal-uniform baseline has
// exactly zero spread, so the population convention is used throughout.
double stddev(const std::vector<double>& xs);

double median(std::vector<double> xs);

// Upper-tail p-value of a chi-square statistic with `df` degrees of freedom.
double chi_square_pvalue(double statistic, double df);

// Chi-square goodness of fit: observed counts vs expected probabilities
// (probabilities are renormalized; expected count = p * total).
double chi_square_gof_pvalue(const std::vector<double>& observed,
                             const std::vector<double>& probabilities);

// Two-sided sign test p-value for `wins` successes out of `wins + losses`
// informative pairs under the null p = 1/2.
double sign_test_pvalue(std::size_t wins, std::size_t losses);

}  // namespace rjch::stats
