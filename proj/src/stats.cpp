#include "rjch/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace rjch::stats {

double mean(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean of empty sample");
  long double s = 0;
  for (double x : xs) s += x;
  return static_cast<double>(s / xs.size());
}

double stddev(const std::vector<double>& xs) {
  const double m = mean(xs);
  long double s2 = 0;
  for (double x : xs) s2 += (x - m) * (x - m);
  return std::sqrt(static_cast<double>(s2 / xs.size()));
}

double median(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("median of empty sample");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double chi_square_pvalue(double statistic, double df) {
  if (statistic <= 0) return 1.0;
  return boost::math::gamma_q(df / 2.0, statistic / 2.0);
}

double chi_square_gof_pvalue(const std::vector<double>& observed,
                             const std::vector<double>& probabilities) {
  if (observed.size() != probabilities.size() || observed.size() < 2) {
    throw std::invalid_argument("chi-square needs matched samples with >= 2 cells");
  }
  double total = 0, psum = 0;
  for (double o : observed) total += o;
  for (double p : probabilities) psum += p;
  if (total <= 0 || psum <= 0) throw std::invalid_argument("chi-square needs positive totals");
  double stat = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double expected = total * probabilities[i] / psum;
    if (expected <= 0) {
      if (observed[i] > 0) return 0.0;
      continue;
    }
    const double d = observed[i] - expected;
    stat += d * d / expected;
  }
  return chi_square_pvalue(stat, static_cast<double>(observed.size() - 1));
}

double sign_test_pvalue(std::size_t wins, std::size_t losses) {
  const std::size_t n = wins + losses;
  if (n == 0) return 1.0;
  const boost::math::binomial_distribution<double> dist(static_cast<double>(n), 0.5);
  const double k = static_cast<double>(std::min(wins, losses));
  double tail = boost::math::cdf(dist, k);
  return std::min(1.0, 2.0 * tail);
}

}  // namespace rjch::stats
