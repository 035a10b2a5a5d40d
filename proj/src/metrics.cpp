#include "rjch/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace rjch::metrics {

double load_variance(const std::vector<std::size_t>& loads) {
  std::vector<double> d(loads.begin(), loads.end());
  return load_variance_d(d);
}

double load_variance_d(const std::vector<double>& loads) {
  if (loads.empty()) throw std::invalid_argument("load variance of empty vector");
  long double sum = 0;
  for (double x : loads) sum += x;
  const long double mean = sum / loads.size();
  long double s2 = 0;
  for (double x : loads) s2 += (x - mean) * (x - mean);
  return static_cast<double>(s2 / loads.size());
}

double chbl_search_bound(double epsilon) {
  if (epsilon <= 0) throw std::invalid_argument("epsilon must be > 0");
  if (epsilon < 1) return 2.0 / (epsilon * epsilon);
  return 1.0 + std::log1p(epsilon) / (1.0 + epsilon);
}

double rjch_search_bound(double epsilon) {
  if (epsilon <= 0) throw std::invalid_argument("epsilon must be > 0");
  return 1.0 + 1.0 / epsilon;
}

std::vector<double> cluster_mass_probabilities(const RingTable& table) {
  if (table.params().strategy == Strategy::RJ_CH) {
    std::size_t nonfull_slots = 0;
    std::vector<std::size_t> owned;
    for (std::size_t i = 0; i < table.bin_count(); ++i) {
      const auto& b = table.bin(static_cast<int>(i));
      if (!b.alive || b.failed || table.is_full(static_cast<int>(i))) continue;
      owned.push_back(b.slots.size());
      nonfull_slots += b.slots.size();
    }
    std::vector<double> probs;
    probs.reserve(owned.size());
    for (std::size_t s : owned) {
      probs.push_back(static_cast<double>(s) / static_cast<double>(nonfull_slots));
    }
    return probs;
  }

  // Clockwise strategies: walk the occupied slots in ring order, accumulating
  // arc mass across runs of full bins until a non-full bin absorbs it.
  std::vector<double> acc(table.bin_count(), 0.0);
  std::vector<int> order;  // alive non-full ordinals, in absorption order
  std::vector<std::pair<std::uint64_t, int>> slots;
  for (std::size_t i = 0; i < table.bin_count(); ++i) {
    const auto& b = table.bin(static_cast<int>(i));
    if (!b.alive) continue;
    for (auto s : b.slots) slots.emplace_back(s, static_cast<int>(i));
  }
  std::sort(slots.begin(), slots.end());
  if (slots.empty()) return {};

  const std::uint64_t space = std::uint64_t{1} << table.params().address_bits;
  const std::uint64_t maskv = space - 1;
  const auto nonfull = [&](int ord) {
    const auto& b = table.bin(ord);
    return !b.failed && !table.is_full(ord);
  };

  // start just after some non-full slot so the wrap never splits a cascade
  std::size_t start = slots.size();
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (nonfull(slots[i].second)) {
      start = i;
      break;
    }
  }
  if (start == slots.size()) return {};  // every alive bin full

  long double carried = 0;
  std::vector<char> seen(table.bin_count(), 0);
  for (std::size_t step = 1; step <= slots.size(); ++step) {
    const std::size_t i = (start + step) % slots.size();
    const std::size_t prev_i = (start + step - 1) % slots.size();
    const std::uint64_t arc =
        slots.size() == 1 ? space : ((slots[i].first - slots[prev_i].first) & maskv);
    carried += static_cast<long double>(arc);
    const int ord = slots[i].second;
    if (nonfull(ord)) {
      acc[static_cast<std::size_t>(ord)] += static_cast<double>(carried);
      carried = 0;
      if (!seen[static_cast<std::size_t>(ord)]) {
        seen[static_cast<std::size_t>(ord)] = 1;
        order.push_back(ord);
      }
    }
  }

  std::vector<double> probs;
  probs.reserve(order.size());
  for (int ord : order) {
    probs.push_back(acc[static_cast<std::size_t>(ord)] / static_cast<double>(space));
  }
  return probs;
}

namespace {

// Circular linked list over the still-non-full bins of the idealized process.
struct IdealizedProcess {
  std::vector<std::uint32_t> next, prev;
  std::vector<double> mass;
  std::vector<std::uint32_t> pool;  // non-full ordinals, unordered
  std::vector<std::uint32_t> pool_pos;
  long double sumsq = 0;
  std::size_t remaining = 0;

  explicit IdealizedProcess(std::size_t k)
      : next(k), prev(k), mass(k, 1.0 / static_cast<double>(k)), pool(k), pool_pos(k),
        remaining(k) {
    for (std::uint32_t i = 0; i < k; ++i) {
      next[i] = (i + 1) % k;
      prev[i] = (i + k - 1) % k;
      pool[i] = i;
      pool_pos[i] = i;
    }
    sumsq = static_cast<long double>(k) * (1.0L / k) * (1.0L / k);
  }

  // Marks a uniformly chosen non-full bin full; its mass moves clockwise.
  void step(std::mt19937_64& rng) {
    const std::size_t pick = static_cast<std::size_t>(rng() % pool.size());
    const std::uint32_t b = pool[pick];
    const std::uint32_t succ = next[b];
    sumsq += -static_cast<long double>(mass[b]) * mass[b] -
             static_cast<long double>(mass[succ]) * mass[succ] +
             (static_cast<long double>(mass[b]) + mass[succ]) *
                 (static_cast<long double>(mass[b]) + mass[succ]);
    mass[succ] += mass[b];
    next[prev[b]] = next[b];
    prev[next[b]] = prev[b];
    const std::uint32_t last = pool.back();
    pool[pick] = last;
    pool_pos[last] = static_cast<std::uint32_t>(pick);
    pool.pop_back();
    --remaining;
  }

  double variance() const {
    const long double m = 1.0L / static_cast<long double>(remaining);
    return static_cast<double>(sumsq / static_cast<long double>(remaining) - m * m);
  }
};

}  // namespace

AssignProbSeries assign_prob_variance_idealized(std::size_t k, std::size_t j_max,
                                                std::size_t trials, std::uint64_t seed) {
  if (k < 3) throw std::invalid_argument("idealized process needs k >= 3");
  j_max = std::min(j_max, k - 2);
  AssignProbSeries series;
  series.var.assign(j_max, 0.0);
  std::vector<long double> acc(j_max, 0.0L);
  for (std::size_t t = 0; t < trials; ++t) {
    std::mt19937_64 rng(derive_seed(seed, "ideal/" + std::to_string(t)));
    IdealizedProcess proc(k);
    for (std::size_t j = 1; j <= j_max; ++j) {
      proc.step(rng);
      acc[j - 1] += proc.variance();
    }
  }
  for (std::size_t j = 0; j < j_max; ++j) {
    series.var[j] = static_cast<double>(acc[j] / static_cast<long double>(trials));
  }
  return series;
}

RatioEstimate idealized_growth_ratio(std::size_t k, std::size_t j, std::size_t trials,
                                     std::uint64_t seed) {
  if (j < 2) throw std::invalid_argument("growth ratio needs j >= 2");
  const std::size_t batches = std::min<std::size_t>(100, trials);
  const std::size_t per_batch = trials / batches;
  std::vector<double> ratios;
  ratios.reserve(batches);
  std::size_t trial = 0;
  for (std::size_t b = 0; b < batches; ++b) {
    long double lo = 0, hi = 0;
    for (std::size_t t = 0; t < per_batch; ++t, ++trial) {
      std::mt19937_64 rng(derive_seed(seed, "ratio/" + std::to_string(trial)));
      IdealizedProcess proc(k);
      for (std::size_t s = 1; s < j; ++s) proc.step(rng);
      lo += proc.variance();
      proc.step(rng);
      hi += proc.variance();
    }
    ratios.push_back(static_cast<double>(hi / lo));
  }
  long double mean = 0;
  for (double r : ratios) mean += r;
  mean /= batches;
  long double s2 = 0;
  for (double r : ratios) s2 += (r - mean) * (r - mean);
  const double se =
      batches > 1 ? std::sqrt(static_cast<double>(s2) / (batches * (batches - 1.0))) : 0.0;
  return {static_cast<double>(mean), se};
}

}  // namespace rjch::metrics
