#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rjch/metrics.hpp"
#include "rjch/ring.hpp"

namespace rjch::sim {

// One sweep cell: a (strategy, epsilon, virtual-copies) configuration.
struct CellConfig {
  std::size_t objects = 10000;
  std::size_t bins = 1000;
  double epsilon = 1.0;
  int virtual_copies = 0;
  Strategy strategy = Strategy::RJ_CH;
};

struct TrialOptions {
  int address_bits = 20;
  std::size_t probe_repeats = 100;  // fresh keys averaged for the next-insert metrics
  bool measure_cost = false;        // literal-walk wall-clock timing
  std::size_t cost_repeats = 16;
  std::optional<BiasSpec> bias;     // object-hash bias, when set
};

struct TrialMetrics {
  double load_variance = 0;
  double full_fraction = 0;
  std::size_t objects_until_first_full = 0;
  bool saturated = false;  // no bin filled during the trial
  double next_bin_searches = 0;
  double next_slot_steps = 0;
  double searches_sum = 0, searches_sumsq = 0;  // pooled per-insert accumulators
  double steps_sum = 0, steps_sumsq = 0;
  std::size_t probe_samples = 0;
  double wall_ns = 0;              // median literal next-insert time; machine-dependent
  std::size_t skipped_events = 0;  // churn events skipped (no capacity / last bin)
};

// Fills a fresh ring with `objects` keys and measures the end state plus the
// (n+1)-th placement, which is planned and rolled back.
TrialMetrics run_static_trial(const CellConfig& cell, const TrialOptions& opt,
                              std::uint64_t trial_seed);

// Static fill followed by `churn_events` object arrivals/departures (equal
// probability) with one bin arrival/departure interleaved after every
// ceil(objects/bins) object events.
TrialMetrics run_dynamic_trial(const CellConfig& cell, const TrialOptions& opt,
                               std::size_t churn_events, std::uint64_t trial_seed);

struct RemovalTrial {
  std::size_t objects = 0;
  double searches_per_object = 0;
  double steps_per_object = 0;
};

// Static fill, then one uniformly chosen bin is removed eagerly and the
// per-object relocation cost reported.
RemovalTrial run_bin_removal_trial(const CellConfig& cell, const TrialOptions& opt,
                                   std::uint64_t trial_seed);

enum class SweepKind { kStatic, kDynamic, kBinRemoval };

struct SweepConfig {
  std::size_t objects = 10000;
  std::size_t bins = 1000;
  std::vector<double> epsilons;
  std::vector<Strategy> strategies;
  int virtual_copies = 0;
  std::size_t trials = 1000;
  std::uint64_t seed = 1;
  SweepKind kind = SweepKind::kStatic;
  std::size_t churn_events = 0;  // 0 means `objects`
  TrialOptions options;
  int jobs = 0;  // 0 means hardware concurrency; 1 must match any N exactly
};

struct SummaryRow {
  Strategy strategy;
  std::size_t objects = 0, bins = 0;
  double epsilon = 0;
  int virtual_copies = 0;
  std::size_t trials = 0;
  std::string metric;
  double mean = 0;
  double std_dev = 0;
  bool has_std = true;  // objects-until-first-full omits std when every trial saturated
};

struct SweepSummary {
  std::vector<SummaryRow> rows;         // deterministic, CSV-facing
  std::vector<SummaryRow> timing_rows;  // wall-clock metrics, JSON only
  std::string csv() const;
};

SweepSummary run_sweep(const SweepConfig& config);

// Mean cross-bin variance of the cluster-mass placement probabilities of a
// hashed ring, per full-bin count 1..j_max, averaged over trials.
metrics::AssignProbSeries assignment_variance_series(std::size_t k, std::size_t capacity,
                                                     Strategy strategy, std::size_t trials,
                                                     std::size_t j_max, std::uint64_t seed);

struct PairedComparison {
  std::size_t wins = 0, losses = 0, ties = 0;
  double p_value = 1.0;  // two-sided sign test
  double mean_a = 0, mean_b = 0;
};

// Paired bin-removal cost comparison: per trial, the same seed drives both
// strategies and the per-object search means are compared (a wins when
// strictly lower).
PairedComparison paired_removal_comparison(const CellConfig& base, Strategy a, Strategy b,
                                           std::size_t trials, const TrialOptions& opt,
                                           std::uint64_t seed);

// 16-hex-digit identifier from the trial RNG.
std::string hex_key(std::mt19937_64& rng);

// Runs fn(i) for i in [0, count) across `jobs` threads; results must be
// written to disjoint slots so that any job count yields identical output.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace rjch::sim
