#include "rjch/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "rjch/stats.hpp"

namespace rjch::sim {

std::string hex_key(std::mt19937_64& rng) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(rng()));
  return std::string(buf, 16);
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 0) {
    jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  }
  if (jobs == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(jobs));
  for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

RingParams ring_params_for(const CellConfig& cell, const TrialOptions& opt,
                           std::uint64_t trial_seed) {
  RingParams p;
  p.address_bits = opt.address_bits;
  p.seed = trial_seed;
  p.strategy = cell.strategy;
  p.virtual_copies = cell.virtual_copies;
  p.capacity = cell.strategy == Strategy::CH
                   ? kUnboundedCapacity
                   : capacity_for(cell.objects, cell.bins, cell.epsilon);
  p.object_bias = opt.bias;
  return p;
}

struct FilledRing {
  RingTable ring;
  std::vector<std::string> resident;  // insertion order
};

FilledRing fill_ring(const CellConfig& cell, const TrialOptions& opt, std::mt19937_64& rng,
                     std::uint64_t trial_seed, TrialMetrics& m) {
  RingTable ring(ring_params_for(cell, opt, trial_seed));
  for (std::size_t i = 0; i < cell.bins; ++i) ring.add_bin(hex_key(rng));
  std::vector<std::string> resident;
  resident.reserve(cell.objects);
  m.objects_until_first_full = cell.objects;
  m.saturated = true;
  for (std::size_t i = 1; i <= cell.objects; ++i) {
    std::string key = hex_key(rng);
    ring.insert(key);
    resident.push_back(std::move(key));
    if (m.saturated && ring.full_bins() > 0) {
      m.objects_until_first_full = i;
      m.saturated = false;
    }
  }
  return {std::move(ring), std::move(resident)};
}

void observe_state(const RingTable& ring, TrialMetrics& m) {
  m.load_variance = metrics::load_variance(ring.load_vector());
  m.full_fraction = ring.full_fraction();
}

void measure_next_insert(const RingTable& ring, const TrialOptions& opt, std::mt19937_64& rng,
                         TrialMetrics& m) {
  if (ring.fillable_bins() == 0) return;  // exactly-full ring: nothing to place
  for (std::size_t r = 0; r < opt.probe_repeats; ++r) {
    const std::string key = hex_key(rng);
    const PlacementOutcome out = ring.plan(key);
    const double searches = static_cast<double>(out.bin_searches);
    const double steps = static_cast<double>(out.slot_steps);
    m.searches_sum += searches;
    m.searches_sumsq += searches * searches;
    m.steps_sum += steps;
    m.steps_sumsq += steps * steps;
    ++m.probe_samples;
  }
  if (m.probe_samples > 0) {
    m.next_bin_searches = m.searches_sum / static_cast<double>(m.probe_samples);
    m.next_slot_steps = m.steps_sum / static_cast<double>(m.probe_samples);
  }
  if (opt.measure_cost) {
    std::vector<double> times;
    times.reserve(opt.cost_repeats);
    for (std::size_t r = 0; r < opt.cost_repeats; ++r) {
      const std::string key = hex_key(rng);
      times.push_back(static_cast<double>(ring.timed_plan(key).nanoseconds));
    }
    if (!times.empty()) m.wall_ns = stats::median(std::move(times));
  }
}

}  // namespace

TrialMetrics run_static_trial(const CellConfig& cell, const TrialOptions& opt,
                              std::uint64_t trial_seed) {
  std::mt19937_64 rng(trial_seed);
  TrialMetrics m;
  FilledRing filled = fill_ring(cell, opt, rng, trial_seed, m);
  observe_state(filled.ring, m);
  measure_next_insert(filled.ring, opt, rng, m);
  return m;
}

TrialMetrics run_dynamic_trial(const CellConfig& cell, const TrialOptions& opt,
                               std::size_t churn_events, std::uint64_t trial_seed) {
  std::mt19937_64 rng(trial_seed);
  TrialMetrics m;
  FilledRing filled = fill_ring(cell, opt, rng, trial_seed, m);
  RingTable& ring = filled.ring;
  auto& resident = filled.resident;
  std::unordered_map<std::string, std::size_t> resident_pos;
  resident_pos.reserve(resident.size() * 2);
  for (std::size_t i = 0; i < resident.size(); ++i) resident_pos.emplace(resident[i], i);

  std::vector<int> alive_ords;
  alive_ords.reserve(cell.bins);
  for (std::size_t i = 0; i < ring.bin_count(); ++i) {
    if (ring.bin(static_cast<int>(i)).alive) alive_ords.push_back(static_cast<int>(i));
  }

  const std::size_t events_per_bin_event =
      (cell.objects + cell.bins - 1) / std::max<std::size_t>(1, cell.bins);
  const std::size_t capacity = ring.params().capacity;

  auto drop_resident = [&](const std::string& key) {
    auto it = resident_pos.find(key);
    const std::size_t pos = it->second;
    resident_pos.erase(it);
    const std::size_t last = resident.size() - 1;
    if (pos != last) {
      resident[pos] = std::move(resident[last]);
      resident_pos[resident[pos]] = pos;
    }
    resident.pop_back();
  };

  for (std::size_t e = 1; e <= churn_events; ++e) {
    if (rng() % 2 == 0) {  // object arrival
      if (ring.fillable_bins() == 0) {
        ++m.skipped_events;
      } else {
        std::string key = hex_key(rng);
        ring.insert(key);
        resident_pos.emplace(key, resident.size());
        resident.push_back(std::move(key));
      }
    } else {  // object departure
      if (resident.empty()) {
        ++m.skipped_events;
      } else {
        const std::size_t idx = rng() % resident.size();
        const std::string key = resident[idx];
        ring.remove_object(key);
        drop_resident(key);
      }
    }
    if (e % events_per_bin_event == 0) {
      if (rng() % 2 == 0) {  // bin arrival
        const int ord = ring.add_bin(hex_key(rng));
        alive_ords.push_back(ord);
      } else if (alive_ords.size() > 1) {  // bin departure, eager relocation
        const std::size_t pick = rng() % alive_ords.size();
        const int ord = alive_ords[pick];
        const std::size_t victim_load = ring.bin(ord).load();
        bool can_remove = true;
        if (capacity != kUnboundedCapacity) {
          const std::size_t others_free =
              (ring.alive_bins() - 1) * capacity - (ring.total_load() - victim_load);
          can_remove = others_free >= victim_load;
        }
        if (!can_remove) {
          ++m.skipped_events;
        } else {
          // eager relocation: the keys stay resident, only their bin changes
          ring.remove_bin(ring.bin(ord).id, RemovalMode::kEager);
          alive_ords[pick] = alive_ords.back();
          alive_ords.pop_back();
        }
      } else {
        ++m.skipped_events;
      }
    }
  }

  observe_state(ring, m);
  measure_next_insert(ring, opt, rng, m);
  return m;
}

RemovalTrial run_bin_removal_trial(const CellConfig& cell, const TrialOptions& opt,
                                   std::uint64_t trial_seed) {
  std::mt19937_64 rng(trial_seed);
  TrialMetrics m;
  FilledRing filled = fill_ring(cell, opt, rng, trial_seed, m);
  RingTable& ring = filled.ring;
  const std::size_t pick = rng() % ring.alive_bins();
  // alive ordinals are 0..k-1 right after a static fill
  const RelocationStats stats = ring.remove_bin(ring.bin(static_cast<int>(pick)).id,
                                                RemovalMode::kEager);
  RemovalTrial out;
  out.objects = stats.objects;
  if (stats.objects > 0) {
    out.searches_per_object =
        static_cast<double>(stats.bin_searches) / static_cast<double>(stats.objects);
    out.steps_per_object =
        static_cast<double>(stats.slot_steps) / static_cast<double>(stats.objects);
  }
  return out;
}

namespace {

std::string cell_tag(const CellConfig& cell, SweepKind kind) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%s/%.17g/v%d/%d", to_string(cell.strategy), cell.epsilon,
                cell.virtual_copies, static_cast<int>(kind));
  return buf;
}

SummaryRow make_row(const CellConfig& cell, std::size_t trials, std::string metric,
                    const std::vector<double>& values) {
  SummaryRow row;
  row.strategy = cell.strategy;
  row.objects = cell.objects;
  row.bins = cell.bins;
  row.epsilon = cell.epsilon;
  row.virtual_copies = cell.virtual_copies;
  row.trials = trials;
  row.metric = std::move(metric);
  row.mean = stats::mean(values);
  row.std_dev = stats::stddev(values);
  return row;
}

}  // namespace

SweepSummary run_sweep(const SweepConfig& config) {
  if (config.epsilons.empty()) throw std::invalid_argument("no epsilon values");
  if (config.strategies.empty()) throw std::invalid_argument("no strategies");
  if (config.trials == 0) throw std::invalid_argument("trials must be >= 1");
  for (Strategy s : config.strategies) {
    if (s == Strategy::CH) continue;
    for (double eps : config.epsilons) {
      if (eps <= 0) throw std::invalid_argument("epsilon must be > 0 for bounded strategies");
      const std::size_t cap = capacity_for(config.objects, config.bins, eps);
      if (config.objects > config.bins * cap) {
        throw OverflowError("infeasible: objects exceed total capacity");
      }
    }
  }

  std::vector<CellConfig> cells;
  for (Strategy s : config.strategies) {
    for (double eps : config.epsilons) {
      cells.push_back({config.objects, config.bins, eps, config.virtual_copies, s});
    }
  }

  const std::size_t churn = config.churn_events == 0 ? config.objects : config.churn_events;

  std::vector<std::vector<TrialMetrics>> metrics_by_cell(cells.size());
  std::vector<std::vector<RemovalTrial>> removals_by_cell(cells.size());
  for (auto& v : metrics_by_cell) v.resize(config.trials);
  for (auto& v : removals_by_cell) v.resize(config.trials);

  const std::size_t total_jobs = cells.size() * config.trials;
  parallel_for(total_jobs, config.jobs, [&](std::size_t idx) {
    const std::size_t ci = idx / config.trials;
    const std::size_t ti = idx % config.trials;
    const CellConfig& cell = cells[ci];
    const std::uint64_t trial_seed =
        derive_seed(config.seed, cell_tag(cell, config.kind) + "/" + std::to_string(ti));
    switch (config.kind) {
      case SweepKind::kStatic:
        metrics_by_cell[ci][ti] = run_static_trial(cell, config.options, trial_seed);
        break;
      case SweepKind::kDynamic:
        metrics_by_cell[ci][ti] =
            run_dynamic_trial(cell, config.options, churn, trial_seed);
        break;
      case SweepKind::kBinRemoval:
        removals_by_cell[ci][ti] = run_bin_removal_trial(cell, config.options, trial_seed);
        break;
    }
  });

  SweepSummary summary;
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const CellConfig& cell = cells[ci];
    if (config.kind == SweepKind::kBinRemoval) {
      const auto& trials = removals_by_cell[ci];
      std::vector<double> objects, searches, steps;
      for (const auto& t : trials) {
        objects.push_back(static_cast<double>(t.objects));
        searches.push_back(t.searches_per_object);
        steps.push_back(t.steps_per_object);
      }
      summary.rows.push_back(make_row(cell, config.trials, "relocation_objects", objects));
      summary.rows.push_back(
          make_row(cell, config.trials, "relocation_searches_per_object", searches));
      summary.rows.push_back(
          make_row(cell, config.trials, "relocation_steps_per_object", steps));
      continue;
    }

    const auto& trials = metrics_by_cell[ci];
    std::vector<double> variance, fraction, ofuf, wall, skipped;
    bool all_saturated = true;
    double searches_sum = 0, searches_sumsq = 0, steps_sum = 0, steps_sumsq = 0;
    std::size_t samples = 0;
    for (const auto& t : trials) {
      variance.push_back(t.load_variance);
      fraction.push_back(t.full_fraction);
      ofuf.push_back(static_cast<double>(t.objects_until_first_full));
      all_saturated = all_saturated && t.saturated;
      searches_sum += t.searches_sum;
      searches_sumsq += t.searches_sumsq;
      steps_sum += t.steps_sum;
      steps_sumsq += t.steps_sumsq;
      samples += t.probe_samples;
      if (config.options.measure_cost) wall.push_back(t.wall_ns);
      if (config.kind == SweepKind::kDynamic) {
        skipped.push_back(static_cast<double>(t.skipped_events));
      }
    }
    summary.rows.push_back(make_row(cell, config.trials, "load_variance", variance));
    summary.rows.push_back(make_row(cell, config.trials, "full_fraction", fraction));
    {
      SummaryRow row = make_row(cell, config.trials, "objects_until_first_full", ofuf);
      row.has_std = !all_saturated;
      summary.rows.push_back(row);
    }
    if (samples > 0) {
      const double n = static_cast<double>(samples);
      SummaryRow searches = make_row(cell, config.trials, "next_insert_bin_searches",
                                     {searches_sum / n});
      searches.mean = searches_sum / n;
      searches.std_dev =
          std::sqrt(std::max(0.0, searches_sumsq / n - searches.mean * searches.mean));
      summary.rows.push_back(searches);
      SummaryRow steps = make_row(cell, config.trials, "next_insert_slot_steps", {steps_sum / n});
      steps.mean = steps_sum / n;
      steps.std_dev = std::sqrt(std::max(0.0, steps_sumsq / n - steps.mean * steps.mean));
      summary.rows.push_back(steps);
    }
    if (config.kind == SweepKind::kDynamic) {
      summary.rows.push_back(make_row(cell, config.trials, "skipped_churn_events", skipped));
    }
    if (config.options.measure_cost && !wall.empty()) {
      summary.timing_rows.push_back(
          make_row(cell, config.trials, "wall_clock_next_insert_ns", wall));
    }
  }
  return summary;
}

std::string SweepSummary::csv() const {
  std::string out = "strategy,n,k,epsilon,virtual,trials,metric,mean,std\n";
  char buf[256];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%zu,%zu,%g,%d,%zu,%s,%.10g,", to_string(row.strategy),
                  row.objects, row.bins, row.epsilon, row.virtual_copies, row.trials,
                  row.metric.c_str(), row.mean);
    out += buf;
    if (row.has_std) {
      std::snprintf(buf, sizeof(buf), "%.10g", row.std_dev);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

metrics::AssignProbSeries assignment_variance_series(std::size_t k, std::size_t capacity,
                                                     Strategy strategy, std::size_t trials,
                                                     std::size_t j_max, std::uint64_t seed) {
  if (k < 2 || capacity == 0) throw std::invalid_argument("need k >= 2 and capacity >= 1");
  j_max = std::min(j_max, k - 1);
  std::vector<long double> acc(j_max, 0.0L);
  for (std::size_t t = 0; t < trials; ++t) {
    const std::uint64_t trial_seed = derive_seed(seed, "assign/" + std::to_string(t));
    std::mt19937_64 rng(trial_seed);
    RingParams p;
    p.seed = trial_seed;
    p.strategy = strategy;
    p.capacity = capacity;
    RingTable ring(p);
    for (std::size_t i = 0; i < k; ++i) ring.add_bin(hex_key(rng));
    std::size_t recorded = 0;
    const std::size_t max_inserts = k * capacity;
    for (std::size_t i = 0; i < max_inserts && recorded < j_max; ++i) {
      ring.insert(hex_key(rng));
      if (ring.full_bins() > recorded) {
        recorded = ring.full_bins();
        if (recorded > j_max) break;
        const auto probs = metrics::cluster_mass_probabilities(ring);
        acc[recorded - 1] += probs.empty() ? 0.0 : metrics::load_variance_d(probs);
      }
    }
  }
  metrics::AssignProbSeries series;
  series.var.reserve(j_max);
  for (std::size_t j = 0; j < j_max; ++j) {
    series.var.push_back(static_cast<double>(acc[j] / static_cast<long double>(trials)));
  }
  return series;
}

PairedComparison paired_removal_comparison(const CellConfig& base, Strategy a, Strategy b,
                                           std::size_t trials, const TrialOptions& opt,
                                           std::uint64_t seed) {
  PairedComparison cmp;
  std::vector<double> costs_a(trials), costs_b(trials);
  parallel_for(trials, 0, [&](std::size_t t) {
    const std::uint64_t trial_seed = derive_seed(seed, "removal/" + std::to_string(t));
    CellConfig cell_a = base;
    cell_a.strategy = a;
    CellConfig cell_b = base;
    cell_b.strategy = b;
    costs_a[t] = run_bin_removal_trial(cell_a, opt, trial_seed).searches_per_object;
    costs_b[t] = run_bin_removal_trial(cell_b, opt, trial_seed).searches_per_object;
  });
  for (std::size_t t = 0; t < trials; ++t) {
    if (costs_a[t] < costs_b[t]) {
      ++cmp.wins;
    } else if (costs_a[t] > costs_b[t]) {
      ++cmp.losses;
    } else {
      ++cmp.ties;
    }
  }
  cmp.p_value = stats::sign_test_pvalue(cmp.wins, cmp.losses);
  cmp.mean_a = stats::mean(costs_a);
  cmp.mean_b = stats::mean(costs_b);
  return cmp;
}

}  // namespace rjch::sim
