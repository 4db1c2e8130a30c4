#include "bpec/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace bpec {

std::int64_t SimulationConfig::transient_length() const {
  if (n_t) return *n_t;
  // Clamp so short blocks with eta near 1 still leave room for mode A.
  const auto n_a = build_schedule(n, params.eta, 0, 0.0, 0.0, 0.0).mode_a().length;
  return std::min(default_transient_length(n), n - n_a);
}

double SimulationConfig::transient_erasure() const {
  return delta_t.value_or(std::max(params.delta_a, params.delta_b));
}

std::vector<TrialStats> simulate_trials(const SimulationConfig& config,
                                        const TrialOptions& options) {
  if (config.trials < 1) throw std::invalid_argument("trials must be >= 1");
  const auto& p = config.params;
  const auto schedule = build_schedule(config.n, p.eta, config.transient_length(),
                                       p.delta_a, config.transient_erasure(), p.delta_b);
  const auto plan = plan_scheme(p, config.n, config.scheme, config.guard_coeff);

  std::vector<TrialStats> out(static_cast<std::size_t>(config.trials));
  std::atomic<std::int64_t> next{0};
  auto worker = [&] {
    for (auto i = next++; i < config.trials; i = next++) {
      out[static_cast<std::size_t>(i)] =
          run_trial(schedule, plan, derive_seed(config.master_seed, static_cast<std::uint64_t>(i)),
                    options);
    }
  };

  unsigned threads = config.threads == 0 ? std::thread::hardware_concurrency()
                                         : config.threads;
  threads = std::clamp<unsigned>(threads, 1U, static_cast<unsigned>(config.trials));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
  }
  return out;
}

AggregateStats aggregate(std::span<const TrialStats> trials, const SchemePlan& plan) {
  AggregateStats agg;
  agg.trials = static_cast<std::int64_t>(trials.size());
  if (trials.empty()) return agg;

  double sum = 0.0;
  double sum_sq = 0.0;
  std::int64_t fail1 = 0;
  std::int64_t fail2 = 0;
  double per_packet = 0.0;
  double backlog1 = 0.0;
  double backlog2 = 0.0;
  const auto& first = plan.stages.front();
  const double raw_packets = static_cast<double>(first.count[0] + first.count[1]);
  for (const auto& t : trials) {
    const double rate = t.sum_rate(plan.n);
    sum += rate;
    sum_sq += rate * rate;
    fail1 += t.decode_ok[0] ? 0 : 1;
    fail2 += t.decode_ok[1] ? 0 : 1;
    if (raw_packets > 0) per_packet += static_cast<double>(t.raw_slots) / raw_packets;
    if (first.count[0] > 0) {
      backlog1 += static_cast<double>(t.backlog_at_multicast[0]) /
                  static_cast<double>(first.count[0]);
    }
    if (first.count[1] > 0) {
      backlog2 += static_cast<double>(t.backlog_at_multicast[1]) /
                  static_cast<double>(first.count[1]);
    }
    agg.invariant_violations += t.invariant_violations;
    agg.bit_errors += t.bit_errors;
  }
  const double count = static_cast<double>(trials.size());
  agg.mean_sum_rate = sum / count;
  const double var = trials.size() > 1
                         ? std::max(0.0, (sum_sq - count * agg.mean_sum_rate * agg.mean_sum_rate) /
                                             (count - 1.0))
                         : 0.0;
  agg.sum_rate_stddev = std::sqrt(var);
  const double half = 1.96 * agg.sum_rate_stddev / std::sqrt(count);
  agg.ci95_low = agg.mean_sum_rate - half;
  agg.ci95_high = agg.mean_sum_rate + half;
  agg.failure_rate_1 = static_cast<double>(fail1) / count;
  agg.failure_rate_2 = static_cast<double>(fail2) / count;
  agg.mean_slots_per_raw_packet = per_packet / count;
  agg.mean_backlog_fraction_1 = backlog1 / count;
  agg.mean_backlog_fraction_2 = backlog2 / count;
  return agg;
}

AggregateStats simulate(const SimulationConfig& config) {
  const auto trials = simulate_trials(config);
  const auto plan = plan_scheme(config.params, config.n, config.scheme, config.guard_coeff);
  return aggregate(trials, plan);
}

double analytic_sum_rate(const ModeParams& p, Scheme scheme) {
  switch (scheme) {
    case Scheme::InterModal: return achievable_intermodal_sum(p);
    case Scheme::IntraModal: return achievable_intramodal_sum(p);
    case Scheme::NoFeedback: return achievable_nofeedback_sum(p);
  }
  return 0.0;
}

std::vector<ConvergenceRow> convergence_sweep(const SimulationConfig& base,
                                              std::span<const std::int64_t> n_list) {
  if (!std::is_sorted(n_list.begin(), n_list.end())) {
    throw std::invalid_argument("blocklengths must be ascending");
  }
  std::vector<ConvergenceRow> rows;
  for (const auto n : n_list) {
    auto cfg = base;
    cfg.n = n;
    const auto agg = simulate(cfg);
    rows.push_back({n, agg.mean_sum_rate, agg.failure_rate(), agg.ci95_half_width()});
  }
  return rows;
}

}  // namespace bpec
