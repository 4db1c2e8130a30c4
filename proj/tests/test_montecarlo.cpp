#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <vector>

#include "bpec/montecarlo.hpp"

using namespace bpec;
using doctest::Approx;

namespace {

SimulationConfig capacity_config() {
  SimulationConfig cfg;
  cfg.params = {0.75, 0.0, 32.0 / 35.0};
  cfg.n = 100000;
  cfg.n_t = 0;
  cfg.trials = 200;
  return cfg;
}

}  // namespace

TEST_CASE("erasure-free channel delivers sum-rate 1") {
  SimulationConfig cfg;
  cfg.params = {0.0, 0.0, 0.5};
  cfg.n = 2000;
  cfg.trials = 5;
  cfg.guard_coeff = 0.0;
  for (auto scheme : {Scheme::InterModal, Scheme::IntraModal, Scheme::NoFeedback}) {
    cfg.scheme = scheme;
    const auto agg = simulate(cfg);
    CHECK(agg.mean_sum_rate == Approx(1.0).epsilon(1e-12));
    CHECK(agg.failure_rate_1 == 0.0);
    CHECK(agg.failure_rate_2 == 0.0);
  }
}

TEST_CASE("simulation is reproducible and independent of thread count") {
  auto cfg = capacity_config();
  cfg.n = 5000;
  cfg.n_t.reset();
  cfg.trials = 24;
  cfg.guard_coeff = 0.5;
  const auto a = simulate(cfg);
  const auto b = simulate(cfg);
  CHECK(a == b);
  cfg.threads = 3;
  CHECK(simulate(cfg) == a);
  cfg.master_seed = 2;
  CHECK_FALSE(simulate(cfg) == a);
}

TEST_CASE("confidence interval brackets the mean") {
  auto cfg = capacity_config();
  cfg.n = 3000;
  cfg.trials = 50;
  cfg.guard_coeff = 0.3;
  const auto agg = simulate(cfg);
  CHECK(agg.ci95_low <= agg.mean_sum_rate);
  CHECK(agg.mean_sum_rate <= agg.ci95_high);
  CHECK(agg.ci95_half_width() ==
        Approx(1.96 * agg.sum_rate_stddev / std::sqrt(50.0)).epsilon(1e-12));
}

TEST_CASE("raw-phase length and backlog match their expected values") {
  const auto agg = simulate(capacity_config());
  CHECK(agg.mean_slots_per_raw_packet == Approx(16.0 / 7.0).epsilon(0.02));
  CHECK(agg.mean_backlog_fraction_1 == Approx(3.0 / 7.0).epsilon(0.02));
  CHECK(agg.mean_backlog_fraction_2 == Approx(3.0 / 7.0).epsilon(0.02));
}

TEST_CASE("capacity point at n = 10^5 with the default guard") {
  const auto cfg = capacity_config();
  const auto agg = simulate(cfg);
  const auto plan = plan_scheme(cfg.params, cfg.n, cfg.scheme, cfg.guard_coeff);
  const double planned = static_cast<double>(plan.m1 + plan.m2) / static_cast<double>(cfg.n);
  CHECK(agg.failure_rate_1 <= 0.05);
  CHECK(agg.failure_rate_2 <= 0.05);
  CHECK(agg.mean_sum_rate <= planned + 1e-12);
  CHECK(agg.mean_sum_rate >= 0.95 * planned);
  CHECK(agg.bit_errors == 0);
}

TEST_CASE("clipped regime at n = 10^5 lands within 3% of the recipe") {
  auto cfg = capacity_config();
  cfg.params.eta = 1.0 / 6.0;
  cfg.trials = 100;
  cfg.guard_coeff = 0.5;
  const auto agg = simulate(cfg);
  CHECK(std::abs(agg.mean_sum_rate - 0.890625) <= 0.03 * 0.890625);
  CHECK(agg.failure_rate() <= 0.05);
}

TEST_CASE("baseline schemes approach their analytic sums") {
  auto cfg = capacity_config();
  cfg.trials = 50;
  cfg.guard_coeff = 0.5;
  for (auto scheme : {Scheme::IntraModal, Scheme::NoFeedback}) {
    cfg.scheme = scheme;
    const auto agg = simulate(cfg);
    const double target = analytic_sum_rate(cfg.params, scheme);
    CHECK(agg.mean_sum_rate == Approx(target).epsilon(0.03));
    CHECK(agg.mean_sum_rate <= target);
  }
}

TEST_CASE("the guard lowers the failure rate") {
  auto cfg = capacity_config();
  cfg.n = 10000;
  cfg.guard_coeff = 0.0;
  const auto bare = simulate(cfg);
  cfg.guard_coeff = 3.0;
  const auto guarded = simulate(cfg);
  CHECK(bare.failure_rate() > guarded.failure_rate());
}

TEST_CASE("mean sum-rate never exceeds the outer bound") {
  const std::vector<ModeParams> params{{0.75, 0.0, 32.0 / 35}, {0.75, 0.0, 1.0 / 6},
                                       {0.75, 0.125, 0.5}, {0.5, 0.5, 0.3}, {0.2, 0.1, 0.9}};
  for (const auto& p : params) {
    for (auto scheme : {Scheme::InterModal, Scheme::IntraModal, Scheme::NoFeedback}) {
      SimulationConfig cfg;
      cfg.params = p;
      cfg.n = 5000;
      cfg.trials = 40;
      cfg.scheme = scheme;
      cfg.guard_coeff = 0.0;
      const auto agg = simulate(cfg);
      CHECK(agg.mean_sum_rate <= max_sum_rate(outer_region(p)) + 3 * agg.ci95_half_width() + 1e-12);
    }
  }
}

TEST_CASE("per-mode empirical erasures stay within 4 sigma") {
  SimulationConfig cfg;
  cfg.params = {0.6, 0.2, 0.5};
  cfg.n = 20000;
  cfg.n_t = 2000;
  cfg.delta_t = 0.4;
  cfg.trials = 100;
  cfg.guard_coeff = 1.0;
  const auto trials = simulate_trials(cfg);
  const double probs[3] = {0.6, 0.4, 0.2};
  int misses = 0;
  for (const auto& t : trials) {
    bool ok = true;
    for (int mode = 0; mode < 3; ++mode) {
      const double d = probs[mode];
      const double len = static_cast<double>(t.mode_slots[static_cast<std::size_t>(mode)]);
      const double tol = 4.0 * std::sqrt(d * (1 - d) / len);
      for (int user = 1; user <= 2; ++user) {
        ok = ok && std::abs(t.empirical_erasure(mode, user) - d) < tol;
      }
    }
    misses += ok ? 0 : 1;
  }
  CHECK(misses <= 1);
}

TEST_CASE("default transient settings") {
  SimulationConfig cfg;
  cfg.params = {0.75, 0.125, 0.5};
  cfg.n = 1000;
  CHECK(cfg.transient_length() == 100);
  CHECK(cfg.transient_erasure() == 0.75);
  cfg.delta_t = 0.3;
  cfg.n_t = 7;
  CHECK(cfg.transient_length() == 7);
  CHECK(cfg.transient_erasure() == 0.3);
}

TEST_CASE("convergence sweep") {
  auto cfg = capacity_config();
  cfg.trials = 20;
  const std::vector<std::int64_t> one{2000};
  const auto rows = convergence_sweep(cfg, one);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].n == 2000);

  const std::vector<std::int64_t> bad{10000, 1000};
  CHECK_THROWS_AS((void)convergence_sweep(cfg, bad), std::invalid_argument);
}

TEST_CASE("trials must be positive") {
  auto cfg = capacity_config();
  cfg.trials = 0;
  CHECK_THROWS_AS((void)simulate(cfg), std::invalid_argument);
}
