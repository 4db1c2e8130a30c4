#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bpec/rate_analysis.hpp"

using namespace bpec;
using doctest::Approx;

namespace {

constexpr double kExact = 1e-12;
constexpr double kTol = 1e-9;

// Largest r2 with (r1, r2) in the region, or -1 when r1 itself is infeasible.
double r2_max(const RateRegion& region, double r1) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& h : region.halfspaces()) {
    if (h.c2 > 0) {
      best = std::min(best, (h.bound - h.c1 * r1) / h.c2);
    } else if (h.c1 * r1 > h.bound + 1e-15) {
      return -1.0;
    }
  }
  return best;
}

// Max of r1 + r2 by ternary search on the concave profile r1 -> r1 + r2_max.
double sum_oracle(const RateRegion& region) {
  double hi = std::numeric_limits<double>::infinity();
  for (const auto& h : region.halfspaces()) {
    if (h.c1 > 0) hi = std::min(hi, h.bound / h.c1);
  }
  auto g = [&](double r1) {
    const double r2 = r2_max(region, r1);
    return r2 < 0 ? -1.0 : r1 + r2;
  };
  double lo = 0.0;
  for (int i = 0; i < 300; ++i) {
    const double a = lo + (hi - lo) / 3.0;
    const double b = hi - (hi - lo) / 3.0;
    if (g(a) < g(b)) {
      lo = a;
    } else {
      hi = b;
    }
  }
  return g(0.5 * (lo + hi));
}

// Completion condition written out from scratch: raw phases take alpha, the
// backlog alpha*dA(1-dA)/2 per user drains at the average post-raw rate.
double completion_residual(double da, double db, double eta, double alpha) {
  const double reff = ((1 - eta) * (1 - db) + (eta - alpha) * (1 - da)) / (1 - alpha);
  return alpha + alpha * da * (1 - da) / (2 * reff) - 1.0;
}

double alpha_by_bisection(double da, double db, double eta) {
  double lo = 0.0;
  double hi = eta;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (completion_residual(da, db, eta, mid) < 0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Fluid accounting of the clipped recipe: raw phases fill mode A, the backlog
// drains in mode B, leftover mode-B time runs the uni-modal scheme.
double clipped_fluid_sum(double da, double db, double eta) {
  const double per_user = (1 - da * da) * eta / 2.0;
  const double backlog = per_user * da / (1 + da);
  const double drain_time = backlog / (1 - db);
  const double leftover = (1 - eta) - drain_time;
  const double uni = max_sum_rate(unimodal_region(db));
  return 2.0 * per_user + leftover * uni;
}

std::vector<double> grid(int points) {
  std::vector<double> g;
  for (int i = 0; i < points; ++i) g.push_back(static_cast<double>(i) / (points - 1));
  return g;
}

bool same_vertices(const std::vector<RatePair>& a, const std::vector<RatePair>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i].r1 - b[i].r1) > kTol || std::abs(a[i].r2 - b[i].r2) > kTol) return false;
  }
  return true;
}

bool has_vertex(const std::vector<RatePair>& vs, double r1, double r2) {
  return std::any_of(vs.begin(), vs.end(), [&](const RatePair& v) {
    return std::abs(v.r1 - r1) < kTol && std::abs(v.r2 - r2) < kTol;
  });
}

}  // namespace

TEST_CASE("average erasure") {
  CHECK(avg_erasure({0.75, 0, 32.0 / 35}) == Approx(24.0 / 35).epsilon(kExact));
  CHECK(avg_erasure({0.75, 0, 1.0 / 6}) == Approx(1.0 / 8).epsilon(kExact));
  CHECK(avg_erasure({0.3, 0.3, 0.77}) == Approx(0.3).epsilon(kExact));
}

TEST_CASE("betas") {
  const auto b = betas({0.75, 0, 0.5});
  CHECK(b.beta_a == 1.75);
  CHECK(b.beta_b == 1.0);
  CHECK(b.beta_max == 1.75);
  CHECK(b.beta_min == 1.0);
  const auto z = betas({0, 0, 0.5});
  CHECK(z.beta_max == 1.0);
  CHECK(z.beta_min == 1.0);
  const auto f = betas({0.75, 0.125, 0.5});
  CHECK(f.beta_b == 1.125);
  CHECK(f.beta_min == 1.125);
  CHECK(f.beta_max == 1.75);
}

TEST_CASE("C1 halfspaces and symmetric vertex") {
  const ModeParams p{0.75, 0, 32.0 / 35};
  const auto h = region_c1(p).halfspaces();
  REQUIRE(h.size() == 2);
  CHECK(h[0].c1 == 1.75);
  CHECK(h[0].c2 == 1.0);
  CHECK(h[0].bound == Approx(1.75 * 11 / 35).epsilon(kExact));
  CHECK(h[1].c1 == 1.0);
  CHECK(h[1].c2 == 1.75);
  CHECK(has_vertex(vertices(region_c1(p)), 0.2, 0.2));

  const auto v0 = vertices(region_c1({0, 0, 0.3}));
  CHECK(same_vertices(v0, {{0, 0}, {0, 1}, {1, 0}}));
}

TEST_CASE("kappa branches and tie-break") {
  CHECK(kappa({0.75, 0, 32.0 / 35}) == Approx(8.0 / 35).epsilon(kExact));
  CHECK(kappa({0, 0.5, 0.4}) == Approx(0.3).epsilon(kExact));
  for (double d : {0.0, 0.2, 0.5, 0.9}) {
    CHECK(kappa({d, d, 1.0}) == Approx(1 - d).epsilon(kExact));
    CHECK(kappa({d, d, 0.0}) == Approx(0.0).epsilon(kExact));
  }
}

TEST_CASE("C2 halfspaces") {
  const auto h = region_c2({0.75, 0.125, 0.4}).halfspaces();
  REQUIRE(h.size() == 4);
  CHECK(h[2].c1 == 1.125);
  CHECK(h[3].c2 == 1.125);

  const auto z = region_c2({0, 0, 0.6});
  CHECK(max_sum_rate(z) == Approx(1.0 + 0.6).epsilon(kExact));  // R_i <= 1, R1+R2 <= 1+kappa
  CHECK(has_vertex(vertices(z), 1.0, 0.6));

  // The uni-modal symmetric point satisfies both C2 slope constraints.
  for (double d : grid(20)) {
    for (double eta : grid(20)) {
      const ModeParams p{d, d, eta};
      const double r = (1 - d * d) / (2 + d);
      CHECK(region_c2(p).contains({r, r}));
    }
  }
}

TEST_CASE("C3 halfspaces") {
  const ModeParams p{0.75, 0, 1.0 / 6};
  CHECK(max_sum_rate(region_c3(p)) == Approx(87.0 / 96).epsilon(kExact));
  CHECK(has_vertex(vertices(region_c3(p)), 7.0 / 8, 87.0 / 96 - 7.0 / 8));
  CHECK(max_sum_rate(region_c3({0, 0, 0.4})) == Approx(1.0).epsilon(kExact));
  const auto dead = vertices(region_c3({1, 1, 0.4}));
  REQUIRE(dead.size() == 1);
  CHECK(dead[0].r1 == 0.0);
  CHECK(dead[0].r2 == 0.0);
}

TEST_CASE("outer region examples") {
  const ModeParams cap{0.75, 0, 32.0 / 35};
  const auto v = vertices(outer_region(cap));
  CHECK(has_vertex(v, 0.2, 0.2));
  CHECK(has_vertex(v, 11.0 / 35, 0.0));
  CHECK(max_sum_rate(outer_region(cap)) == Approx(0.4).epsilon(kTol));
  CHECK(max_sum_rate(outer_region({0.75, 0, 1})) == Approx(7.0 / 22).epsilon(kTol));
  CHECK(max_sum_rate(outer_region({0.75, 0, 0})) == Approx(1.0).epsilon(kTol));
  CHECK(max_sum_rate(outer_region({0.75, 0, 1.0 / 6})) == Approx(87.0 / 96).epsilon(kTol));
}

TEST_CASE("vertex enumeration basics") {
  const RateRegion simplex({{1, 1, 1}});
  CHECK(same_vertices(vertices(simplex), {{0, 0}, {0, 1}, {1, 0}}));
  CHECK_THROWS_AS((void)vertices(RateRegion({{1, 0, 1}})), UnboundedRegion);
  CHECK_THROWS_AS((void)vertices(RateRegion()), UnboundedRegion);
  CHECK_THROWS_AS(RateRegion({{-1, 1, 1}}), std::invalid_argument);

  const auto v = vertices(outer_region({0.75, 0.125, 0.5}));
  for (std::size_t i = 1; i < v.size(); ++i) {
    CHECK((v[i - 1].r1 < v[i].r1 || (v[i - 1].r1 == v[i].r1 && v[i - 1].r2 < v[i].r2)));
  }
}

TEST_CASE("max_sum_rate agrees with a ternary-search oracle") {
  for (double da : grid(12)) {
    for (double db : grid(12)) {
      for (double eta : grid(12)) {
        const ModeParams p{da, db, eta};
        for (const auto& r : {region_c1(p), region_c2(p), region_c3(p), outer_region(p)}) {
          CHECK(max_sum_rate(r) == Approx(sum_oracle(r)).epsilon(kTol));
        }
      }
    }
  }
}

TEST_CASE("every region is symmetric under R1 <-> R2") {
  for (double da : grid(20)) {
    for (double db : grid(20)) {
      for (double eta : {0.0, 0.3, 0.5, 0.9, 1.0}) {
        const ModeParams p{da, db, eta};
        for (const auto& r : {region_c1(p), region_c2(p), region_c3(p), outer_region(p)}) {
          for (const auto& v : vertices(r)) CHECK(r.contains({v.r2, v.r1}, kTol));
        }
      }
    }
  }
}

TEST_CASE("eta in {0, 1} degenerates to the uni-modal region") {
  for (double da : grid(20)) {
    for (double db : grid(20)) {
      CHECK(same_vertices(vertices(outer_region({da, db, 1.0})), vertices(unimodal_region(da))));
      CHECK(same_vertices(vertices(outer_region({da, db, 0.0})), vertices(unimodal_region(db))));
    }
  }
}

TEST_CASE("equal erasure probabilities degenerate to the uni-modal region") {
  for (double d : grid(20)) {
    for (double eta : grid(20)) {
      CHECK(same_vertices(vertices(outer_region({d, d, eta})), vertices(unimodal_region(d))));
    }
  }
}

TEST_CASE("uni-modal feedback sum matches the uni-modal region") {
  for (double d : grid(50)) {
    CHECK(unimodal_feedback_sum(d) == Approx(max_sum_rate(unimodal_region(d))).epsilon(kTol));
  }
}

TEST_CASE("Theorem 2 threshold and condition") {
  CHECK(thm2_threshold(0.75, 0) == Approx(32.0 / 35).epsilon(kExact));
  CHECK(thm2_threshold(0, 0.3) == 1.0);
  CHECK(thm2_threshold(0.5, 0.5) == Approx(0.8).epsilon(kExact));
  CHECK_THROWS_AS((void)thm2_threshold(0.5, 1.0), std::domain_error);
  CHECK(thm2_holds({0.75, 0, 32.0 / 35}));
  CHECK_FALSE(thm2_holds({0.75, 0, 1.0 / 6}));
  CHECK_FALSE(thm2_holds({0.2, 0.3, 0.99}));
}

TEST_CASE("alpha_star") {
  CHECK(alpha_star({0.75, 0, 32.0 / 35}) == Approx(32.0 / 35).epsilon(kExact));
  CHECK(alpha_star({0, 0, 0.4}) == Approx(1.0).epsilon(kExact));
  CHECK(alpha_star({0.5, 0.5, 0.5}) == Approx(0.8).epsilon(kExact));
  CHECK_THROWS_AS((void)alpha_star({1.0, 0, 0.5}), std::domain_error);
}

TEST_CASE("alpha_star solves the completion condition") {
  int checked = 0;
  for (double da : {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99}) {
    for (double db : {0.0, 0.05, 0.2, 0.5}) {
      for (double eta : {0.6, 0.8, 0.85, 0.9, 0.95, 0.99, 1.0}) {
        const ModeParams p{da, db, eta};
        if (da < db) continue;
        const double a = alpha_star(p);
        if (a > eta || a >= 1.0) continue;
        ++checked;
        CHECK(std::abs(completion_lhs(p, a) - 1.0) < kExact);
        CHECK(std::abs(completion_residual(da, db, eta, a)) < kExact);
        CHECK(a == Approx(alpha_by_bisection(da, db, eta)).epsilon(1e-10));
      }
    }
  }
  CHECK(checked >= 50);
}

TEST_CASE("alpha_star <= eta exactly when Theorem 2 holds") {
  for (double da : grid(20)) {
    if (da >= 1.0) continue;
    for (double db : grid(20)) {
      if (db > da || db >= 1.0) continue;
      for (double eta : grid(40)) {
        const ModeParams p{da, db, eta};
        const double a = alpha_star(p);
        if (std::abs(a - eta) < 1e-12) continue;
        CHECK((a <= eta) == thm2_holds(p));
      }
    }
  }
}

TEST_CASE("effective multicast rate is a convex combination") {
  for (double da : grid(11)) {
    for (double db : grid(11)) {
      for (double eta : grid(11)) {
        const ModeParams p{da, db, eta};
        for (double frac : {0.0, 0.3, 0.7, 1.0}) {
          const double alpha = frac * eta;
          if (alpha >= 1.0) continue;
          const double r = effective_multicast_rate(p, alpha);
          CHECK(r >= std::min(1 - da, 1 - db) - kExact);
          CHECK(r <= std::max(1 - da, 1 - db) + kExact);
        }
      }
    }
  }
  CHECK_THROWS_AS((void)effective_multicast_rate({0.5, 0.2, 0.5}, 0.6), std::domain_error);
}

TEST_CASE("inter-modal sum examples and errors") {
  CHECK(achievable_intermodal_sum({0.75, 0, 32.0 / 35}) == Approx(0.4).epsilon(kTol));
  CHECK(achievable_intermodal_sum({0.75, 0, 1.0 / 6}) == Approx(0.890625).epsilon(kTol));
  for (double d : {0.1, 0.4, 0.8}) {
    const double eta = 2.0 / (2.0 + d) + 0.01;
    CHECK(achievable_intermodal_sum({d, d, eta}) ==
          Approx(unimodal_feedback_sum(d)).epsilon(kTol));
  }
  CHECK_THROWS_AS((void)achievable_intermodal_sum({0.2, 0.3, 0.5}), UnsupportedParameters);
  CHECK_THROWS_AS((void)achievable_intermodal_sum({1.0, 1.0, 0.5}), UnsupportedParameters);
}

TEST_CASE("inter-modal sum agrees with independent derivations") {
  for (double da : grid(15)) {
    for (double db : grid(15)) {
      if (db > da || db >= 1.0) continue;
      for (double eta : grid(15)) {
        const ModeParams p{da, db, eta};
        const double got = achievable_intermodal_sum(p);
        if (thm2_holds(p)) {
          if (da < 1.0 && alpha_star(p) < 1.0) {
            const double alpha = alpha_by_bisection(da, db, eta);
            CHECK(got == Approx((1 - da * da) * alpha).epsilon(1e-9));
          }
        } else {
          CHECK(got == Approx(clipped_fluid_sum(da, db, eta)).epsilon(kTol));
          CHECK(clipped_leftover(p) >= -kExact);
        }
      }
    }
  }
}

TEST_CASE("intra-modal and no-feedback sums") {
  CHECK(achievable_intramodal_sum({0.75, 0, 32.0 / 35}) == Approx(29.0 / 77).epsilon(kTol));
  CHECK(achievable_intramodal_sum({0.75, 0, 1.0 / 6}) ==
        Approx(7.0 / 22 / 6 + 5.0 / 6).epsilon(kTol));
  CHECK(achievable_intramodal_sum({0.3, 0.3, 0.4}) ==
        Approx(unimodal_feedback_sum(0.3)).epsilon(kTol));
  CHECK(achievable_nofeedback_sum({0.75, 0, 32.0 / 35}) == Approx(11.0 / 35).epsilon(kTol));
  CHECK(achievable_nofeedback_sum({0, 0, 0.5}) == 1.0);
  CHECK(achievable_nofeedback_sum({0.75, 0.125, 0.5}) == Approx(0.5625).epsilon(kTol));
}

TEST_CASE("ordering nofb <= intra <= inter <= outer on a 20x20x20 grid") {
  int checked = 0;
  int violations = 0;
  for (double da : grid(20)) {
    for (double db : grid(20)) {
      if (db > da || db >= 1.0) continue;
      for (double eta : grid(20)) {
        const ModeParams p{da, db, eta};
        const double nofb = achievable_nofeedback_sum(p);
        const double intra = achievable_intramodal_sum(p);
        const double inter = achievable_intermodal_sum(p);
        const double outer = max_sum_rate(outer_region(p));
        ++checked;
        if (!(nofb <= intra + kTol && intra <= inter + kTol && inter <= outer + kTol)) {
          ++violations;
        }
        if (thm2_holds(p)) {
          CHECK(inter == Approx(outer).epsilon(kTol));
        }
      }
    }
  }
  CHECK(checked == 209 * 20);  // pairs with delta_a >= delta_b, delta_b < 1
  CHECK(violations == 0);
}

TEST_CASE("validate rejects out-of-range parameters") {
  CHECK_THROWS_AS(validate({-0.1, 0, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(validate({0.1, 1.1, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(validate({0.1, 0.1, 1.5}), std::invalid_argument);
  CHECK_NOTHROW(validate({1, 0, 0}));
}
