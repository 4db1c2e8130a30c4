#include "bpec/rate_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace bpec {
namespace {

constexpr double kTol = 1e-9;

void check_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument(std::string(name) + " must lie in [0,1], got " +
                                std::to_string(v));
  }
}

// Boundary lines c1*R1 + c2*R2 = bound, including the two axes.
struct Line {
  double a, b, c;
};

}  // namespace

void validate(const ModeParams& p) {
  check_unit(p.delta_a, "delta_a");
  check_unit(p.delta_b, "delta_b");
  check_unit(p.eta, "eta");
}

RateRegion::RateRegion(std::vector<HalfSpace> halfspaces)
    : halfspaces_(std::move(halfspaces)) {
  for (const auto& h : halfspaces_) {
    if (h.c1 < 0.0 || h.c2 < 0.0 || h.bound < 0.0) {
      throw std::invalid_argument(
          "halfspace coefficients and bound must be non-negative");
    }
  }
}

bool RateRegion::contains(const RatePair& r, double tol) const {
  if (r.r1 < -tol || r.r2 < -tol) return false;
  return std::all_of(halfspaces_.begin(), halfspaces_.end(),
                     [&](const HalfSpace& h) { return h.contains(r.r1, r.r2, tol); });
}

RateRegion RateRegion::intersect(const RateRegion& other) const {
  auto hs = halfspaces_;
  hs.insert(hs.end(), other.halfspaces_.begin(), other.halfspaces_.end());
  return RateRegion{std::move(hs)};
}

double avg_erasure(const ModeParams& p) {
  return p.eta * p.delta_a + (1.0 - p.eta) * p.delta_b;
}

Betas betas(const ModeParams& p) {
  Betas b;
  b.beta_a = 1.0 + p.delta_a;
  b.beta_b = 1.0 + p.delta_b;
  b.beta_max = std::max(b.beta_a, b.beta_b);
  b.beta_min = std::min(b.beta_a, b.beta_b);
  return b;
}

double kappa(const ModeParams& p) {
  const auto b = betas(p);
  // Ties go to mode A so the correction is counted once.
  if (p.delta_a >= p.delta_b) {
    return p.eta / b.beta_a * (1.0 - p.delta_a * p.delta_a);
  }
  return (1.0 - p.eta) / b.beta_b * (1.0 - p.delta_b * p.delta_b);
}

RateRegion region_c1(const ModeParams& p) {
  validate(p);
  const double beta = betas(p).beta_max;
  const double bound = beta * (1.0 - avg_erasure(p));
  return RateRegion{{{beta, 1.0, bound}, {1.0, beta, bound}}};
}

RateRegion region_c2(const ModeParams& p) {
  validate(p);
  const double beta = betas(p).beta_min;
  const double single = 1.0 - avg_erasure(p);
  const double slope_bound = beta * single + kappa(p);
  return RateRegion{{{1.0, 0.0, single},
                     {0.0, 1.0, single},
                     {beta, 1.0, slope_bound},
                     {1.0, beta, slope_bound}}};
}

RateRegion region_c3(const ModeParams& p) {
  validate(p);
  const double single = 1.0 - avg_erasure(p);
  const double sum = p.eta * (1.0 - p.delta_a * p.delta_a) +
                     (1.0 - p.eta) * (1.0 - p.delta_b * p.delta_b);
  return RateRegion{{{1.0, 0.0, single}, {0.0, 1.0, single}, {1.0, 1.0, sum}}};
}

RateRegion outer_region(const ModeParams& p) {
  return region_c1(p).intersect(region_c2(p)).intersect(region_c3(p));
}

RateRegion unimodal_region(double delta) {
  check_unit(delta, "delta");
  const double beta = 1.0 + delta;
  const double bound = beta * (1.0 - delta);
  return RateRegion{{{beta, 1.0, bound}, {1.0, beta, bound}}};
}

std::vector<RatePair> vertices(const RateRegion& region) {
  const auto& hs = region.halfspaces();
  const bool caps_r1 = std::any_of(hs.begin(), hs.end(),
                                   [](const HalfSpace& h) { return h.c1 > 0.0; });
  const bool caps_r2 = std::any_of(hs.begin(), hs.end(),
                                   [](const HalfSpace& h) { return h.c2 > 0.0; });
  if (!caps_r1 || !caps_r2) {
    throw UnboundedRegion("rate region is unbounded along an axis");
  }

  std::vector<Line> lines{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}};
  for (const auto& h : hs) lines.push_back({h.c1, h.c2, h.bound});

  std::vector<RatePair> pts;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    for (std::size_t j = i + 1; j < lines.size(); ++j) {
      const auto& l = lines[i];
      const auto& m = lines[j];
      const double det = l.a * m.b - l.b * m.a;
      if (std::abs(det) < 1e-14) continue;
      RatePair r{(l.c * m.b - l.b * m.c) / det, (l.a * m.c - l.c * m.a) / det};
      if (region.contains(r, kTol)) {
        r.r1 = std::max(r.r1, 0.0);
        r.r2 = std::max(r.r2, 0.0);
        pts.push_back(r);
      }
    }
  }

  std::sort(pts.begin(), pts.end(), [](const RatePair& x, const RatePair& y) {
    return x.r1 != y.r1 ? x.r1 < y.r1 : x.r2 < y.r2;
  });
  std::vector<RatePair> out;
  for (const auto& r : pts) {
    const bool dup = std::any_of(out.begin(), out.end(), [&](const RatePair& q) {
      return std::abs(q.r1 - r.r1) <= kTol && std::abs(q.r2 - r.r2) <= kTol;
    });
    if (!dup) out.push_back(r);
  }
  return out;
}

double max_sum_rate(const RateRegion& region) {
  double best = 0.0;
  for (const auto& v : vertices(region)) best = std::max(best, v.r1 + v.r2);
  return best;
}

double thm2_threshold(double delta_a, double delta_b) {
  check_unit(delta_a, "delta_a");
  check_unit(delta_b, "delta_b");
  if (delta_b >= 1.0) {
    throw std::domain_error("threshold undefined for delta_b = 1");
  }
  return 1.0 / (1.0 + delta_a * (1.0 - delta_a) / (2.0 * (1.0 - delta_b)));
}

bool thm2_holds(const ModeParams& p) {
  validate(p);
  if (p.delta_a < p.delta_b) return false;
  if (p.delta_b >= 1.0) return true;  // both modes fully erased: region is {0}
  return p.eta >= thm2_threshold(p.delta_a, p.delta_b);
}

double alpha_star(const ModeParams& p) {
  validate(p);
  if (p.delta_a >= 1.0) {
    throw std::domain_error("alpha* undefined for delta_a = 1");
  }
  return 2.0 * (1.0 - avg_erasure(p)) /
         ((2.0 + p.delta_a) * (1.0 - p.delta_a));
}

double effective_multicast_rate(const ModeParams& p, double alpha) {
  validate(p);
  if (!(alpha >= 0.0 && alpha < 1.0) || alpha > p.eta) {
    throw std::domain_error("effective rate needs 0 <= alpha <= eta, alpha < 1");
  }
  return ((1.0 - p.eta) * (1.0 - p.delta_b) +
          (p.eta - alpha) * (1.0 - p.delta_a)) /
         (1.0 - alpha);
}

double completion_lhs(const ModeParams& p, double alpha) {
  const double r_eff = effective_multicast_rate(p, alpha);
  return alpha + alpha * p.delta_a * (1.0 - p.delta_a) / (2.0 * r_eff);
}

double unimodal_feedback_sum(double delta) {
  check_unit(delta, "delta");
  return 2.0 * (1.0 + delta) * (1.0 - delta) / (2.0 + delta);
}

double clipped_leftover(const ModeParams& p) {
  validate(p);
  if (p.delta_b >= 1.0) throw UnsupportedParameters("delta_b = 1");
  return (1.0 - p.eta) -
         p.eta * p.delta_a * (1.0 - p.delta_a) / (2.0 * (1.0 - p.delta_b));
}

double achievable_intermodal_sum(const ModeParams& p) {
  validate(p);
  if (p.delta_a < p.delta_b) {
    throw UnsupportedParameters(
        "inter-modal scheme requires delta_a >= delta_b");
  }
  if (p.delta_b >= 1.0) {
    throw UnsupportedParameters("inter-modal scheme requires delta_b < 1");
  }
  if (thm2_holds(p)) {
    return 2.0 * (1.0 + p.delta_a) * (1.0 - avg_erasure(p)) /
           (2.0 + p.delta_a);
  }
  const double raw = p.eta * (1.0 - p.delta_a * p.delta_a);
  return raw + std::max(0.0, clipped_leftover(p)) *
                   unimodal_feedback_sum(p.delta_b);
}

double achievable_intramodal_sum(const ModeParams& p) {
  validate(p);
  return p.eta * unimodal_feedback_sum(p.delta_a) +
         (1.0 - p.eta) * unimodal_feedback_sum(p.delta_b);
}

double achievable_nofeedback_sum(const ModeParams& p) {
  validate(p);
  return 1.0 - avg_erasure(p);
}

}  // namespace bpec
