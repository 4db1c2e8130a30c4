#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace bpec {

/// Asymptotic channel description: erasure probabilities of the two
/// non-transient modes and the fraction eta of the block spent in mode A.
struct ModeParams {
  double delta_a = 0.0;
  double delta_b = 0.0;
  double eta = 0.0;
};

/// Throws std::invalid_argument unless every field lies in [0,1].
void validate(const ModeParams& p);

/// c1 * R1 + c2 * R2 <= bound, with c1, c2, bound >= 0.
struct HalfSpace {
  double c1 = 0.0;
  double c2 = 0.0;
  double bound = 0.0;

  [[nodiscard]] bool contains(double r1, double r2, double tol = 1e-9) const {
    return c1 * r1 + c2 * r2 <= bound + tol;
  }
};

struct RatePair {
  double r1 = 0.0;
  double r2 = 0.0;
};

/// Intersection of halfspaces within the nonnegative quadrant.
class RateRegion {
 public:
  RateRegion() = default;
  explicit RateRegion(std::vector<HalfSpace> halfspaces);

  [[nodiscard]] const std::vector<HalfSpace>& halfspaces() const {
    return halfspaces_;
  }
  [[nodiscard]] bool contains(const RatePair& r, double tol = 1e-9) const;
  [[nodiscard]] RateRegion intersect(const RateRegion& other) const;

 private:
  std::vector<HalfSpace> halfspaces_;
};

struct UnboundedRegion : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when a formula is evaluated outside the parameters it is proven for.
struct UnsupportedParameters : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Betas {
  double beta_a = 1.0;
  double beta_b = 1.0;
  double beta_max = 1.0;
  double beta_min = 1.0;
};

double avg_erasure(const ModeParams& p);
Betas betas(const ModeParams& p);
double kappa(const ModeParams& p);

RateRegion region_c1(const ModeParams& p);
RateRegion region_c2(const ModeParams& p);
RateRegion region_c3(const ModeParams& p);
RateRegion outer_region(const ModeParams& p);

/// The feedback capacity region of a BPEC with a single erasure probability.
RateRegion unimodal_region(double delta);

/// Corner points of a bounded region, sorted by r1 then r2, merged at 1e-9.
std::vector<RatePair> vertices(const RateRegion& region);
double max_sum_rate(const RateRegion& region);

/// Smallest eta at which the outer bound becomes achievable (delta_b < 1).
double thm2_threshold(double delta_a, double delta_b);
bool thm2_holds(const ModeParams& p);

/// Fraction of the block spent on uncoded phases when the multicast backlog
/// exactly fills the remainder. Requires delta_a < 1.
double alpha_star(const ModeParams& p);

/// Average multicast delivery rate over the slots after the raw phases,
/// given a raw-phase fraction alpha <= eta < 1.
double effective_multicast_rate(const ModeParams& p, double alpha);

/// Left-hand side of the completion condition
/// alpha + alpha * delta_a (1 - delta_a) / (2 R_eff) = 1.
double completion_lhs(const ModeParams& p, double alpha);

/// Sum capacity of a single-mode BPEC with delayed feedback.
double unimodal_feedback_sum(double delta);

/// Mode-B time fraction left once the multicast backlog drains when the raw
/// phases occupy all of mode A.
double clipped_leftover(const ModeParams& p);

double achievable_intermodal_sum(const ModeParams& p);
double achievable_intramodal_sum(const ModeParams& p);
double achievable_nofeedback_sum(const ModeParams& p);

}  // namespace bpec
