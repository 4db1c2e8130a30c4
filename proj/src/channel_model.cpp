#include "bpec/channel_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bpec {
namespace {

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument(std::string(name) + " must lie in [0,1], got " +
                                std::to_string(p));
  }
}

// Keeps products like (32/35) * 35 from landing just under an integer.
constexpr double kFloorSlack = 1e-9;

}  // namespace

ModeSchedule::ModeSchedule(const Mode& a, const Mode& t, const Mode& b)
    : modes_{a, t, b} {
  if (a.kind != ModeKind::NonTransientA || t.kind != ModeKind::Transient ||
      b.kind != ModeKind::NonTransientB) {
    throw std::invalid_argument("modes must be ordered A, T, B");
  }
  for (const auto& m : modes_) {
    check_probability(m.erasure_prob, "erasure probability");
    if (m.length < 0) throw std::invalid_argument("mode length must be >= 0");
    n_ += m.length;
  }
  if (n_ <= 0) throw std::invalid_argument("blocklength must be positive");
}

int ModeSchedule::mode_index_at(std::int64_t t) const {
  if (t < 1 || t > n_) {
    throw std::out_of_range("slot index " + std::to_string(t) +
                            " outside 1.." + std::to_string(n_));
  }
  if (t <= modes_[0].length) return 0;
  if (t <= modes_[0].length + modes_[1].length) return 1;
  return 2;
}

double ModeSchedule::erasure_prob_at(std::int64_t t) const {
  return modes_[static_cast<std::size_t>(mode_index_at(t))].erasure_prob;
}

ModeSchedule build_schedule(std::int64_t n, double eta, std::int64_t n_t,
                            double delta_a, double delta_t, double delta_b) {
  if (n <= 0) throw std::invalid_argument("n must be positive");
  check_probability(eta, "eta");
  check_probability(delta_a, "delta_a");
  check_probability(delta_t, "delta_t");
  check_probability(delta_b, "delta_b");
  if (n_t < 0) throw std::invalid_argument("n_t must be >= 0");

  const auto n_a = static_cast<std::int64_t>(
      std::floor(eta * static_cast<double>(n) + kFloorSlack));
  if (n_a + n_t > n) {
    throw std::invalid_argument("n_A + n_T = " + std::to_string(n_a + n_t) +
                                " exceeds n = " + std::to_string(n));
  }
  return ModeSchedule{Mode{ModeKind::NonTransientA, delta_a, n_a},
                      Mode{ModeKind::Transient, delta_t, n_t},
                      Mode{ModeKind::NonTransientB, delta_b, n - n_a - n_t}};
}

std::int64_t default_transient_length(std::int64_t n) {
  if (n <= 0) return 0;
  const double nd = static_cast<double>(n);
  auto c = static_cast<std::int64_t>(std::ceil(std::cbrt(nd * nd)));
  // cbrt is not exact; settle the integer boundary explicitly.
  while (c > 0 && (c - 1) * (c - 1) * (c - 1) >= n * n) --c;
  while (c * c * c < n * n) ++c;
  return c;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) ^ (index * 0xd1342543de82ef95ULL + 1));
}

SlotState draw_slot(std::uint64_t seed, std::int64_t t, double erasure_prob) {
  // Distinct keys for every (t, user); mix64 is a bijection.
  const auto key = mix64(seed) ^ (static_cast<std::uint64_t>(t) << 1);
  auto uniform = [](std::uint64_t h) {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
  };
  const double u1 = uniform(mix64(key));
  const double u2 = uniform(mix64(key ^ 1));
  return SlotState{static_cast<std::uint8_t>(u1 >= erasure_prob),
                   static_cast<std::uint8_t>(u2 >= erasure_prob)};
}

SlotState sample_slot(const ModeSchedule& schedule, std::int64_t t,
                      std::uint64_t seed) {
  return draw_slot(seed, t, schedule.erasure_prob_at(t));
}

SlotState ChannelSampler::extended(std::int64_t t) const {
  if (t <= schedule_.n()) return (*this)(t);
  return draw_slot(seed_, t, schedule_.mode_b().erasure_prob);
}

}  // namespace bpec
