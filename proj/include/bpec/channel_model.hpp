#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace bpec {

enum class ModeKind { NonTransientA, Transient, NonTransientB };

/// A stretch of slots with constant per-link erasure probability.
struct Mode {
  ModeKind kind = ModeKind::NonTransientA;
  double erasure_prob = 0.0;
  std::int64_t length = 0;
};

/// Per-slot link states. `s1`/`s2` are 1 when the receiver gets the symbol.
struct SlotState {
  std::uint8_t s1 = 0;
  std::uint8_t s2 = 0;

  [[nodiscard]] std::uint8_t of(int user) const { return user == 1 ? s1 : s2; }
  friend bool operator==(const SlotState&, const SlotState&) = default;
};

/// The non-ergodic channel description: mode A, then the transient mode,
/// then mode B. Immutable once built; slots are indexed 1..n.
class ModeSchedule {
 public:
  ModeSchedule(const Mode& a, const Mode& t, const Mode& b);

  [[nodiscard]] std::int64_t n() const { return n_; }
  [[nodiscard]] std::span<const Mode, 3> modes() const { return modes_; }
  [[nodiscard]] const Mode& mode_a() const { return modes_[0]; }
  [[nodiscard]] const Mode& transient() const { return modes_[1]; }
  [[nodiscard]] const Mode& mode_b() const { return modes_[2]; }

  /// 0, 1 or 2 for A, T, B. Throws std::out_of_range outside 1..n.
  [[nodiscard]] int mode_index_at(std::int64_t t) const;
  [[nodiscard]] double erasure_prob_at(std::int64_t t) const;

 private:
  std::array<Mode, 3> modes_;
  std::int64_t n_ = 0;
};

/// n_A = floor(eta * n), n_T = n_t, n_B = n - n_A - n_T.
ModeSchedule build_schedule(std::int64_t n, double eta, std::int64_t n_t,
                            double delta_a, double delta_t, double delta_b);

/// ceil(n^(2/3)), the transient length used when none is given.
std::int64_t default_transient_length(std::int64_t n);

/// Stateless draw of the link states for slot t. Each (seed, t, user) triple
/// maps to its own uniform variate, so realizations never need storing.
SlotState draw_slot(std::uint64_t seed, std::int64_t t, double erasure_prob);

SlotState sample_slot(const ModeSchedule& schedule, std::int64_t t,
                      std::uint64_t seed);

/// Lazy per-trial channel: a schedule plus the seed of its realization.
class ChannelSampler {
 public:
  ChannelSampler(ModeSchedule schedule, std::uint64_t seed)
      : schedule_(schedule), seed_(seed) {}

  [[nodiscard]] SlotState operator()(std::int64_t t) const {
    return sample_slot(schedule_, t, seed_);
  }
  /// Past slot n the final mode is assumed to persist.
  [[nodiscard]] SlotState extended(std::int64_t t) const;

  [[nodiscard]] const ModeSchedule& schedule() const { return schedule_; }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }

 private:
  ModeSchedule schedule_;
  std::uint64_t seed_;
};

/// splitmix64 finalizer; also used to derive per-trial seeds.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace bpec
