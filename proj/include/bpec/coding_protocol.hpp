#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <variant>
#include <vector>

#include "bpec/channel_model.hpp"
#include "bpec/rate_analysis.hpp"

namespace bpec {

enum class Scheme { InterModal, IntraModal, NoFeedback };
enum class Phase { Raw1, Raw2, Multicast, FreshTail, Done };
enum class PacketStatus { Fresh, AwaitingDelivery, OverheardOnly, DeliveredToIntended };

std::string_view to_string(Scheme s);
std::string_view to_string(Phase p);
/// Accepts "inter", "intra", "nofb" and the long names.
Scheme parse_scheme(std::string_view s);

struct PacketId {
  int user = 1;  // 1 or 2
  std::int64_t index = 0;

  friend bool operator==(const PacketId&, const PacketId&) = default;
};

struct ProtocolViolation : std::logic_error {
  using std::logic_error::logic_error;
};

// ---------------------------------------------------------------------------
// Transmit actions. `bit` is the channel input X[t]; receivers additionally
// learn which packet ids it carries from the header.

struct IdleSymbol {};
struct RawPacket {
  PacketId id;
};
/// XOR of a user-1 packet and a user-2 packet.
struct XorPacket {
  PacketId first;
  PacketId second;
};
/// Symbol `seq` of an erasure-coded block for `user` (no-feedback baseline).
struct CodedPacket {
  int user = 1;
  std::int64_t block = 0;
  std::int64_t seq = 0;
};

struct TransmitAction {
  std::variant<IdleSymbol, RawPacket, XorPacket, CodedPacket> payload;
  std::uint8_t bit = 0;

  friend bool operator==(const TransmitAction& a, const TransmitAction& b);
};

// ---------------------------------------------------------------------------
// Planning

/// A contiguous run of one user's message indices decoded all-or-nothing.
struct MessageBlock {
  std::int64_t first = 0;
  std::int64_t count = 0;
};

/// One run of the raw/raw/multicast scheme over fresh packets, or one
/// erasure-coded stream.
struct Stage {
  enum class Kind { ThreePhase, Stream };
  Kind kind = Kind::ThreePhase;
  std::array<std::int64_t, 2> first{0, 0};
  std::array<std::int64_t, 2> count{0, 0};
  std::int64_t start_slot = 1;  // earliest slot; also waits for the previous stage
  std::int64_t deadline = 0;    // last slot usable before truncation
  bool fresh_tail = false;
  // Stream stages only.
  int stream_user = 1;
  std::int64_t stream_block = 0;
};

struct SchemePlan {
  Scheme scheme = Scheme::InterModal;
  std::int64_t n = 0;
  std::int64_t m1 = 0;
  std::int64_t m2 = 0;
  double alpha = 0.0;
  std::int64_t guard = 0;
  std::vector<Stage> stages;
  std::array<std::vector<MessageBlock>, 2> blocks;

  [[nodiscard]] std::int64_t m(int user) const { return user == 1 ? m1 : m2; }
};

/// ceil(guard_coeff * n^(2/3)).
std::int64_t guard_slots(std::int64_t n, double guard_coeff);

SchemePlan plan_scheme(const ModeParams& p, std::int64_t n, Scheme scheme,
                       double guard_coeff);

/// Single-stage inter-modal plan with explicit message sizes; used for hand
/// traces and drained-completion checks.
SchemePlan manual_plan(std::int64_t n, std::int64_t m1, std::int64_t m2);

// ---------------------------------------------------------------------------
// Transmitter

using Messages = std::array<std::vector<std::uint8_t>, 2>;

/// Raw phase for user 1, raw phase for user 2, then XOR multicast of the
/// virtual queues, all event-driven.
class ThreePhaseEngine {
 public:
  ThreePhaseEngine(std::array<std::int64_t, 2> first,
                   std::array<std::int64_t, 2> count);

  [[nodiscard]] Phase phase() const { return phase_; }
  [[nodiscard]] TransmitAction next(const Messages& messages) const;
  void feedback(const SlotState& slot, const TransmitAction& sent);

  [[nodiscard]] const std::deque<PacketId>& raw_queue(int user) const {
    return raw_[static_cast<std::size_t>(user - 1)];
  }
  /// v_{user|other}: packets for `user` held only by the other receiver.
  [[nodiscard]] const std::deque<PacketId>& virtual_queue(int user) const {
    return virtual_[static_cast<std::size_t>(user - 1)];
  }
  [[nodiscard]] PacketStatus status(const PacketId& id) const;
  [[nodiscard]] std::int64_t count(int user) const {
    return count_[static_cast<std::size_t>(user - 1)];
  }
  [[nodiscard]] std::int64_t delivered(int user) const {
    return status_count(user, PacketStatus::DeliveredToIntended);
  }
  [[nodiscard]] std::int64_t status_count(int user, PacketStatus s) const {
    return status_counts_[static_cast<std::size_t>(user - 1)]
                         [static_cast<std::size_t>(s)];
  }
  [[nodiscard]] std::int64_t raw_slots() const { return raw_slots_; }
  /// Virtual queue sizes when the multicast phase began.
  [[nodiscard]] std::array<std::int64_t, 2> backlog_at_multicast() const {
    return backlog_;
  }

  /// Number of broken bookkeeping invariants. `full` also walks every queue.
  [[nodiscard]] std::int64_t audit(bool full) const;

 private:
  void advance();
  void set_status(const PacketId& id, PacketStatus s);
  bool deliver_head(int user, const PacketId& id);

  std::array<std::int64_t, 2> first_;
  std::array<std::int64_t, 2> count_;
  std::array<std::deque<PacketId>, 2> raw_;
  std::array<std::deque<PacketId>, 2> virtual_;
  std::array<std::vector<PacketStatus>, 2> status_;
  std::array<std::array<std::int64_t, 4>, 2> status_counts_{};
  // Most recent packet resolved out of each virtual queue; reused as the XOR
  // partner once that queue runs dry, since the other receiver holds it.
  std::array<std::optional<PacketId>, 2> last_resolved_;
  Phase phase_ = Phase::Raw1;
  std::int64_t raw_slots_ = 0;
  std::array<std::int64_t, 2> backlog_{0, 0};
};

/// Transmitter-side protocol state: runs the plan's stages in order. Acts only
/// on the messages, the plan and past feedback.
class Transmitter {
 public:
  Transmitter(SchemePlan plan, Messages messages, bool until_drained = false);

  /// Applies stage start times and deadlines for slot t. Call once per slot
  /// before next().
  void begin_slot(std::int64_t t);
  [[nodiscard]] Phase phase() const;
  /// Throws ProtocolViolation once every stage has finished.
  [[nodiscard]] TransmitAction next() const;
  void feedback(const SlotState& slot, const TransmitAction& sent);

  [[nodiscard]] const SchemePlan& plan() const { return plan_; }
  [[nodiscard]] const Messages& messages() const { return messages_; }
  /// Index of the stage owning the current slot, or nullopt when finished.
  [[nodiscard]] std::optional<std::size_t> active_stage() const;
  /// Engine of a three-phase stage (nullptr for streams / not yet started).
  [[nodiscard]] const ThreePhaseEngine* engine(std::size_t stage) const;
  [[nodiscard]] bool stage_completed(std::size_t stage) const;
  [[nodiscard]] bool all_stages_completed() const;

 private:
  [[nodiscard]] bool stage_finished(std::size_t s) const;

  SchemePlan plan_;
  Messages messages_;
  bool until_drained_;
  std::int64_t slot_ = 0;
  std::size_t current_ = 0;
  bool waiting_ = false;
  std::vector<std::unique_ptr<ThreePhaseEngine>> engines_;
  std::vector<std::int64_t> stream_seq_;
  std::vector<bool> abandoned_;
};

// ---------------------------------------------------------------------------
// Receiver

struct CodedObservation {
  std::int64_t own_index = 0;
  std::int64_t other_index = 0;
  std::uint8_t bit = 0;
};

struct DecodeResult {
  bool success = false;
  std::vector<std::int8_t> recovered;  // -1 where unknown
};

class Receiver {
 public:
  Receiver(int user, std::int64_t m_own, std::int64_t m_other,
           std::size_t stream_blocks = 0);

  void observe(const SlotState& slot, const TransmitAction& sent);

  /// Recovers own packets from direct receptions plus XOR observations whose
  /// other constituent was overheard. Succeeds iff indices [0, m) are known.
  [[nodiscard]] DecodeResult decode(std::int64_t m) const;
  /// Per-block success; stream blocks use ideal MDS erasure decoding.
  [[nodiscard]] std::vector<bool> decode_blocks(
      const std::vector<MessageBlock>& blocks, bool stream_blocks) const;

  [[nodiscard]] int user() const { return user_; }
  [[nodiscard]] std::optional<std::uint8_t> own(std::int64_t index) const;
  [[nodiscard]] std::optional<std::uint8_t> overheard(std::int64_t index) const;
  [[nodiscard]] const std::vector<CodedObservation>& coded() const {
    return coded_;
  }
  /// XOR receptions whose other constituent was unknown at reception time.
  [[nodiscard]] std::int64_t useless_xor_receptions() const {
    return useless_xor_;
  }

 private:
  int user_;
  std::vector<std::int8_t> own_;
  std::vector<std::int8_t> overheard_;
  std::vector<CodedObservation> coded_;
  std::vector<std::int64_t> stream_counts_;
  std::int64_t useless_xor_ = 0;
};

// ---------------------------------------------------------------------------
// Trials

struct PhaseMark {
  Phase phase = Phase::Raw1;
  std::int64_t slot = 0;
};

struct TrialStats {
  std::array<bool, 2> decode_ok{false, false};
  std::array<std::int64_t, 2> bits_delivered{0, 0};
  std::array<std::int64_t, 2> message_size{0, 0};
  std::vector<PhaseMark> phase_boundaries;
  // [mode A/T/B][user] counts over the simulated block.
  std::array<std::array<std::int64_t, 2>, 3> erasures{};
  std::array<std::int64_t, 3> mode_slots{};
  std::int64_t raw_slots = 0;
  std::array<std::int64_t, 2> backlog_at_multicast{0, 0};
  std::int64_t completion_slot = -1;  // slot at which every stage drained
  std::int64_t slots_simulated = 0;
  std::int64_t invariant_violations = 0;
  std::int64_t bit_errors = 0;  // decoded bits that disagree with the message
  std::vector<TransmitAction> actions;

  [[nodiscard]] double empirical_erasure(int mode, int user) const;
  [[nodiscard]] double sum_rate(std::int64_t n) const {
    return static_cast<double>(bits_delivered[0] + bits_delivered[1]) /
           static_cast<double>(n);
  }
};

struct TrialOptions {
  bool record_actions = false;
  /// 0: off, 1: O(1) counter checks every slot, 2: also walk every queue.
  int check_invariants = 0;
  /// Ignore deadlines and keep going (final mode persists) until drained.
  bool until_drained = false;
  std::int64_t drain_limit_factor = 1000;
};

using ChannelFn = std::function<SlotState(std::int64_t)>;

/// Message bits of a trial, derived from its seed.
Messages make_messages(const SchemePlan& plan, std::uint64_t seed);

TrialStats run_trial(const ModeSchedule& schedule, const SchemePlan& plan,
                     std::uint64_t seed, const TrialOptions& options = {});

/// Same, with the channel realization supplied by the caller; the schedule
/// only labels slots by mode.
TrialStats run_trial(const ModeSchedule& schedule, const SchemePlan& plan,
                     std::uint64_t seed, const ChannelFn& channel,
                     const TrialOptions& options = {});

TrialStats run_trial(const ModeParams& p, std::int64_t n, std::int64_t n_t,
                     double delta_t, const SchemePlan& plan, std::uint64_t seed,
                     const TrialOptions& options = {});

}  // namespace bpec
