#include "bpec/coding_protocol.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace bpec {
namespace {

constexpr std::size_t idx(int user) { return static_cast<std::size_t>(user - 1); }
constexpr int other(int user) { return 3 - user; }

// floor() that tolerates representation error in products such as
// (32/35) * 35000 landing a hair below an integer.
std::int64_t floor_tol(double x) {
  return static_cast<std::int64_t>(std::floor(x + 1e-9 * std::max(1.0, std::abs(x))));
}

std::int64_t mode_a_length(const ModeParams& p, std::int64_t n) {
  return std::min<std::int64_t>(n, floor_tol(p.eta * static_cast<double>(n)));
}

// Packets per user for one uni-modal three-phase run over `length` slots.
std::int64_t unimodal_packets(double delta, std::int64_t length, double guard_coeff) {
  if (length <= 0 || delta >= 1.0) return 0;
  const double raw_fraction = 2.0 / (2.0 + delta);
  const auto guard = guard_slots(length, guard_coeff);
  const double budget = raw_fraction * static_cast<double>(length) -
                        static_cast<double>(guard);
  return std::max<std::int64_t>(0, floor_tol((1.0 - delta * delta) * budget / 2.0));
}

void add_stream(SchemePlan& plan, int user, std::int64_t block, std::int64_t first_index,
                std::int64_t k, std::int64_t start, std::int64_t deadline) {
  Stage s;
  s.kind = Stage::Kind::Stream;
  s.stream_user = user;
  s.stream_block = block;
  s.first[idx(user)] = first_index;
  s.count[idx(user)] = k;
  s.start_slot = start;
  s.deadline = deadline;
  plan.stages.push_back(s);
}

}  // namespace

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::InterModal: return "inter";
    case Scheme::IntraModal: return "intra";
    case Scheme::NoFeedback: return "nofb";
  }
  return "?";
}

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Raw1: return "raw1";
    case Phase::Raw2: return "raw2";
    case Phase::Multicast: return "multicast";
    case Phase::FreshTail: return "fresh_tail";
    case Phase::Done: return "done";
  }
  return "?";
}

Scheme parse_scheme(std::string_view s) {
  if (s == "inter" || s == "inter_modal" || s == "intermodal") return Scheme::InterModal;
  if (s == "intra" || s == "intra_modal" || s == "intramodal") return Scheme::IntraModal;
  if (s == "nofb" || s == "no_feedback" || s == "nofeedback") return Scheme::NoFeedback;
  throw std::invalid_argument("unknown scheme '" + std::string(s) +
                              "' (expected inter, intra or nofb)");
}

bool operator==(const TransmitAction& a, const TransmitAction& b) {
  if (a.bit != b.bit || a.payload.index() != b.payload.index()) return false;
  return std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b.payload);
        if constexpr (std::is_same_v<T, IdleSymbol>) {
          return true;
        } else if constexpr (std::is_same_v<T, RawPacket>) {
          return x.id == y.id;
        } else if constexpr (std::is_same_v<T, XorPacket>) {
          return x.first == y.first && x.second == y.second;
        } else {
          return x.user == y.user && x.block == y.block && x.seq == y.seq;
        }
      },
      a.payload);
}

// ---------------------------------------------------------------------------

std::int64_t guard_slots(std::int64_t n, double guard_coeff) {
  if (guard_coeff < 0.0) throw std::invalid_argument("guard_coeff must be >= 0");
  if (guard_coeff == 0.0 || n <= 0) return 0;
  const double nd = static_cast<double>(n);
  return static_cast<std::int64_t>(std::ceil(guard_coeff * std::cbrt(nd * nd) - 1e-9));
}

SchemePlan plan_scheme(const ModeParams& p, std::int64_t n, Scheme scheme,
                       double guard_coeff) {
  validate(p);
  if (n < 1) throw std::invalid_argument("blocklength must be >= 1");

  SchemePlan plan;
  plan.scheme = scheme;
  plan.n = n;
  plan.guard = guard_slots(n, guard_coeff);
  const std::int64_t n_a = mode_a_length(p, n);
  // The transmitter only knows n_A; transient slots count as mode B.
  const std::int64_t n_b = n - n_a;

  switch (scheme) {
    case Scheme::InterModal: {
      if (p.delta_a < p.delta_b) {
        throw UnsupportedParameters("inter-modal plan requires delta_a >= delta_b");
      }
      if (p.delta_b >= 1.0) {
        throw UnsupportedParameters("inter-modal plan requires delta_b < 1");
      }
      const bool capacity_regime = thm2_holds(p);
      plan.alpha = (capacity_regime && p.delta_a < 1.0) ? std::min(alpha_star(p), p.eta)
                                                        : p.eta;
      const double budget = plan.alpha * static_cast<double>(n) -
                            static_cast<double>(plan.guard);
      const std::int64_t m_main = std::max<std::int64_t>(
          0, floor_tol((1.0 - p.delta_a * p.delta_a) * budget / 2.0));

      Stage main;
      main.count = {m_main, m_main};
      main.deadline = n;
      plan.stages.push_back(main);

      std::int64_t m_tail = 0;
      if (!capacity_regime) {
        // Mode-B time left after the unguarded backlog drains; the guard
        // taken from the raw phases above covers the fluctuations of both.
        const double leftover =
            std::max(0.0, clipped_leftover(p)) * static_cast<double>(n);
        m_tail = std::max<std::int64_t>(
            0, floor_tol(unimodal_feedback_sum(p.delta_b) * leftover / 2.0));
        Stage tail;
        tail.first = {m_main, m_main};
        tail.count = {m_tail, m_tail};
        tail.deadline = n;
        tail.fresh_tail = true;
        plan.stages.push_back(tail);
      }
      plan.m1 = plan.m2 = m_main + m_tail;
      plan.blocks = {std::vector<MessageBlock>{{0, plan.m1}},
                     std::vector<MessageBlock>{{0, plan.m2}}};
      break;
    }
    case Scheme::IntraModal: {
      const std::int64_t m_a = unimodal_packets(p.delta_a, n_a, guard_coeff);
      const std::int64_t m_b = unimodal_packets(p.delta_b, n_b, guard_coeff);
      Stage a;
      a.count = {m_a, m_a};
      a.deadline = n_a;
      Stage b;
      b.first = {m_a, m_a};
      b.count = {m_b, m_b};
      b.start_slot = n_a + 1;
      b.deadline = n;
      plan.stages = {a, b};
      plan.m1 = plan.m2 = m_a + m_b;
      plan.alpha = (static_cast<double>(n_a) * 2.0 / (2.0 + p.delta_a) +
                    static_cast<double>(n_b) * 2.0 / (2.0 + p.delta_b)) /
                   static_cast<double>(n);
      for (auto& blocks : plan.blocks) blocks = {{0, m_a}, {m_a, m_b}};
      break;
    }
    case Scheme::NoFeedback: {
      const double shrink =
          std::max(0.0, 1.0 - static_cast<double>(plan.guard) / static_cast<double>(n));
      std::array<std::int64_t, 2> next_index{0, 0};
      std::int64_t block = 0;
      std::int64_t start = 1;
      for (const auto& [length, delta] :
           {std::pair{n_a, p.delta_a}, std::pair{n_b, p.delta_b}}) {
        const std::array<std::int64_t, 2> share{length / 2, length - length / 2};
        for (int user = 1; user <= 2; ++user) {
          const auto slots = share[idx(user)];
          const std::int64_t k = std::max<std::int64_t>(
              0, floor_tol((1.0 - delta) * static_cast<double>(slots) * shrink));
          add_stream(plan, user, block, next_index[idx(user)], k, start,
                     start + slots - 1);
          plan.blocks[idx(user)].push_back({next_index[idx(user)], k});
          next_index[idx(user)] += k;
          start += slots;
        }
        ++block;
      }
      plan.m1 = next_index[0];
      plan.m2 = next_index[1];
      plan.alpha = 1.0;
      break;
    }
  }
  return plan;
}

SchemePlan manual_plan(std::int64_t n, std::int64_t m1, std::int64_t m2) {
  if (n < 1 || m1 < 0 || m2 < 0) throw std::invalid_argument("invalid manual plan");
  SchemePlan plan;
  plan.scheme = Scheme::InterModal;
  plan.n = n;
  plan.m1 = m1;
  plan.m2 = m2;
  Stage s;
  s.count = {m1, m2};
  s.deadline = n;
  plan.stages.push_back(s);
  plan.blocks = {std::vector<MessageBlock>{{0, m1}}, std::vector<MessageBlock>{{0, m2}}};
  return plan;
}

// ---------------------------------------------------------------------------
// ThreePhaseEngine

ThreePhaseEngine::ThreePhaseEngine(std::array<std::int64_t, 2> first,
                                   std::array<std::int64_t, 2> count)
    : first_(first), count_(count) {
  for (int user = 1; user <= 2; ++user) {
    const auto u = idx(user);
    if (count_[u] < 0) throw std::invalid_argument("negative packet count");
    status_[u].assign(static_cast<std::size_t>(count_[u]), PacketStatus::Fresh);
    status_counts_[u][static_cast<std::size_t>(PacketStatus::Fresh)] = count_[u];
    for (std::int64_t i = 0; i < count_[u]; ++i) raw_[u].push_back({user, first_[u] + i});
  }
  advance();
}

PacketStatus ThreePhaseEngine::status(const PacketId& id) const {
  const auto u = idx(id.user);
  const auto local = id.index - first_[u];
  if (local < 0 || local >= count_[u]) throw std::out_of_range("packet outside stage");
  return status_[u][static_cast<std::size_t>(local)];
}

void ThreePhaseEngine::set_status(const PacketId& id, PacketStatus s) {
  const auto u = idx(id.user);
  auto& slot = status_[u][static_cast<std::size_t>(id.index - first_[u])];
  --status_counts_[u][static_cast<std::size_t>(slot)];
  ++status_counts_[u][static_cast<std::size_t>(s)];
  slot = s;
}

void ThreePhaseEngine::advance() {
  if (phase_ == Phase::Raw1 && raw_[0].empty()) phase_ = Phase::Raw2;
  if (phase_ == Phase::Raw2 && raw_[1].empty()) {
    phase_ = Phase::Multicast;
    backlog_ = {static_cast<std::int64_t>(virtual_[0].size()),
                static_cast<std::int64_t>(virtual_[1].size())};
  }
  if (phase_ == Phase::Multicast && virtual_[0].empty() && virtual_[1].empty()) {
    phase_ = Phase::Done;
  }
}

TransmitAction ThreePhaseEngine::next(const Messages& messages) const {
  auto bit_of = [&](const PacketId& id) {
    return messages[idx(id.user)][static_cast<std::size_t>(id.index)];
  };
  auto raw = [&](const PacketId& id) {
    return TransmitAction{RawPacket{id}, bit_of(id)};
  };
  auto mix = [&](const PacketId& a, const PacketId& b) {
    return TransmitAction{XorPacket{a, b},
                          static_cast<std::uint8_t>(bit_of(a) ^ bit_of(b))};
  };

  switch (phase_) {
    case Phase::Raw1: return raw(raw_[0].front());
    case Phase::Raw2: return raw(raw_[1].front());
    case Phase::Multicast: {
      const auto& v1 = virtual_[0];
      const auto& v2 = virtual_[1];
      if (!v1.empty() && !v2.empty()) return mix(v1.front(), v2.front());
      if (!v1.empty()) {
        return last_resolved_[1] ? mix(v1.front(), *last_resolved_[1]) : raw(v1.front());
      }
      return last_resolved_[0] ? mix(*last_resolved_[0], v2.front()) : raw(v2.front());
    }
    default:
      throw ProtocolViolation("transmit requested after the stage finished");
  }
}

bool ThreePhaseEngine::deliver_head(int user, const PacketId& id) {
  auto& q = virtual_[idx(user)];
  if (q.empty() || !(q.front() == id)) return false;
  set_status(id, PacketStatus::DeliveredToIntended);
  q.pop_front();
  last_resolved_[idx(user)] = id;
  return true;
}

void ThreePhaseEngine::feedback(const SlotState& slot, const TransmitAction& sent) {
  if (phase_ == Phase::Raw1 || phase_ == Phase::Raw2) {
    const auto* pkt = std::get_if<RawPacket>(&sent.payload);
    const int user = phase_ == Phase::Raw1 ? 1 : 2;
    auto& q = raw_[idx(user)];
    if (pkt == nullptr || q.empty() || !(pkt->id == q.front())) {
      throw ProtocolViolation("feedback does not match the raw queue head");
    }
    ++raw_slots_;
    const PacketId id = pkt->id;
    if (status(id) == PacketStatus::Fresh) set_status(id, PacketStatus::AwaitingDelivery);
    if (slot.of(user)) {
      set_status(id, PacketStatus::DeliveredToIntended);
      q.pop_front();
    } else if (slot.of(other(user))) {
      set_status(id, PacketStatus::OverheardOnly);
      q.pop_front();
      virtual_[idx(user)].push_back(id);
    }
  } else if (phase_ == Phase::Multicast) {
    if (const auto* pkt = std::get_if<RawPacket>(&sent.payload)) {
      if (slot.of(pkt->id.user)) deliver_head(pkt->id.user, pkt->id);
    } else if (const auto* x = std::get_if<XorPacket>(&sent.payload)) {
      if (slot.s1) deliver_head(1, x->first);
      if (slot.s2) deliver_head(2, x->second);
    } else {
      throw ProtocolViolation("unexpected action during multicast");
    }
  } else {
    throw ProtocolViolation("feedback after the stage finished");
  }
  advance();
}

std::int64_t ThreePhaseEngine::audit(bool full) const {
  std::int64_t violations = 0;
  for (int user = 1; user <= 2; ++user) {
    const auto u = idx(user);
    const auto raw_size = static_cast<std::int64_t>(raw_[u].size());
    const auto v_size = static_cast<std::int64_t>(virtual_[u].size());
    const auto fresh = status_count(user, PacketStatus::Fresh);
    const auto waiting = status_count(user, PacketStatus::AwaitingDelivery);
    const auto overheard = status_count(user, PacketStatus::OverheardOnly);
    if (raw_size != fresh + waiting) ++violations;
    if (v_size != overheard) ++violations;
    if (delivered(user) + v_size + raw_size != count_[u]) ++violations;
    if (!full) continue;
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(count_[u]), 0);
    auto visit = [&](const std::deque<PacketId>& q, bool raw_queue) {
      for (const auto& id : q) {
        const auto local = static_cast<std::size_t>(id.index - first_[u]);
        if (id.user != user || local >= seen.size() || seen[local]++) {
          ++violations;
          continue;
        }
        const auto s = status_[u][local];
        const bool ok = raw_queue ? (s == PacketStatus::Fresh ||
                                     s == PacketStatus::AwaitingDelivery)
                                  : s == PacketStatus::OverheardOnly;
        if (!ok) ++violations;
      }
    };
    visit(raw_[u], true);
    visit(virtual_[u], false);
  }
  return violations;
}

// ---------------------------------------------------------------------------
// Transmitter

Transmitter::Transmitter(SchemePlan plan, Messages messages, bool until_drained)
    : plan_(std::move(plan)),
      messages_(std::move(messages)),
      until_drained_(until_drained),
      engines_(plan_.stages.size()),
      stream_seq_(plan_.stages.size(), -1),
      abandoned_(plan_.stages.size(), false) {
  for (int user = 1; user <= 2; ++user) {
    if (static_cast<std::int64_t>(messages_[idx(user)].size()) < plan_.m(user)) {
      throw std::invalid_argument("message shorter than the planned packet count");
    }
  }
}

bool Transmitter::stage_finished(std::size_t s) const {
  const auto& st = plan_.stages[s];
  if (abandoned_[s]) return true;
  if (st.kind == Stage::Kind::Stream) return slot_ > st.deadline;
  return engines_[s] && engines_[s]->phase() == Phase::Done;
}

void Transmitter::begin_slot(std::int64_t t) {
  if (t <= slot_) throw ProtocolViolation("slots must advance monotonically");
  slot_ = t;
  while (current_ < plan_.stages.size()) {
    const auto& st = plan_.stages[current_];
    const bool started = st.kind == Stage::Kind::Stream ? stream_seq_[current_] >= 0
                                                        : engines_[current_] != nullptr;
    const bool honor_deadline = !until_drained_ || st.kind == Stage::Kind::Stream;
    if (honor_deadline && t > st.deadline && !stage_finished(current_)) {
      abandoned_[current_] = true;
    }
    if (stage_finished(current_)) {
      ++current_;
      continue;
    }
    if (!started) {
      if (t < st.start_slot) {
        waiting_ = true;
        return;
      }
      if (st.kind == Stage::Kind::Stream) {
        stream_seq_[current_] = 0;
      } else {
        engines_[current_] = std::make_unique<ThreePhaseEngine>(st.first, st.count);
        if (stage_finished(current_)) {
          ++current_;
          continue;
        }
      }
    }
    waiting_ = false;
    return;
  }
  waiting_ = false;
}

Phase Transmitter::phase() const {
  if (current_ >= plan_.stages.size()) return Phase::Done;
  const auto& st = plan_.stages[current_];
  if (st.kind == Stage::Kind::Stream) {
    return st.stream_user == 1 ? Phase::Raw1 : Phase::Raw2;
  }
  if (st.fresh_tail) return Phase::FreshTail;
  if (waiting_ || !engines_[current_]) return Phase::Raw1;
  return engines_[current_]->phase();
}

TransmitAction Transmitter::next() const {
  if (current_ >= plan_.stages.size()) {
    throw ProtocolViolation("transmit requested in the Done phase");
  }
  if (waiting_) return TransmitAction{IdleSymbol{}, 0};
  const auto& st = plan_.stages[current_];
  if (st.kind == Stage::Kind::Stream) {
    return TransmitAction{CodedPacket{st.stream_user, st.stream_block, stream_seq_[current_]}, 0};
  }
  return engines_[current_]->next(messages_);
}

void Transmitter::feedback(const SlotState& slot, const TransmitAction& sent) {
  if (current_ >= plan_.stages.size() || waiting_) return;
  if (plan_.stages[current_].kind == Stage::Kind::Stream) {
    ++stream_seq_[current_];
    return;
  }
  engines_[current_]->feedback(slot, sent);
}

std::optional<std::size_t> Transmitter::active_stage() const {
  if (current_ >= plan_.stages.size()) return std::nullopt;
  return current_;
}

const ThreePhaseEngine* Transmitter::engine(std::size_t stage) const {
  return stage < engines_.size() ? engines_[stage].get() : nullptr;
}

bool Transmitter::stage_completed(std::size_t stage) const {
  return engines_.at(stage) && engines_[stage]->phase() == Phase::Done;
}

bool Transmitter::all_stages_completed() const {
  for (std::size_t s = 0; s < plan_.stages.size(); ++s) {
    if (plan_.stages[s].kind == Stage::Kind::ThreePhase && !stage_completed(s)) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Receiver

Receiver::Receiver(int user, std::int64_t m_own, std::int64_t m_other,
                   std::size_t stream_blocks)
    : user_(user),
      own_(static_cast<std::size_t>(m_own), -1),
      overheard_(static_cast<std::size_t>(m_other), -1),
      stream_counts_(stream_blocks, 0) {
  if (user != 1 && user != 2) throw std::invalid_argument("user must be 1 or 2");
}

void Receiver::observe(const SlotState& slot, const TransmitAction& sent) {
  if (!slot.of(user_)) return;
  const auto bit = static_cast<std::int8_t>(sent.bit);
  if (const auto* raw = std::get_if<RawPacket>(&sent.payload)) {
    auto& store = raw->id.user == user_ ? own_ : overheard_;
    store.at(static_cast<std::size_t>(raw->id.index)) = bit;
  } else if (const auto* x = std::get_if<XorPacket>(&sent.payload)) {
    const auto& mine = user_ == 1 ? x->first : x->second;
    const auto& theirs = user_ == 1 ? x->second : x->first;
    if (overheard_.at(static_cast<std::size_t>(theirs.index)) < 0) ++useless_xor_;
    coded_.push_back({mine.index, theirs.index, sent.bit});
  } else if (const auto* c = std::get_if<CodedPacket>(&sent.payload)) {
    if (c->user == user_) ++stream_counts_.at(static_cast<std::size_t>(c->block));
  }
}

DecodeResult Receiver::decode(std::int64_t m) const {
  DecodeResult r;
  r.recovered.assign(static_cast<std::size_t>(m), -1);
  const auto known = std::min<std::size_t>(own_.size(), r.recovered.size());
  std::copy_n(own_.begin(), known, r.recovered.begin());
  for (const auto& obs : coded_) {
    if (obs.own_index >= m) continue;
    auto& slot = r.recovered[static_cast<std::size_t>(obs.own_index)];
    const auto side = overheard_[static_cast<std::size_t>(obs.other_index)];
    if (slot < 0 && side >= 0) slot = static_cast<std::int8_t>(obs.bit ^ side);
  }
  r.success = std::all_of(r.recovered.begin(), r.recovered.end(),
                          [](std::int8_t b) { return b >= 0; });
  return r;
}

std::vector<bool> Receiver::decode_blocks(const std::vector<MessageBlock>& blocks,
                                          bool stream_blocks) const {
  std::vector<bool> ok(blocks.size(), false);
  if (stream_blocks) {
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      ok[b] = b < stream_counts_.size() && stream_counts_[b] >= blocks[b].count;
    }
    return ok;
  }
  std::int64_t total = 0;
  for (const auto& b : blocks) total = std::max(total, b.first + b.count);
  const auto r = decode(total);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto begin = r.recovered.begin() + blocks[b].first;
    ok[b] = std::all_of(begin, begin + blocks[b].count, [](std::int8_t v) { return v >= 0; });
  }
  return ok;
}

std::optional<std::uint8_t> Receiver::own(std::int64_t index) const {
  const auto v = own_.at(static_cast<std::size_t>(index));
  if (v < 0) return std::nullopt;
  return static_cast<std::uint8_t>(v);
}

std::optional<std::uint8_t> Receiver::overheard(std::int64_t index) const {
  const auto v = overheard_.at(static_cast<std::size_t>(index));
  if (v < 0) return std::nullopt;
  return static_cast<std::uint8_t>(v);
}

// ---------------------------------------------------------------------------
// Trials

double TrialStats::empirical_erasure(int mode, int user) const {
  const auto slots = mode_slots.at(static_cast<std::size_t>(mode));
  if (slots == 0) return 0.0;
  return static_cast<double>(erasures[static_cast<std::size_t>(mode)][idx(user)]) /
         static_cast<double>(slots);
}

Messages make_messages(const SchemePlan& plan, std::uint64_t seed) {
  std::mt19937_64 gen(derive_seed(seed, 0x6d657373616765ULL));
  Messages msgs;
  for (int user = 1; user <= 2; ++user) {
    auto& bits = msgs[idx(user)];
    bits.resize(static_cast<std::size_t>(plan.m(user)));
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (i % 64 == 0) word = gen();
      bits[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1U);
    }
  }
  return msgs;
}

TrialStats run_trial(const ModeSchedule& schedule, const SchemePlan& plan,
                     std::uint64_t seed, const TrialOptions& options) {
  const ChannelSampler sampler(schedule, derive_seed(seed, 1));
  return run_trial(schedule, plan, seed,
                   [&sampler](std::int64_t t) { return sampler.extended(t); }, options);
}

TrialStats run_trial(const ModeSchedule& schedule, const SchemePlan& plan,
                     std::uint64_t seed, const ChannelFn& channel,
                     const TrialOptions& options) {
  const std::int64_t n = schedule.n();
  if (plan.n != n) throw std::invalid_argument("plan and schedule blocklengths differ");

  const bool streams = plan.scheme == Scheme::NoFeedback;
  Transmitter tx(plan, make_messages(plan, seed), options.until_drained);
  const auto stream_blocks = streams ? std::size_t{2} : std::size_t{0};
  std::array<Receiver, 2> rx{Receiver(1, plan.m1, plan.m2, stream_blocks),
                             Receiver(2, plan.m2, plan.m1, stream_blocks)};

  TrialStats stats;
  stats.message_size = {plan.m1, plan.m2};
  const std::int64_t limit =
      options.until_drained ? n * std::max<std::int64_t>(1, options.drain_limit_factor) : n;

  std::optional<std::pair<std::size_t, Phase>> last_phase;
  for (std::int64_t t = 1; t <= limit; ++t) {
    tx.begin_slot(t);
    const Phase phase = tx.phase();
    if (phase == Phase::Done && t > n) break;

    const SlotState slot = channel(t);
    if (t <= n) {
      const auto mode = static_cast<std::size_t>(schedule.mode_index_at(t));
      ++stats.mode_slots[mode];
      stats.erasures[mode][0] += slot.s1 ? 0 : 1;
      stats.erasures[mode][1] += slot.s2 ? 0 : 1;
    }
    stats.slots_simulated = t;
    if (phase == Phase::Done) continue;

    const std::pair<std::size_t, Phase> tag{*tx.active_stage(), phase};
    if (!last_phase || *last_phase != tag) {
      stats.phase_boundaries.push_back({phase, t});
      last_phase = tag;
    }

    const TransmitAction action = tx.next();
    if (options.record_actions) stats.actions.push_back(action);
    rx[0].observe(slot, action);
    rx[1].observe(slot, action);
    tx.feedback(slot, action);

    if (options.check_invariants > 0) {
      if (const auto* e = tx.engine(*tx.active_stage())) {
        stats.invariant_violations += e->audit(options.check_invariants > 1);
      }
    }
    if (!streams && stats.completion_slot < 0 && tx.all_stages_completed()) {
      stats.completion_slot = t;
      stats.phase_boundaries.push_back({Phase::Done, t});
    }
  }

  if (const auto* main = tx.engine(0)) {
    stats.raw_slots = main->raw_slots();
    stats.backlog_at_multicast = main->backlog_at_multicast();
  }
  if (options.check_invariants > 0) {
    stats.invariant_violations += rx[0].useless_xor_receptions() + rx[1].useless_xor_receptions();
  }

  for (int user = 1; user <= 2; ++user) {
    const auto u = idx(user);
    const auto& blocks = plan.blocks[u];
    const auto ok = rx[u].decode_blocks(blocks, streams);
    std::vector<std::int8_t> recovered;
    if (!streams) recovered = rx[u].decode(plan.m(user)).recovered;
    bool all = true;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      bool good = ok[b];
      if (good && !streams) {
        for (std::int64_t i = blocks[b].first; i < blocks[b].first + blocks[b].count; ++i) {
          const auto k = static_cast<std::size_t>(i);
          if (recovered[k] != static_cast<std::int8_t>(tx.messages()[u][k])) {
            ++stats.bit_errors;
            good = false;
          }
        }
      }
      if (good) stats.bits_delivered[u] += blocks[b].count;
      all = all && good;
    }
    stats.decode_ok[u] = all;
  }
  return stats;
}

TrialStats run_trial(const ModeParams& p, std::int64_t n, std::int64_t n_t,
                     double delta_t, const SchemePlan& plan, std::uint64_t seed,
                     const TrialOptions& options) {
  const auto schedule = build_schedule(n, p.eta, n_t, p.delta_a, delta_t, p.delta_b);
  return run_trial(schedule, plan, seed, options);
}

}  // namespace bpec
