#include "nlphy/link.hpp"

#include <algorithm>
#include <stdexcept>

namespace nlphy {

LinkState LinkState::fresh(const LinkParams& p, int mcs_init) {
  if (p.mcs_min > p.mcs_max) throw std::invalid_argument("LinkParams: mcs_min > mcs_max");
  LinkState s;
  s.mcs_min = p.mcs_min;
  s.mcs_max = p.mcs_max;
  s.mcs = std::clamp(mcs_init, p.mcs_min, p.mcs_max);
  return s;
}

LinkState on_feedback(const LinkState& s, Feedback outcome, std::int64_t frame,
                      const LinkParams& p) {
  LinkState n = s;
  const bool cooling = frame < s.cooloff_until;
  if (cooling && p.cooloff_counters == CooloffCounters::Freeze) return n;

  if (outcome == Feedback::Ack) {
    ++n.ack_streak;
    n.nack_streak = 0;
  } else {
    ++n.nack_streak;
    n.ack_streak = 0;
  }
  if (cooling) return n;

  if (n.ack_streak >= p.n_up && n.mcs < n.mcs_max) {
    ++n.mcs;
  } else if (n.nack_streak >= p.n_down && n.mcs > n.mcs_min) {
    --n.mcs;
  } else {
    return n;
  }
  n.ack_streak = 0;
  n.nack_streak = 0;
  n.cooloff_until = frame + p.cooloff_frames;
  return n;
}

std::vector<double> ArqState::combine(std::span<const double> attempt) const {
  std::vector<double> out(attempt.begin(), attempt.end());
  if (llr.size() == out.size())
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += llr[i];
  return out;
}

ArqDecision arq_step(ArqState& s, bool crc_ok, std::span<const double> attempt_llrs,
                     int max_retx) {
  if (crc_ok) {
    s = ArqState{};
    return ArqDecision::Deliver;
  }
  if (s.llr.size() != attempt_llrs.size()) {
    s.llr.assign(attempt_llrs.begin(), attempt_llrs.end());
  } else {
    for (std::size_t i = 0; i < attempt_llrs.size(); ++i) s.llr[i] += attempt_llrs[i];
  }
  if (s.retx >= max_retx) {
    s = ArqState{};
    return ArqDecision::Drop;
  }
  ++s.retx;
  return ArqDecision::Retransmit;
}

}  // namespace nlphy
