#pragma once

// Exhaustive check of on_feedback against a direct transcription of the
// counter rules. Shared by the unit tests and the acceptance runner.

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "nlphy/link.hpp"

namespace nlphy::testing {

struct RefLink {
  int mcs, ack = 0, nack = 0;
  std::int64_t until = 0;
};

inline RefLink ref_step(RefLink s, bool ack, std::int64_t frame, const LinkParams& p) {
  const bool blocked = frame < s.until;
  if (blocked && p.cooloff_counters == CooloffCounters::Freeze) return s;
  s.ack = ack ? s.ack + 1 : 0;
  s.nack = ack ? 0 : s.nack + 1;
  if (blocked) return s;
  int next = s.mcs;
  if (s.ack >= p.n_up) next = std::min(s.mcs + 1, p.mcs_max);
  if (s.nack >= p.n_down) next = std::max(s.mcs - 1, p.mcs_min);
  if (next != s.mcs) {
    s.mcs = next;
    s.ack = s.nack = 0;
    s.until = frame + p.cooloff_frames;
  }
  return s;
}

struct SuiteResult {
  long cases = 0;
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    ++cases;
    if (!ok && failures.size() < 20) failures.push_back(what);
  }
};

inline SuiteResult run_link_suite() {
  SuiteResult r;
  auto named = [](int n_up, int n_down, int cool, int lo, int hi, CooloffCounters cc) {
    LinkParams p;
    p.n_up = n_up;
    p.n_down = n_down;
    p.cooloff_frames = cool;
    p.mcs_min = lo;
    p.mcs_max = hi;
    p.cooloff_counters = cc;
    return p;
  };

  // Step-up: five ACKs from a fresh state.
  {
    const LinkParams p = named(5, 2, 20, 0, 11, CooloffCounters::Accumulate);
    LinkState s = LinkState::fresh(p, 3);
    for (int i = 0; i < 4; ++i) s = on_feedback(s, Feedback::Ack, 0, p);
    r.expect(s.mcs == 3 && s.ack_streak == 4, "step-up: no change before the fifth ACK");
    s = on_feedback(s, Feedback::Ack, 0, p);
    r.expect(s.mcs == 4 && s.ack_streak == 0 && s.nack_streak == 0 && s.cooloff_until == 20,
             "step-up: fifth ACK raises the MCS and zeroes counters");
  }
  // Counter reset: four ACKs then a NACK.
  {
    const LinkParams p = named(5, 2, 20, 0, 11, CooloffCounters::Accumulate);
    LinkState s = LinkState::fresh(p, 3);
    for (int i = 0; i < 4; ++i) s = on_feedback(s, Feedback::Ack, 0, p);
    s = on_feedback(s, Feedback::Nack, 0, p);
    r.expect(s.mcs == 3 && s.ack_streak == 0 && s.nack_streak == 1, "reset: NACK clears the ACK streak");
    s = on_feedback(s, Feedback::Ack, 0, p);
    r.expect(s.ack_streak == 1 && s.nack_streak == 0, "reset: ACK clears the NACK streak");
  }
  // Step-down on N_down NACKs.
  {
    const LinkParams p = named(10, 2, 20, 0, 11, CooloffCounters::Accumulate);
    LinkState s = LinkState::fresh(p, 6);
    s = on_feedback(s, Feedback::Nack, 7, p);
    r.expect(s.mcs == 6 && s.nack_streak == 1, "step-down: one NACK is not enough");
    s = on_feedback(s, Feedback::Nack, 7, p);
    r.expect(s.mcs == 5 && s.nack_streak == 0 && s.cooloff_until == 27, "step-down: second NACK lowers the MCS");
  }
  // Bounds clamping.
  {
    const LinkParams p = named(2, 2, 0, 2, 4, CooloffCounters::Accumulate);
    LinkState s = LinkState::fresh(p, 9);
    r.expect(s.mcs == 4, "bounds: initial MCS clamped to mcs_max");
    for (int i = 0; i < 10; ++i) s = on_feedback(s, Feedback::Ack, i, p);
    r.expect(s.mcs == 4 && s.ack_streak == 10, "bounds: ACKs at mcs_max keep counting without a change");
    for (int i = 0; i < 20; ++i) s = on_feedback(s, Feedback::Nack, 10 + i, p);
    r.expect(s.mcs == 2, "bounds: NACKs stop at mcs_min");
  }
  // Cool-off deferral: change at frame 10, no change before frame 30.
  {
    const LinkParams p = named(5, 2, 20, 0, 11, CooloffCounters::Accumulate);
    LinkState s = LinkState::fresh(p, 3);
    for (int i = 0; i < 5; ++i) s = on_feedback(s, Feedback::Ack, 10, p);
    r.expect(s.mcs == 4 && s.cooloff_until == 30, "cool-off: change at frame 10");
    for (int f = 11; f <= 15; ++f) s = on_feedback(s, Feedback::Ack, f, p);
    r.expect(s.mcs == 4 && s.ack_streak == 5, "cool-off: ACKs at frames 11-15 accumulate, no change");
    s = on_feedback(s, Feedback::Ack, 29, p);
    r.expect(s.mcs == 4, "cool-off: still blocked at frame 29");
    s = on_feedback(s, Feedback::Ack, 30, p);
    r.expect(s.mcs == 5 && s.ack_streak == 0 && s.cooloff_until == 50,
             "cool-off: change at first triggering event with frame >= 30");
  }
  {
    const LinkParams p = named(5, 2, 20, 0, 11, CooloffCounters::Freeze);
    LinkState s = LinkState::fresh(p, 3);
    for (int i = 0; i < 5; ++i) s = on_feedback(s, Feedback::Ack, 10, p);
    for (int f = 11; f <= 15; ++f) s = on_feedback(s, Feedback::Ack, f, p);
    r.expect(s.mcs == 4 && s.ack_streak == 0, "freeze: counters stay put during cool-off");
  }

  // Exhaustive sequences: every ACK/NACK pattern of length 10 with frames
  // advancing by 0 or 1 per event, under several parameter sets.
  const LinkParams sets[] = {
      named(3, 2, 2, 0, 2, CooloffCounters::Accumulate),
      named(3, 2, 2, 0, 2, CooloffCounters::Freeze),
      named(1, 1, 0, 1, 3, CooloffCounters::Accumulate),
      named(2, 3, 1, 0, 5, CooloffCounters::Accumulate),
  };
  constexpr int kLen = 10;
  for (const LinkParams& p : sets)
    for (std::uint32_t pattern = 0; pattern < (1u << (2 * kLen)); ++pattern) {
      LinkState s = LinkState::fresh(p, 1);
      RefLink ref{s.mcs};
      std::int64_t frame = 0, last_change = -1000000;
      bool ok = true;
      for (int i = 0; i < kLen && ok; ++i) {
        const bool ack = (pattern >> (2 * i)) & 1u;
        frame += (pattern >> (2 * i + 1)) & 1u;
        const LinkState before = s;
        s = on_feedback(s, ack ? Feedback::Ack : Feedback::Nack, frame, p);
        ref = ref_step(ref, ack, frame, p);
        ok = s.mcs == ref.mcs && s.ack_streak == ref.ack && s.nack_streak == ref.nack &&
             s.cooloff_until == ref.until && s.mcs >= p.mcs_min && s.mcs <= p.mcs_max &&
             (s.ack_streak == 0 || s.nack_streak == 0) && s.ack_streak >= 0 && s.nack_streak >= 0;
        if (s.mcs != before.mcs) {
          ok = ok && frame - last_change >= p.cooloff_frames;
          last_change = frame;
        }
        // Pure function: replaying the same event gives the same state.
        ok = ok && on_feedback(before, ack ? Feedback::Ack : Feedback::Nack, frame, p) == s;
      }
      if (!ok) {
        std::ostringstream os;
        os << "sequence " << pattern << " (n_up " << p.n_up << ", n_down " << p.n_down << ")";
        r.expect(false, os.str());
      } else {
        ++r.cases;
      }
    }
  return r;
}

}  // namespace nlphy::testing
