#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace nlphy {

enum class Feedback { Ack, Nack };

/// What happens to streak counters while a cool-off period is running.
enum class CooloffCounters { Accumulate, Freeze };

struct LinkParams {
  int n_up = 10;
  int n_down = 2;
  int cooloff_frames = 20;
  int mcs_min = 0;
  int mcs_max = 11;
  CooloffCounters cooloff_counters = CooloffCounters::Accumulate;
};

/// ACK/NACK-counting MCS selector state for one UE in one direction.
struct LinkState {
  int mcs = 0;
  int ack_streak = 0;
  int nack_streak = 0;
  std::int64_t cooloff_until = 0;  ///< first frame in which a change may happen
  int mcs_min = 0;
  int mcs_max = 0;

  static LinkState fresh(const LinkParams& p, int mcs_init);
  friend bool operator==(const LinkState&, const LinkState&) = default;
};

/// Counter rule: an ACK bumps the ACK streak and clears the NACK streak (and
/// vice versa). Once a streak reaches its threshold outside a cool-off period
/// and the MCS can move, the MCS steps by one, both streaks reset and a new
/// cool-off starts. Inside a cool-off, streaks keep counting (or freeze, per
/// params) and the change waits for the next qualifying event.
LinkState on_feedback(const LinkState& s, Feedback outcome, std::int64_t frame,
                      const LinkParams& p);

enum class ArqDecision { Deliver, Retransmit, Drop };

inline constexpr int kDefaultMaxRetx = 3;

/// Chase-combining buffer of one ARQ process.
struct ArqState {
  std::vector<double> llr;  ///< sum of the LLRs of all failed attempts
  int retx = 0;             ///< retransmissions requested so far

  /// Stored LLRs plus the new attempt (the decoder input).
  std::vector<double> combine(std::span<const double> attempt) const;
};

/// After decoding the combined LLRs of an attempt: on CRC pass deliver and
/// clear; on failure accumulate the attempt's LLRs and request a
/// retransmission, dropping once max_retx retransmissions have failed.
ArqDecision arq_step(ArqState& s, bool crc_ok, std::span<const double> attempt_llrs,
                     int max_retx = kDefaultMaxRetx);

}  // namespace nlphy
