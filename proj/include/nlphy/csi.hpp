#pragma once

#include <cmath>
#include <deque>
#include <span>
#include <vector>

#include "nlphy/channel.hpp"
#include "nlphy/numerics.hpp"

namespace nlphy {

enum class SrsPowerMode { Constant, Tpc };

/// SRS transmit power: 1 in Constant mode, clamp(1/g, 0.1, 10) under ideal
/// pathloss-inverting power control.
double srs_tx_power(SrsPowerMode mode, double pathloss_gain);

/// Unit-modulus pilot value for a UE at pilot position n (Zadoff-Chu, length 31).
cd pilot_symbol(int ue, int n);

/// Least-squares channel column from pilot observations.
/// `y` is N_bs x |p|; the result is (1/|p|) sum_n y_n conj(p_n) / sqrt(power).
CVec srs_estimate(const CMat& y, std::span<const cd> pilot, double assumed_power);

/// Mean of the last min(W, count) estimates after appending `est`; the
/// history keeps at most W entries.
CVec filter_ma(std::deque<CVec>& history, const CVec& est, int window);

/// Reference-antenna reciprocity calibration: c_i = to_ref_i / from_ref_i,
/// so c_0 = 1 and diag(c) H_ul^T matches H_dl up to one scalar per UE.
/// Throws DegenerateMeasurement when |from_ref_i| < 1e-9.
CVec calibrate(const CalibrationSounding& sounding);

/// Downlink estimate for the precoder: (diag(c) H_ul)^T, K x N_bs.
CMat predict_dl(const CMat& h_ul, const CVec& calib);

/// Least-squares scalar from one layer's DMRS cells transmitted at linear
/// per-layer power `pilot_power`.
cd dmrs_estimate(std::span<const cd> y, std::span<const cd> pilot, double pilot_power);

/// Base-station CSI: SRS history per (RB, UE), the filtered uplink channel
/// and reciprocity coefficients.
class CsiState {
 public:
  CsiState(int n_bs, int n_ue, int n_rb, int window);

  /// Fold a new SRS estimate of UE `ue` on resource block `rb`.
  void update(int rb, int ue, const CVec& est);
  /// Replace the filtered channel directly (perfect-CSI operation).
  void set_channel(int rb, const CMat& h_ul);

  const CMat& h_ul(int rb) const { return h_ul_.at(static_cast<std::size_t>(rb)); }
  const CVec& calibration() const noexcept { return calib_; }
  void set_calibration(CVec c);

  int window() const noexcept { return window_; }
  int staleness() const noexcept { return staleness_; }
  void age() { ++staleness_; }
  void mark_fresh() { staleness_ = 0; }
  std::size_t history_size(int rb, int ue) const;

 private:
  int n_ue_;
  int window_;
  int staleness_ = 0;
  std::vector<CMat> h_ul_;
  std::vector<std::deque<CVec>> history_;  // rb * n_ue + ue
  CVec calib_;
};

}  // namespace nlphy
