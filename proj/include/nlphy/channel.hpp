#pragma once

#include <cstdint>
#include <vector>

#include "nlphy/numerics.hpp"
#include "nlphy/rng.hpp"

namespace nlphy {

/// Physical (reciprocal) MU-MIMO channel, one N_bs x K matrix per resource block.
struct ChannelRealization {
  std::vector<CMat> h;        ///< per RB, N_bs x K; column k scaled by sqrt(gain[k])
  std::vector<double> gain;   ///< per-UE linear pathloss gain g_k > 0
  double rho = 1.0;           ///< aging coefficient used by evolve

  int n_bs() const { return h.empty() ? 0 : static_cast<int>(h.front().rows()); }
  int n_ue() const { return h.empty() ? 0 : static_cast<int>(h.front().cols()); }
  int n_rb() const { return static_cast<int>(h.size()); }
};

/// Diagonal RF-chain gains that break reciprocity of the effective channels.
struct ImpairmentModel {
  CVec t_bs, r_bs;  ///< per BS antenna
  CVec t_ue, r_ue;  ///< per UE

  static ImpairmentModel identity(int n_bs, int n_ue);
  /// Magnitudes uniform in [0.5, 2], phases uniform.
  static ImpairmentModel draw(RngStream& rng, int n_bs, int n_ue);
};

/// i.i.d. unit-variance Rayleigh entries scaled per UE column by sqrt(g_k).
/// Empty `gain` means all ones.
ChannelRealization draw(std::uint64_t seed, int n_bs, int n_ue, int n_rb,
                        std::vector<double> gain = {});

/// First-order Gauss-Markov aging: rho*H + sqrt(1 - rho^2)*W.
CMat evolve(const CMat& h, double rho, RngStream& rng);
/// Ages every RB; innovations keep each column's pathloss gain.
void evolve(ChannelRealization& ch, double rho, RngStream& rng);

/// Noise variance for an SNR in dB relative to unit-power symbols; +inf gives 0.
double noise_var_for_snr(double snr_db);

/// diag(r_bs) H diag(t_ue), N_bs x K.
CMat ul_effective(const CMat& h, const ImpairmentModel& imp);
/// diag(r_ue) H^T diag(t_bs), K x N_bs.
CMat dl_effective(const CMat& h, const ImpairmentModel& imp);

/// Uplink: x is K x n (one row per UE); returns N_bs x n. noise_var 0 disables noise.
CMat apply_ul(const CMat& h, const ImpairmentModel& imp, const CMat& x, double noise_var,
              RngStream& rng);
/// Downlink: x is N_bs x n; returns K x n (row k is what UE k receives).
CMat apply_dl(const CMat& h, const ImpairmentModel& imp, const CMat& x, double noise_var,
              RngStream& rng);

/// Over-the-air measurements between the reference BS antenna (index 0) and
/// every antenna i through a reciprocal intra-array coupling.
struct CalibrationSounding {
  CVec to_ref;    ///< antenna i transmits, reference receives: r_0 c_i0 t_i
  CVec from_ref;  ///< reference transmits, antenna i receives: r_i c_0i t_0
};

/// Reciprocal (symmetric) coupling between BS antennas: unit-modulus entries
/// with random phase, unit loopback on the diagonal.
CMat draw_array_coupling(RngStream& rng, int n_bs);

/// Pilot symbols per calibration measurement; each measurement is the LS
/// average over them, so noise_var is the per-symbol noise variance.
inline constexpr int kCalibrationPilotLength = 31;

CalibrationSounding sound_array(const CMat& coupling, const ImpairmentModel& imp,
                                double noise_var, RngStream& rng);

}  // namespace nlphy
