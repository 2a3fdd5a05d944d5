#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nlphy/constellation.hpp"
#include "nlphy/numerics.hpp"

namespace nlphy::oracle {

// Brute-force references. These enumerate the full search space with direct
// metric evaluation and share no code with the tree searches they check.

struct MlResult {
  std::vector<int> labels;
  double metric;
};

/// argmin_s ||y - H s||^2 over all M^K vectors; ties go to the
/// lexicographically smallest label vector.
MlResult exhaustive_ml(const CVec& y, const CMat& h, const Constellation& c);

/// Exact max-log LLRs (positive means bit 0) over all M^K vectors.
std::vector<double> exhaustive_maxlog(const CVec& y, const CMat& h, double noise_var,
                                      const Constellation& c, double clip);

/// min ||P (s + tau l)||^2 over l with re/im parts in [-bound, bound].
struct VpResult {
  double power;
  int max_abs_coord;  ///< largest |re|/|im| of the minimising l
};
VpResult exhaustive_vp(const CMat& p, const CVec& s, double tau, int bound);

/// Complex Gaussian matrix rescaled to a target 2-norm condition number.
CMat conditioned_matrix(std::uint64_t seed, int rows, int cols, double cond);

struct Report {
  std::string kind;
  int rows = 0;
  int cols = 0;
  int trials = 0;
  int matches = 0;
  double max_deviation = 0.0;  ///< worst metric/LLR/power gap observed
  int max_perturbation = 0;    ///< vp only: largest |l| coordinate of any minimiser seen
  double seconds = 0.0;

  bool passed() const { return matches == trials; }
};

/// kind in {"sphere", "llr", "vp"}. The vp reference box is [-3, 3] per
/// coordinate, widened to cover the search's answer when that lies outside.
/// dims = rows x cols of the channel
/// (receive antennas x streams; for vp, UEs x BS antennas).
Report run(const std::string& kind, int trials, int rows, int cols, std::uint64_t seed);

}  // namespace nlphy::oracle
