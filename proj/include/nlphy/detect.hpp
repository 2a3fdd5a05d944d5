#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "nlphy/constellation.hpp"
#include "nlphy/numerics.hpp"

namespace nlphy {

/// Per-instance detector output. `llr` concatenates the per-stream LLRs in
/// stream order (stream k contributes log2(M_k) values).
struct DetectionResult {
  std::vector<int> hard;    ///< per-stream point labels
  std::vector<double> llr;
  double metric = 0.0;      ///< ||y - H s_hard||^2
  std::size_t examined = 0; ///< tree nodes (or candidates) visited
};

enum class LinearMode { ZF, MMSE };

inline constexpr int kDefaultNodeBudget = 64;

/// Linear ZF/MMSE equalisation followed by per-stream max-log demapping.
///
/// ZF demaps with post-equalisation noise sigma^2 * ||w_k||^2. MMSE uses the
/// unbiased per-stream model x_k = mu_k s_k + e_k with mu_k = (W H)_kk and
/// var(e_k) = mu_k (1 - mu_k), which is the SINR mu_k / (1 - mu_k).
class LinearDetector {
 public:
  LinearDetector(const CMat& h, double noise_var, LinearMode mode,
                 std::span<const Constellation* const> layers, double clip);

  DetectionResult detect(const CVec& y) const;
  const CMat& filter() const noexcept { return w_; }
  /// Post-equalisation noise variance per stream (ZF) or var(e_k) (MMSE).
  const std::vector<double>& stream_noise() const noexcept { return noise_; }

 private:
  CMat h_;
  CMat w_;
  LinearMode mode_;
  std::vector<const Constellation*> layers_;
  std::vector<double> gain_;
  std::vector<double> noise_;
  double clip_;
};

/// Tree-search detector over the QR-triangularised channel; stream K-1 is the
/// root level. Prepared once per channel matrix, reused across observations.
class SphereDetector {
 public:
  SphereDetector(const CMat& h, std::span<const Constellation* const> layers);

  /// Exact ML: depth-first Schnorr-Euchner search with radius shrinking.
  /// Equal metrics resolve to the lexicographically smallest label vector.
  DetectionResult hard(const CVec& y) const;

  /// Candidate-list max-log detector with n_pe processing elements, each a
  /// bounded depth-first search below one of the n_pe most promising root
  /// prefixes. The exact ML vector is always part of the list.
  DetectionResult soft(const CVec& y, double noise_var, int n_pe, double clip,
                       int node_budget = kDefaultNodeBudget) const;

  int streams() const noexcept { return static_cast<int>(layers_.size()); }

 private:
  struct Search;
  struct Children;
  // Square-QAM layout of one layer: sorted axis levels and the label at
  // (in-phase index, quadrature index), for lazy sibling enumeration.
  struct Grid {
    std::vector<double> levels;
    std::vector<int> label;
  };
  CVec rotate(const CVec& y, double& residual) const;

  CMat h_;
  CMat q_;
  CMat r_;
  std::vector<const Constellation*> layers_;
  std::vector<Grid> grids_;
};

DetectionResult detect_linear(const CVec& y, const CMat& h, double noise_var, LinearMode mode,
                              const Constellation& c, double clip = kDefaultLlrClip);
DetectionResult sphere_hard(const CVec& y, const CMat& h, const Constellation& c);
DetectionResult sphere_soft(const CVec& y, const CMat& h, double noise_var,
                            const Constellation& c, int n_pe, double clip = kDefaultLlrClip,
                            int node_budget = kDefaultNodeBudget);

/// Lexicographic order on label vectors (stream 0 most significant).
bool labels_less(std::span<const int> a, std::span<const int> b) noexcept;

/// Relative tolerance under which two metrics count as tied.
inline bool metric_tied(double a, double b) noexcept {
  if (!std::isfinite(a) || !std::isfinite(b)) return a == b;
  const double scale = 1.0 + (a > b ? a : b);
  return (a > b ? a - b : b - a) <= 1e-12 * scale;
}

}  // namespace nlphy
