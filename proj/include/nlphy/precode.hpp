#pragma once

#include <span>
#include <vector>

#include "nlphy/constellation.hpp"
#include "nlphy/detect.hpp"
#include "nlphy/numerics.hpp"

namespace nlphy {

/// Gaussian integer.
struct GaussInt {
  int re = 0;
  int im = 0;
  friend bool operator==(const GaussInt&, const GaussInt&) = default;
  cd value() const { return {static_cast<double>(re), static_cast<double>(im)}; }
};

/// Precoded transmit block. Column j of `x` is transmitted on data cell j.
struct PerturbedSignal {
  CMat x;                           ///< N_bs x n
  std::vector<GaussInt> perturbation;  ///< K x n, column-major (cell-major)
  std::vector<double> tau;          ///< per stream modulo base
  double gamma = 1.0;               ///< mean ||P u||^2 / K over the block
  std::size_t examined = 0;         ///< lattice nodes visited
};

/// Modulo base: 2 * (largest coordinate + half the minimum spacing).
double tau_for(const Constellation& c);

/// Fold the real and imaginary parts of sqrt_gamma * r into [-tau/2, tau/2).
cd modulo_receive(cd r, double sqrt_gamma, double tau);

struct ZfPrecoded {
  CMat x;
  double gamma;
};

/// Zero-forcing: x = P s / sqrt(gamma), P = right_pinv(H_dl), gamma = mean ||P s||^2 / K.
/// `s` is K x n (one column per cell).
ZfPrecoded zf_precode(const CMat& h_dl, const CMat& s);

/// Vector perturbation over a prepared downlink channel estimate.
///
/// The perturbation of each cell minimises ||P (s + T l)||^2 over Gaussian
/// integer vectors l (T = diag(tau)) by depth-first search on the QR-reduced
/// lattice. The top levels are expanded until at least n_pe root prefixes
/// exist; prefixes are dealt round-robin (best first) to n_pe processing
/// elements sharing one shrinking radius. A positive node_budget caps the
/// nodes each PE may visit; the default (0) is unbounded, which makes the
/// search exact. The radius starts at the l = 0 power, so the result never
/// exceeds zero-forcing power.
inline constexpr int kUnboundedBudget = 0;

class VectorPerturbation {
 public:
  VectorPerturbation(const CMat& h_dl, std::vector<double> tau, int n_pe,
                     int node_budget = kUnboundedBudget);

  const CMat& precoder() const noexcept { return p_; }

  /// Best perturbation for one symbol vector; returns ||P (s + T l)||^2.
  double search(const CVec& s, std::span<GaussInt> l, std::size_t* examined = nullptr) const;

  /// Perturb and normalise a K x n block of symbols.
  PerturbedSignal precode(const CMat& s) const;

 private:
  CMat p_;
  CMat r_;
  std::vector<double> tau_;
  int n_pe_;
  int budget_;
};

/// Single-constellation convenience wrapper.
PerturbedSignal vp_precode(const CMat& h_dl, const CMat& s, double tau, int n_pe,
                           int node_budget = kUnboundedBudget);

}  // namespace nlphy
