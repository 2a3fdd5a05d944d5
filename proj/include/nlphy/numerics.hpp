#pragma once

#include <complex>

#include <Eigen/Dense>

namespace nlphy {

using cd = std::complex<double>;

/// Dense complex matrix: channels, precoders and decomposition factors.
using CMat = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic>;
using CVec = Eigen::Matrix<cd, Eigen::Dynamic, 1>;

struct QrFactors {
  CMat q;  ///< m x n, orthonormal columns
  CMat r;  ///< n x n, upper triangular, real non-negative diagonal
};

/// Thin Householder QR of an m x n matrix with m >= n.
/// Throws RankDeficient when a pivot falls below 1e-12 * ||A||_F.
QrFactors qr_decompose(const CMat& a);

/// Right pseudo-inverse A^H (A A^H)^{-1} of a k x n matrix with k <= n.
/// Throws Singular when cond(A A^H) exceeds 1e12.
CMat right_pinv(const CMat& a);

/// Linear MMSE filter (H^H H + noise_var I)^{-1} H^H. With noise_var = 0
/// this is the left pseudo-inverse (zero-forcing filter).
CMat mmse_filter(const CMat& h, double noise_var);

/// True when every entry is finite.
bool all_finite(const CMat& a);

inline constexpr double kSingularCond = 1e12;

}  // namespace nlphy
