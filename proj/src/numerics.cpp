#include "nlphy/numerics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "nlphy/error.hpp"

namespace nlphy {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::Singular: return "Singular";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TooManyLayers: return "TooManyLayers";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::DegenerateMeasurement: return "DegenerateMeasurement";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

bool all_finite(const CMat& a) {
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (!std::isfinite(a(i, j).real()) || !std::isfinite(a(i, j).imag())) return false;
  return true;
}

QrFactors qr_decompose(const CMat& a) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  if (m < n || n == 0) {
    std::ostringstream os;
    os << "qr_decompose: need rows >= cols > 0, got " << m << "x" << n;
    fail(ErrorCode::DimMismatch, os.str());
  }
  const double scale = a.norm();
  const double pivot_tol = 1e-12 * scale;

  CMat work = a;
  // Householder vectors stored column-wise; v_k lives in rows k..m-1.
  CMat vs = CMat::Zero(m, n);

  for (Eigen::Index k = 0; k < n; ++k) {
    auto x = work.col(k).tail(m - k);
    const double xnorm = x.norm();
    if (xnorm < pivot_tol || xnorm == 0.0) {
      std::ostringstream os;
      os << "qr_decompose: pivot " << k << " magnitude " << xnorm << " below tolerance";
      fail(ErrorCode::RankDeficient, os.str());
    }
    // Reflect x onto -e^{i arg x0} ||x|| e_1; the diagonal is fixed up below.
    const cd x0 = x(0);
    const cd phase = std::abs(x0) > 0.0 ? x0 / std::abs(x0) : cd(1.0, 0.0);
    CVec v = x;
    v(0) += phase * xnorm;
    const double vnorm = v.norm();
    v /= vnorm;
    vs.col(k).tail(m - k) = v;
    // work <- (I - 2 v v^H) work on the trailing block
    auto block = work.bottomRightCorner(m - k, n - k);
    const Eigen::Matrix<cd, 1, Eigen::Dynamic> w = v.adjoint() * block;
    block.noalias() -= 2.0 * v * w;
  }

  CMat r = work.topRows(n).triangularView<Eigen::Upper>();

  // Q = H_0 H_1 ... H_{n-1} applied to the first n columns of I.
  CMat q = CMat::Identity(m, n);
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    const CVec v = vs.col(k).tail(m - k);
    auto block = q.bottomRows(m - k);
    const Eigen::Matrix<cd, 1, Eigen::Dynamic> w = v.adjoint() * block;
    block.noalias() -= 2.0 * v * w;
  }

  // Rotate each row of R (and column of Q) so the diagonal is real and >= 0.
  for (Eigen::Index k = 0; k < n; ++k) {
    const cd d = r(k, k);
    const double mag = std::abs(d);
    if (mag < pivot_tol) {
      std::ostringstream os;
      os << "qr_decompose: diagonal " << k << " magnitude " << mag << " below tolerance";
      fail(ErrorCode::RankDeficient, os.str());
    }
    const cd ph = d / mag;
    r.row(k) *= std::conj(ph);
    r(k, k) = cd(mag, 0.0);
    q.col(k) *= ph;
  }
  return {std::move(q), std::move(r)};
}

namespace {

// Inverse of a Hermitian positive-definite Gram matrix with a condition check.
CMat checked_hpd_inverse(const CMat& gram, const char* who) {
  Eigen::SelfAdjointEigenSolver<CMat> eig(gram, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  const double lo = ev.minCoeff();
  const double hi = ev.maxCoeff();
  if (!(hi > 0.0) || !(lo > 0.0) || hi / lo > kSingularCond) {
    std::ostringstream os;
    os << who << ": Gram matrix ill-conditioned (eigenvalues " << lo << " .. " << hi << ")";
    fail(ErrorCode::Singular, os.str());
  }
  const Eigen::Index n = gram.rows();
  return gram.llt().solve(CMat::Identity(n, n));
}

}  // namespace

CMat right_pinv(const CMat& a) {
  if (a.rows() > a.cols() || a.rows() == 0) {
    std::ostringstream os;
    os << "right_pinv: need rows <= cols, got " << a.rows() << "x" << a.cols();
    fail(ErrorCode::DimMismatch, os.str());
  }
  const CMat gram = a * a.adjoint();
  return a.adjoint() * checked_hpd_inverse(gram, "right_pinv");
}

CMat mmse_filter(const CMat& h, double noise_var) {
  if (noise_var < 0.0 || !std::isfinite(noise_var))
    throw std::invalid_argument("mmse_filter: noise variance must be finite and >= 0");
  CMat gram = h.adjoint() * h;
  gram.diagonal().array() += noise_var;
  return checked_hpd_inverse(gram, "mmse_filter") * h.adjoint();
}

}  // namespace nlphy
