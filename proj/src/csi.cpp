#include "nlphy/csi.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "nlphy/error.hpp"

namespace nlphy {

double srs_tx_power(SrsPowerMode mode, double pathloss_gain) {
  if (!(pathloss_gain > 0.0)) throw std::invalid_argument("srs_tx_power: pathloss gain must be > 0");
  if (mode == SrsPowerMode::Constant) return 1.0;
  return std::clamp(1.0 / pathloss_gain, 0.1, 10.0);
}

cd pilot_symbol(int ue, int n) {
  constexpr int len = 31;
  const int root = (ue % (len - 1)) + 1;
  const long m = static_cast<long>(n % len);
  const long phase_num = (static_cast<long>(root) * m * (m + 1)) % (2 * len);
  return std::polar(1.0, -std::numbers::pi * static_cast<double>(phase_num) / len);
}

CVec srs_estimate(const CMat& y, std::span<const cd> pilot, double assumed_power) {
  if (pilot.empty()) throw std::invalid_argument("srs_estimate: at least one pilot required");
  if (static_cast<std::size_t>(y.cols()) != pilot.size())
    fail(ErrorCode::DimMismatch, "srs_estimate: observation count differs from pilot length");
  if (!(assumed_power > 0.0)) throw std::invalid_argument("srs_estimate: power must be > 0");
  CVec h = CVec::Zero(y.rows());
  for (std::size_t n = 0; n < pilot.size(); ++n) h += y.col(static_cast<Eigen::Index>(n)) * std::conj(pilot[n]);
  return h / (static_cast<double>(pilot.size()) * std::sqrt(assumed_power));
}

CVec filter_ma(std::deque<CVec>& history, const CVec& est, int window) {
  if (window < 1) throw std::invalid_argument("filter_ma: window must be >= 1");
  history.push_back(est);
  while (history.size() > static_cast<std::size_t>(window)) history.pop_front();
  CVec acc = CVec::Zero(est.size());
  for (const CVec& h : history) acc += h;
  return acc / static_cast<double>(history.size());
}

CVec calibrate(const CalibrationSounding& sounding) {
  const Eigen::Index n = sounding.to_ref.size();
  if (sounding.from_ref.size() != n || n == 0)
    fail(ErrorCode::DimMismatch, "calibrate: measurement vectors differ in length");
  CVec c(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(sounding.from_ref(i)) < 1e-9) {
      std::ostringstream os;
      os << "calibrate: backward measurement of antenna " << i << " is degenerate";
      fail(ErrorCode::DegenerateMeasurement, os.str());
    }
  }
  // Normalise to the reference so c_0 = 1 exactly, noise included.
  const cd ref = sounding.to_ref(0) / sounding.from_ref(0);
  for (Eigen::Index i = 0; i < n; ++i) c(i) = sounding.to_ref(i) / sounding.from_ref(i) / ref;
  return c;
}

CMat predict_dl(const CMat& h_ul, const CVec& calib) {
  if (calib.size() != h_ul.rows())
    fail(ErrorCode::DimMismatch, "predict_dl: calibration length differs from antenna count");
  return (calib.asDiagonal() * h_ul).transpose();
}

cd dmrs_estimate(std::span<const cd> y, std::span<const cd> pilot, double pilot_power) {
  if (pilot.empty() || y.size() != pilot.size())
    fail(ErrorCode::DimMismatch, "dmrs_estimate: observation count differs from pilot length");
  cd acc = 0.0;
  for (std::size_t n = 0; n < y.size(); ++n) acc += y[n] * std::conj(pilot[n]);
  return acc / (static_cast<double>(y.size()) * std::sqrt(pilot_power));
}

CsiState::CsiState(int n_bs, int n_ue, int n_rb, int window)
    : n_ue_(n_ue), window_(window),
      h_ul_(static_cast<std::size_t>(n_rb), CMat::Zero(n_bs, n_ue)),
      history_(static_cast<std::size_t>(n_rb * n_ue)),
      calib_(CVec::Ones(n_bs)) {
  if (window < 1) throw std::invalid_argument("CsiState: window must be >= 1");
}

void CsiState::update(int rb, int ue, const CVec& est) {
  auto& hist = history_.at(static_cast<std::size_t>(rb * n_ue_ + ue));
  h_ul_.at(static_cast<std::size_t>(rb)).col(ue) = filter_ma(hist, est, window_);
}

void CsiState::set_channel(int rb, const CMat& h_ul) { h_ul_.at(static_cast<std::size_t>(rb)) = h_ul; }

void CsiState::set_calibration(CVec c) {
  for (Eigen::Index i = 0; i < c.size(); ++i)
    if (c(i) == cd(0.0, 0.0)) fail(ErrorCode::DegenerateMeasurement, "calibration coefficient is zero");
  calib_ = std::move(c);
}

std::size_t CsiState::history_size(int rb, int ue) const {
  return history_.at(static_cast<std::size_t>(rb * n_ue_ + ue)).size();
}

}  // namespace nlphy
