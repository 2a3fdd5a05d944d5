#include "nlphy/channel.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "nlphy/error.hpp"

namespace nlphy {

namespace {

CVec draw_gains(RngStream& rng, int n) {
  CVec v(n);
  for (int i = 0; i < n; ++i) {
    const double mag = rng.uniform(0.5, 2.0);
    const double ph = rng.uniform(-std::numbers::pi, std::numbers::pi);
    v(i) = std::polar(mag, ph);
  }
  return v;
}

void fill_gaussian(CMat& m, RngStream& rng) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.cgauss();
}

}  // namespace

ImpairmentModel ImpairmentModel::identity(int n_bs, int n_ue) {
  return {CVec::Ones(n_bs), CVec::Ones(n_bs), CVec::Ones(n_ue), CVec::Ones(n_ue)};
}

ImpairmentModel ImpairmentModel::draw(RngStream& rng, int n_bs, int n_ue) {
  ImpairmentModel m;
  m.t_bs = draw_gains(rng, n_bs);
  m.r_bs = draw_gains(rng, n_bs);
  m.t_ue = draw_gains(rng, n_ue);
  m.r_ue = draw_gains(rng, n_ue);
  return m;
}

ChannelRealization draw(std::uint64_t seed, int n_bs, int n_ue, int n_rb, std::vector<double> gain) {
  if (n_bs < 1 || n_ue < 1 || n_rb < 1) throw std::invalid_argument("channel::draw: dimensions must be >= 1");
  if (gain.empty()) gain.assign(static_cast<std::size_t>(n_ue), 1.0);
  if (gain.size() != static_cast<std::size_t>(n_ue))
    fail(ErrorCode::DimMismatch, "channel::draw: gain vector length differs from UE count");
  for (double g : gain)
    if (!(g > 0.0)) throw std::invalid_argument("channel::draw: pathloss gains must be > 0");

  RngStream rng(seed, stream::kChannel);
  ChannelRealization ch;
  ch.gain = std::move(gain);
  ch.h.reserve(static_cast<std::size_t>(n_rb));
  for (int rb = 0; rb < n_rb; ++rb) {
    CMat h(n_bs, n_ue);
    fill_gaussian(h, rng);
    for (int k = 0; k < n_ue; ++k) h.col(k) *= std::sqrt(ch.gain[static_cast<std::size_t>(k)]);
    ch.h.push_back(std::move(h));
  }
  return ch;
}

CMat evolve(const CMat& h, double rho, RngStream& rng) {
  if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("evolve: rho must lie in [0, 1]");
  CMat w(h.rows(), h.cols());
  fill_gaussian(w, rng);
  return rho * h + std::sqrt(1.0 - rho * rho) * w;
}

void evolve(ChannelRealization& ch, double rho, RngStream& rng) {
  if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("evolve: rho must lie in [0, 1]");
  ch.rho = rho;
  const double innov = std::sqrt(1.0 - rho * rho);
  for (CMat& h : ch.h) {
    CMat w(h.rows(), h.cols());
    fill_gaussian(w, rng);
    for (Eigen::Index k = 0; k < w.cols(); ++k)
      w.col(k) *= std::sqrt(ch.gain[static_cast<std::size_t>(k)]);
    h = rho * h + innov * w;
  }
}

double noise_var_for_snr(double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0) return 0.0;
  return std::pow(10.0, -snr_db / 10.0);
}

CMat ul_effective(const CMat& h, const ImpairmentModel& imp) {
  if (imp.r_bs.size() != h.rows() || imp.t_ue.size() != h.cols())
    fail(ErrorCode::DimMismatch, "ul_effective: impairment sizes do not match the channel");
  return imp.r_bs.asDiagonal() * h * imp.t_ue.asDiagonal();
}

CMat dl_effective(const CMat& h, const ImpairmentModel& imp) {
  if (imp.t_bs.size() != h.rows() || imp.r_ue.size() != h.cols())
    fail(ErrorCode::DimMismatch, "dl_effective: impairment sizes do not match the channel");
  return imp.r_ue.asDiagonal() * h.transpose() * imp.t_bs.asDiagonal();
}

namespace {

void add_noise(CMat& y, double noise_var, RngStream& rng) {
  if (noise_var <= 0.0) return;
  for (Eigen::Index j = 0; j < y.cols(); ++j)
    for (Eigen::Index i = 0; i < y.rows(); ++i) y(i, j) += rng.cgauss(noise_var);
}

}  // namespace

CMat apply_ul(const CMat& h, const ImpairmentModel& imp, const CMat& x, double noise_var,
              RngStream& rng) {
  if (x.rows() != h.cols()) {
    std::ostringstream os;
    os << "apply_ul: " << x.rows() << " transmit rows for " << h.cols() << " UEs";
    fail(ErrorCode::DimMismatch, os.str());
  }
  CMat y = ul_effective(h, imp) * x;
  add_noise(y, noise_var, rng);
  return y;
}

CMat apply_dl(const CMat& h, const ImpairmentModel& imp, const CMat& x, double noise_var,
              RngStream& rng) {
  if (x.rows() != h.rows()) {
    std::ostringstream os;
    os << "apply_dl: " << x.rows() << " transmit rows for " << h.rows() << " BS antennas";
    fail(ErrorCode::DimMismatch, os.str());
  }
  CMat y = dl_effective(h, imp) * x;
  add_noise(y, noise_var, rng);
  return y;
}

CMat draw_array_coupling(RngStream& rng, int n_bs) {
  CMat c(n_bs, n_bs);
  for (int i = 0; i < n_bs; ++i) {
    c(i, i) = cd(1.0, 0.0);
    for (int j = i + 1; j < n_bs; ++j) {
      const cd v = std::polar(1.0, rng.uniform(-std::numbers::pi, std::numbers::pi));
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return c;
}

CalibrationSounding sound_array(const CMat& coupling, const ImpairmentModel& imp,
                                double noise_var, RngStream& rng) {
  const Eigen::Index n = coupling.rows();
  if (coupling.cols() != n || imp.t_bs.size() != n || imp.r_bs.size() != n)
    fail(ErrorCode::DimMismatch, "sound_array: coupling and impairment sizes differ");
  CalibrationSounding s{CVec(n), CVec(n)};
  const double est_var = noise_var / kCalibrationPilotLength;
  for (Eigen::Index i = 0; i < n; ++i) {
    s.to_ref(i) = imp.r_bs(0) * coupling(i, 0) * imp.t_bs(i);
    s.from_ref(i) = imp.r_bs(i) * coupling(0, i) * imp.t_bs(0);
    if (noise_var > 0.0) {
      s.to_ref(i) += rng.cgauss(est_var);
      s.from_ref(i) += rng.cgauss(est_var);
    }
  }
  return s;
}

}  // namespace nlphy
