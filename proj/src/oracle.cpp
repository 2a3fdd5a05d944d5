#include "nlphy/oracle.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "nlphy/detect.hpp"
#include "nlphy/precode.hpp"
#include "nlphy/rng.hpp"

namespace nlphy::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Visit every label vector in lexicographic order (stream 0 outermost).
template <class Visit>
void for_each_vector(const CMat& h, const Constellation& c, Visit&& visit) {
  const int k = static_cast<int>(h.cols());
  std::vector<int> labels(static_cast<std::size_t>(k), 0);
  std::vector<CVec> partial(static_cast<std::size_t>(k) + 1, CVec::Zero(h.rows()));
  auto rec = [&](auto&& self, int i) -> void {
    if (i == k) {
      visit(labels, partial[static_cast<std::size_t>(k)]);
      return;
    }
    for (int l = 0; l < c.order(); ++l) {
      labels[static_cast<std::size_t>(i)] = l;
      partial[static_cast<std::size_t>(i) + 1] = partial[static_cast<std::size_t>(i)] + h.col(i) * c.point(l);
      self(self, i + 1);
    }
  };
  rec(rec, 0);
}

}  // namespace

MlResult exhaustive_ml(const CVec& y, const CMat& h, const Constellation& c) {
  MlResult best{{}, kInf};
  for_each_vector(h, c, [&](const std::vector<int>& labels, const CVec& hs) {
    const double m = (y - hs).squaredNorm();
    // Enumeration is lexicographic, so on a tie the incumbent already wins.
    if (m < best.metric && !metric_tied(m, best.metric)) best = {labels, m};
  });
  return best;
}

std::vector<double> exhaustive_maxlog(const CVec& y, const CMat& h, double noise_var,
                                      const Constellation& c, double clip) {
  const int k = static_cast<int>(h.cols());
  const int nb = c.bits_per_symbol();
  const auto total = static_cast<std::size_t>(k * nb);
  std::vector<double> min0(total, kInf), min1(total, kInf);
  for_each_vector(h, c, [&](const std::vector<int>& labels, const CVec& hs) {
    const double m = (y - hs).squaredNorm();
    for (int i = 0; i < k; ++i)
      for (int b = 0; b < nb; ++b) {
        const auto at = static_cast<std::size_t>(i * nb + b);
        double& slot = c.label_bit(labels[static_cast<std::size_t>(i)], b) ? min1[at] : min0[at];
        if (m < slot) slot = m;
      }
  });
  std::vector<double> llr(total);
  for (std::size_t i = 0; i < total; ++i) {
    const double v = (min1[i] - min0[i]) / noise_var;
    llr[i] = v > clip ? clip : v < -clip ? -clip : v;
  }
  return llr;
}

VpResult exhaustive_vp(const CMat& p, const CVec& s, double tau, int bound) {
  const int k = static_cast<int>(p.cols());
  const CVec base = p * s;
  VpResult best{base.squaredNorm(), 0};
  std::vector<int> coords(static_cast<std::size_t>(2 * k), 0);
  std::vector<int> best_coords = coords;
  std::vector<CVec> partial(static_cast<std::size_t>(2 * k) + 1);
  partial[0] = base;
  auto rec = [&](auto&& self, int d) -> void {
    if (d == 2 * k) {
      const double pw = partial[static_cast<std::size_t>(d)].squaredNorm();
      if (pw < best.power) {
        best.power = pw;
        best_coords = coords;
      }
      return;
    }
    const int col = d / 2;
    const cd unit = (d % 2 == 0) ? cd(tau, 0.0) : cd(0.0, tau);
    for (int v = -bound; v <= bound; ++v) {
      coords[static_cast<std::size_t>(d)] = v;
      partial[static_cast<std::size_t>(d) + 1] =
          partial[static_cast<std::size_t>(d)] + p.col(col) * (unit * static_cast<double>(v));
      self(self, d + 1);
    }
  };
  rec(rec, 0);
  for (int v : best_coords) best.max_abs_coord = std::max(best.max_abs_coord, std::abs(v));
  return best;
}

CMat conditioned_matrix(std::uint64_t seed, int rows, int cols, double cond) {
  RngStream rng(seed, 0x0c0d);
  CMat a(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) a(i, j) = rng.cgauss();
  Eigen::JacobiSVD<CMat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::Index n = svd.singularValues().size();
  Eigen::VectorXd sv(n);
  // Geometric spread of singular values from 1 down to 1/cond.
  for (Eigen::Index i = 0; i < n; ++i)
    sv(i) = n == 1 ? 1.0 : std::pow(cond, -static_cast<double>(i) / static_cast<double>(n - 1));
  return svd.matrixU() * sv.cast<cd>().asDiagonal() * svd.matrixV().adjoint();
}

namespace {

CMat rayleigh(RngStream& rng, int rows, int cols) {
  CMat h(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) h(i, j) = rng.cgauss();
  return h;
}

CVec random_symbols(RngStream& rng, const Constellation& c, int k) {
  CVec s(k);
  for (int i = 0; i < k; ++i)
    s(i) = c.point(static_cast<int>(rng.uniform() * c.order()) % c.order());
  return s;
}

}  // namespace

Report run(const std::string& kind, int trials, int rows, int cols, std::uint64_t seed) {
  if (trials < 1 || rows < 1 || cols < 1) throw std::invalid_argument("oracle: trials and dims must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  Report rep;
  rep.kind = kind;
  rep.rows = rows;
  rep.cols = cols;
  rep.trials = trials;
  RngStream rng(seed, 0x04ac1e);

  if (kind == "sphere") {
    if (rows < cols) throw std::invalid_argument("oracle sphere: need rows >= cols");
    const Constellation& c = Constellation::qam(16);
    const double snrs[] = {0.0, 10.0, 20.0};
    for (int t = 0; t < trials; ++t) {
      const CMat h = rayleigh(rng, rows, cols);
      const CVec s = random_symbols(rng, c, cols);
      const double nv = std::pow(10.0, -snrs[t % 3] / 10.0);
      CVec y = h * s;
      for (int i = 0; i < rows; ++i) y(i) += rng.cgauss(nv);
      const DetectionResult d = sphere_hard(y, h, c);
      const MlResult ref = exhaustive_ml(y, h, c);
      rep.max_deviation = std::max(rep.max_deviation, std::abs(d.metric - ref.metric));
      if (d.hard == ref.labels) ++rep.matches;
    }
  } else if (kind == "llr") {
    if (rows < cols) throw std::invalid_argument("oracle llr: need rows >= cols");
    const Constellation& c = Constellation::qam(4);
    int list = 1;
    for (int i = 0; i < cols; ++i) list *= c.order();
    for (int t = 0; t < trials; ++t) {
      const CMat h = rayleigh(rng, rows, cols);
      const CVec s = random_symbols(rng, c, cols);
      const double nv = std::pow(10.0, -rng.uniform(0.0, 20.0) / 10.0);
      CVec y = h * s;
      for (int i = 0; i < rows; ++i) y(i) += rng.cgauss(nv);
      const DetectionResult d = sphere_soft(y, h, nv, c, list, kDefaultLlrClip, list);
      const std::vector<double> ref = exhaustive_maxlog(y, h, nv, c, kDefaultLlrClip);
      double dev = 0.0;
      for (std::size_t i = 0; i < ref.size(); ++i) dev = std::max(dev, std::abs(d.llr[i] - ref[i]));
      rep.max_deviation = std::max(rep.max_deviation, dev);
      if (dev <= 1e-9) ++rep.matches;
    }
  } else if (kind == "vp") {
    // rows = UEs, cols = BS antennas of the downlink channel.
    if (rows > cols) throw std::invalid_argument("oracle vp: need UEs <= BS antennas");
    const Constellation& c = Constellation::qam(4);
    const double tau = tau_for(c);
    for (int t = 0; t < trials; ++t) {
      const double cond = 1.0 + 99.0 * rng.uniform();
      const CMat h = conditioned_matrix(seed * 7919u + static_cast<std::uint64_t>(t), rows, cols, cond);
      const CVec s = random_symbols(rng, c, rows);
      const CMat p = right_pinv(h);
      VectorPerturbation vp(h, std::vector<double>(static_cast<std::size_t>(rows), tau), 32);
      std::vector<GaussInt> l(static_cast<std::size_t>(rows));
      const double got = vp.search(s, l);
      int chosen = 0;
      for (const GaussInt& g : l) chosen = std::max({chosen, std::abs(g.re), std::abs(g.im)});
      rep.max_perturbation = std::max(rep.max_perturbation, chosen);
      // The box always contains the search's answer: widened past 3 when needed.
      const VpResult ref = exhaustive_vp(p, s, tau, std::max(3, chosen));
      rep.max_perturbation = std::max(rep.max_perturbation, ref.max_abs_coord);
      const double zf = (p * s).squaredNorm();
      const double dev = std::abs(got - ref.power);
      rep.max_deviation = std::max(rep.max_deviation, dev);
      if (dev <= 1e-9 * std::max(1.0, ref.power) && got <= zf * (1.0 + 1e-12)) ++rep.matches;
    }
  } else {
    throw std::invalid_argument("oracle: kind must be sphere, llr or vp");
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace nlphy::oracle
