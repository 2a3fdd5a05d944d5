#include "nlphy/precode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "nlphy/error.hpp"

namespace nlphy {

double tau_for(const Constellation& c) { return 2.0 * (c.max_coord() + c.min_spacing() / 2.0); }

cd modulo_receive(cd r, double sqrt_gamma, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("modulo_receive: tau must be > 0");
  auto fold = [tau](double v) {
    double f = v - tau * std::floor((v + tau / 2.0) / tau);
    // Rounding can land exactly on +tau/2; map it back into the half-open box.
    if (f >= tau / 2.0) f -= tau;
    return f;
  };
  const cd v = sqrt_gamma * r;
  return {fold(v.real()), fold(v.imag())};
}

ZfPrecoded zf_precode(const CMat& h_dl, const CMat& s) {
  if (s.rows() != h_dl.rows())
    fail(ErrorCode::DimMismatch, "zf_precode: symbol rows differ from UE count");
  const CMat p = right_pinv(h_dl);
  CMat x = p * s;
  const double k = static_cast<double>(h_dl.rows());
  const double n = static_cast<double>(std::max<Eigen::Index>(s.cols(), 1));
  double gamma = x.squaredNorm() / (n * k);
  if (!(gamma > 0.0)) gamma = 1.0;  // all-zero block
  x /= std::sqrt(gamma);
  return {std::move(x), gamma};
}

VectorPerturbation::VectorPerturbation(const CMat& h_dl, std::vector<double> tau, int n_pe,
                                       int node_budget)
    : p_(right_pinv(h_dl)), tau_(std::move(tau)), n_pe_(n_pe), budget_(node_budget) {
  if (n_pe < 1) throw std::invalid_argument("vp_precode: n_pe must be >= 1");
  if (static_cast<Eigen::Index>(tau_.size()) != h_dl.rows())
    fail(ErrorCode::DimMismatch, "vp_precode: one modulo base per stream required");
  for (double t : tau_)
    if (!(t > 0.0)) throw std::invalid_argument("vp_precode: tau must be > 0");
  r_ = qr_decompose(p_).r;
}

namespace {

struct Child {
  double inc;
  GaussInt l;
};

bool child_less(const Child& a, const Child& b) {
  if (a.inc != b.inc) return a.inc < b.inc;
  if (a.l.re != b.l.re) return a.l.re < b.l.re;
  return a.l.im < b.l.im;
}

// Gaussian integers within radius sqrt(remaining / scale) of `center`,
// sorted by increment scale * |l - center|^2.
void enumerate_disk(cd center, double scale, double remaining, std::vector<Child>& out) {
  out.clear();
  if (remaining < 0.0) return;
  const double rad = std::sqrt(remaining / scale) * (1.0 + 1e-9) + 1e-12;
  const int re_lo = static_cast<int>(std::ceil(center.real() - rad));
  const int re_hi = static_cast<int>(std::floor(center.real() + rad));
  for (int a = re_lo; a <= re_hi; ++a) {
    const double dx = a - center.real();
    const double h = std::sqrt(std::max(0.0, rad * rad - dx * dx));
    const int im_lo = static_cast<int>(std::ceil(center.imag() - h));
    const int im_hi = static_cast<int>(std::floor(center.imag() + h));
    for (int b = im_lo; b <= im_hi; ++b) {
      const double dy = b - center.imag();
      out.push_back({scale * (dx * dx + dy * dy), {a, b}});
    }
  }
  std::sort(out.begin(), out.end(), child_less);
}

}  // namespace

double VectorPerturbation::search(const CVec& s, std::span<GaussInt> l_out,
                                  std::size_t* examined) const {
  const int k = static_cast<int>(tau_.size());
  if (s.size() != k || static_cast<int>(l_out.size()) != k)
    fail(ErrorCode::DimMismatch, "vp search: symbol vector length differs from UE count");
  const auto uk = static_cast<std::size_t>(k);

  std::vector<GaussInt> l(uk);
  std::vector<cd> u(uk);
  std::vector<double> pm(uk + 1, 0.0);
  std::vector<std::vector<Child>> kids(uk);
  std::vector<std::size_t> next(uk, 0);
  std::size_t visited = 0;

  // Increment parameters of level i given u at levels > i.
  auto level_center = [&](int i, cd& center, double& scale) {
    cd acc = 0.0;
    for (int j = i + 1; j < k; ++j) acc += r_(i, j) * u[static_cast<std::size_t>(j)];
    const double rii = r_(i, i).real();
    const double ti = tau_[static_cast<std::size_t>(i)];
    center = -(s(i) + acc / rii) / ti;
    scale = rii * rii * ti * ti;
  };
  auto set_level = [&](int i, const Child& c) {
    const auto ui = static_cast<std::size_t>(i);
    l[ui] = c.l;
    u[ui] = s(i) + tau_[ui] * c.l.value();
    pm[ui] = pm[ui + 1] + c.inc;
  };

  // Zero perturbation is always a candidate.
  double best = (r_ * s).squaredNorm();
  std::vector<GaussInt> best_l(uk);

  // Root prefixes: expand level by level until at least n_pe exist.
  struct Prefix {
    double pm;
    std::vector<GaussInt> l;  // levels k-depth .. k-1
  };
  std::vector<Prefix> prefixes{{0.0, {}}};
  int depth = 0;
  std::vector<Child> tmp;
  while (depth < k && prefixes.size() < static_cast<std::size_t>(n_pe_)) {
    const int level = k - 1 - depth;
    std::vector<Prefix> grown;
    for (const Prefix& p : prefixes) {
      pm[uk] = 0.0;
      for (int lev = k - 1; lev > level; --lev) {
        cd center;
        double scale;
        level_center(lev, center, scale);
        const GaussInt g = p.l[static_cast<std::size_t>(lev - (k - depth))];
        const cd d = g.value() - center;
        set_level(lev, {scale * std::norm(d), g});
      }
      cd center;
      double scale;
      level_center(level, center, scale);
      enumerate_disk(center, scale, best - pm[static_cast<std::size_t>(level) + 1], tmp);
      for (const Child& c : tmp) {
        ++visited;
        Prefix q;
        q.pm = pm[static_cast<std::size_t>(level) + 1] + c.inc;
        q.l.reserve(static_cast<std::size_t>(depth) + 1);
        q.l.push_back(c.l);
        q.l.insert(q.l.end(), p.l.begin(), p.l.end());
        grown.push_back(std::move(q));
      }
    }
    prefixes = std::move(grown);
    ++depth;
    if (prefixes.empty()) break;
  }
  std::sort(prefixes.begin(), prefixes.end(), [](const Prefix& a, const Prefix& b) {
    if (a.pm != b.pm) return a.pm < b.pm;
    for (std::size_t i = 0; i < a.l.size(); ++i) {
      if (a.l[i].re != b.l[i].re) return a.l[i].re < b.l[i].re;
      if (a.l[i].im != b.l[i].im) return a.l[i].im < b.l[i].im;
    }
    return false;
  });

  // Prefix j belongs to PE j mod n_pe; each PE spends its own node budget.
  std::vector<std::size_t> pe_used(static_cast<std::size_t>(n_pe_), 0);
  const std::size_t cap = budget_ > 0 ? static_cast<std::size_t>(budget_)
                                      : std::numeric_limits<std::size_t>::max();
  const int stop = k - depth;  // first free level is stop - 1
  for (std::size_t pi = 0; pi < prefixes.size(); ++pi) {
    const Prefix& p = prefixes[pi];
    if (p.pm > best) continue;
    // Install the prefix.
    pm[uk] = 0.0;
    for (int lev = k - 1; lev >= stop; --lev) {
      cd center;
      double scale;
      level_center(lev, center, scale);
      const GaussInt g = p.l[static_cast<std::size_t>(lev - stop)];
      set_level(lev, {scale * std::norm(g.value() - center), g});
    }
    if (stop == 0) {
      if (pm[0] < best) {
        best = pm[0];
        best_l = l;
      }
      continue;
    }
    std::size_t& used = pe_used[pi % pe_used.size()];
    int level = stop - 1;
    auto expand = [&](int i) {
      cd center;
      double scale;
      level_center(i, center, scale);
      enumerate_disk(center, scale, best - pm[static_cast<std::size_t>(i) + 1], kids[static_cast<std::size_t>(i)]);
      next[static_cast<std::size_t>(i)] = 0;
    };
    expand(level);
    while (true) {
      const auto ul = static_cast<std::size_t>(level);
      if (next[ul] < kids[ul].size() && used < cap) {
        const Child c = kids[ul][next[ul]++];
        if (pm[ul + 1] + c.inc > best) {
          next[ul] = kids[ul].size();
          continue;
        }
        ++used;
        ++visited;
        set_level(level, c);
        if (level == 0) {
          if (pm[0] < best) {
            best = pm[0];
            best_l = l;
          }
        } else {
          --level;
          expand(level);
        }
      } else {
        if (level == stop - 1) break;
        ++level;
      }
    }
  }

  std::copy(best_l.begin(), best_l.end(), l_out.begin());
  if (examined) *examined += visited;
  CVec uu(k);
  for (int i = 0; i < k; ++i)
    uu(i) = s(i) + tau_[static_cast<std::size_t>(i)] * best_l[static_cast<std::size_t>(i)].value();
  return (p_ * uu).squaredNorm();
}

PerturbedSignal VectorPerturbation::precode(const CMat& s) const {
  const Eigen::Index k = static_cast<Eigen::Index>(tau_.size());
  if (s.rows() != k) fail(ErrorCode::DimMismatch, "vp_precode: symbol rows differ from UE count");
  PerturbedSignal out;
  out.tau = tau_;
  out.perturbation.resize(static_cast<std::size_t>(k * s.cols()));
  CMat u(k, s.cols());
  double power = 0.0;
  for (Eigen::Index j = 0; j < s.cols(); ++j) {
    std::span<GaussInt> lj(out.perturbation.data() + j * k, static_cast<std::size_t>(k));
    power += search(s.col(j), lj, &out.examined);
    for (Eigen::Index i = 0; i < k; ++i)
      u(i, j) = s(i, j) + tau_[static_cast<std::size_t>(i)] * lj[static_cast<std::size_t>(i)].value();
  }
  const double n = static_cast<double>(std::max<Eigen::Index>(s.cols(), 1));
  out.gamma = power / (n * static_cast<double>(k));
  if (!(out.gamma > 0.0)) out.gamma = 1.0;
  out.x = p_ * u / std::sqrt(out.gamma);
  return out;
}

PerturbedSignal vp_precode(const CMat& h_dl, const CMat& s, double tau, int n_pe, int node_budget) {
  VectorPerturbation vp(h_dl, std::vector<double>(static_cast<std::size_t>(h_dl.rows()), tau), n_pe,
                        node_budget);
  return vp.precode(s);
}

}  // namespace nlphy
