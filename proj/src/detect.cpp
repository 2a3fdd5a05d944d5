#include "nlphy/detect.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "nlphy/error.hpp"

namespace nlphy {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<const Constellation*> uniform_layers(const Constellation& c, Eigen::Index k) {
  return std::vector<const Constellation*>(static_cast<std::size_t>(k), &c);
}

void check_layers(const CMat& h, std::span<const Constellation* const> layers) {
  if (h.rows() < h.cols())
    fail(ErrorCode::DimMismatch, "detector: need at least as many receive antennas as streams");
  if (static_cast<Eigen::Index>(layers.size()) != h.cols())
    fail(ErrorCode::DimMismatch, "detector: one constellation per stream required");
}

double direct_metric(const CVec& y, const CMat& h, std::span<const Constellation* const> layers,
                     std::span<const int> labels) {
  CVec s(h.cols());
  for (Eigen::Index k = 0; k < h.cols(); ++k)
    s(k) = layers[static_cast<std::size_t>(k)]->point(labels[static_cast<std::size_t>(k)]);
  return (y - h * s).squaredNorm();
}

std::size_t total_bits(std::span<const Constellation* const> layers) {
  std::size_t n = 0;
  for (const auto* c : layers) n += static_cast<std::size_t>(c->bits_per_symbol());
  return n;
}

}  // namespace

bool labels_less(std::span<const int> a, std::span<const int> b) noexcept {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// ---------------------------------------------------------------------------
// Linear detection

LinearDetector::LinearDetector(const CMat& h, double noise_var, LinearMode mode,
                               std::span<const Constellation* const> layers, double clip)
    : h_(h), mode_(mode), layers_(layers.begin(), layers.end()), clip_(clip) {
  check_layers(h, layers);
  const Eigen::Index k = h.cols();
  gain_.assign(static_cast<std::size_t>(k), 1.0);
  noise_.assign(static_cast<std::size_t>(k), 0.0);
  if (mode == LinearMode::ZF) {
    w_ = mmse_filter(h, 0.0);
    for (Eigen::Index i = 0; i < k; ++i)
      noise_[static_cast<std::size_t>(i)] = noise_var * w_.row(i).squaredNorm();
  } else {
    w_ = mmse_filter(h, noise_var);
    // mu_k = 1 - sigma^2 [(H^H H + sigma^2 I)^{-1}]_kk, evaluated without cancellation.
    CMat gram = h.adjoint() * h;
    gram.diagonal().array() += noise_var;
    const CMat inv = gram.llt().solve(CMat::Identity(k, k));
    for (Eigen::Index i = 0; i < k; ++i) {
      const double eps = noise_var * inv(i, i).real();
      const double mu = 1.0 - eps;
      gain_[static_cast<std::size_t>(i)] = mu;
      noise_[static_cast<std::size_t>(i)] = mu * eps;
    }
  }
  // Noise-free equalisation still needs a finite LLR scale.
  for (double& n : noise_) n = std::max(n, 1e-300);
}

DetectionResult LinearDetector::detect(const CVec& y) const {
  const CVec x = w_ * y;
  DetectionResult out;
  out.hard.resize(layers_.size());
  out.llr.resize(total_bits(layers_));
  std::size_t off = 0;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const Constellation& c = *layers_[k];
    const auto nb = static_cast<std::size_t>(c.bits_per_symbol());
    const cd xk = x(static_cast<Eigen::Index>(k));
    demap_llr(xk, cd(gain_[k], 0.0), c, noise_[k], clip_, std::span<double>(out.llr).subspan(off, nb));
    out.hard[k] = c.nearest(xk / gain_[k]);
    off += nb;
  }
  out.metric = direct_metric(y, h_, layers_, out.hard);
  out.examined = layers_.size();
  return out;
}

DetectionResult detect_linear(const CVec& y, const CMat& h, double noise_var, LinearMode mode,
                              const Constellation& c, double clip) {
  const auto layers = uniform_layers(c, h.cols());
  return LinearDetector(h, noise_var, mode, layers, clip).detect(y);
}

// ---------------------------------------------------------------------------
// Tree search

SphereDetector::SphereDetector(const CMat& h, std::span<const Constellation* const> layers)
    : h_(h), layers_(layers.begin(), layers.end()) {
  check_layers(h, layers);
  QrFactors f = qr_decompose(h);
  q_ = std::move(f.q);
  r_ = std::move(f.r);
  for (const Constellation* c : layers_) {
    Grid g;
    for (const cd& p : c->points()) g.levels.push_back(p.real());
    std::sort(g.levels.begin(), g.levels.end());
    g.levels.erase(std::unique(g.levels.begin(), g.levels.end(),
                               [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                   g.levels.end());
    const std::size_t n = g.levels.size();
    if (n * n != static_cast<std::size_t>(c->order()) || n > 16)
      throw std::invalid_argument("sphere detector: constellation is not a square QAM grid");
    auto index = [&](double v) {
      return static_cast<std::size_t>(std::lower_bound(g.levels.begin(), g.levels.end(), v - 1e-9) - g.levels.begin());
    };
    g.label.assign(n * n, -1);
    for (int l = 0; l < c->order(); ++l) g.label[index(c->point(l).real()) * n + index(c->point(l).imag())] = l;
    grids_.push_back(std::move(g));
  }
}

// Lazy Schnorr-Euchner enumeration of one level's children. The increment
// |b - r s|^2 separates into in-phase and quadrature terms, so each axis is
// ordered by a zigzag around the centre and the 2-D order is merged through
// a frontier of at most sqrt(M) + 1 cells, small enough for a linear scan.
struct SphereDetector::Children {
  struct Node {
    double inc;
    int label;
    int i, j;
  };
  std::array<std::pair<double, int>, 16> ax{}, ay{};
  std::array<Node, 17> front{};
  int size = 0;
  int best = 0;
  int n = 0;
  double base = 0.0, scale = 0.0;
  const Grid* grid = nullptr;

  static bool before(const Node& a, const Node& b) noexcept {
    return a.inc < b.inc || (a.inc == b.inc && a.label < b.label);
  }

  static void order_axis(const std::vector<double>& lv, double u, std::array<std::pair<double, int>, 16>& out) {
    const int n = static_cast<int>(lv.size());
    int hi = static_cast<int>(std::lower_bound(lv.begin(), lv.end(), u) - lv.begin());
    int lo = hi - 1;
    for (int k = 0; k < n; ++k) {
      const double dl = lo >= 0 ? (u - lv[static_cast<std::size_t>(lo)]) * (u - lv[static_cast<std::size_t>(lo)]) : kInf;
      const double dh = hi < n ? (lv[static_cast<std::size_t>(hi)] - u) * (lv[static_cast<std::size_t>(hi)] - u) : kInf;
      if (dl <= dh) out[static_cast<std::size_t>(k)] = {dl, lo--};
      else out[static_cast<std::size_t>(k)] = {dh, hi++};
    }
  }

  Node make(int i, int j) const noexcept {
    const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
    const int label = grid->label[static_cast<std::size_t>(ax[ui].second) * static_cast<std::size_t>(n) +
                                  static_cast<std::size_t>(ay[uj].second)];
    return {base + scale * (ax[ui].first + ay[uj].first), label, i, j};
  }

  void find_best() noexcept {
    best = 0;
    for (int t = 1; t < size; ++t)
      if (before(front[static_cast<std::size_t>(t)], front[static_cast<std::size_t>(best)])) best = t;
  }

  void reset(const Grid& g, cd b, double rii) {
    grid = &g;
    n = static_cast<int>(g.levels.size());
    if (rii > 0.0) {
      const cd u = b / rii;
      base = 0.0;
      scale = rii * rii;
      order_axis(g.levels, u.real(), ax);
      order_axis(g.levels, u.imag(), ay);
    } else {
      // Degenerate level: every child costs |b|^2.
      base = std::norm(b);
      scale = 0.0;
      order_axis(g.levels, 0.0, ax);
      order_axis(g.levels, 0.0, ay);
    }
    front[0] = make(0, 0);
    size = 1;
    best = 0;
  }

  // Every child as (increment, label), unordered; same arithmetic as make().
  template <class F>
  void each(F&& f) const {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const Node c = make(i, j);
        f(c.inc, c.label);
      }
  }

  bool empty() const noexcept { return size == 0; }
  const Node& top() const noexcept { return front[static_cast<std::size_t>(best)]; }
  void clear() noexcept { size = 0; }

  void pop() {
    const Node t = front[static_cast<std::size_t>(best)];
    front[static_cast<std::size_t>(best)] = front[static_cast<std::size_t>(--size)];
    if (t.j + 1 < n) front[static_cast<std::size_t>(size++)] = make(t.i, t.j + 1);
    if (t.j == 0 && t.i + 1 < n) front[static_cast<std::size_t>(size++)] = make(t.i + 1, 0);
    find_best();
  }
};

CVec SphereDetector::rotate(const CVec& y, double& residual) const {
  if (y.size() != h_.rows()) fail(ErrorCode::DimMismatch, "detector: observation length differs from antenna count");
  CVec z = q_.adjoint() * y;
  residual = std::max(0.0, y.squaredNorm() - z.squaredNorm());
  return z;
}

// Shared depth-first machinery. Level i holds stream i; the root is K-1.
struct SphereDetector::Search {
  const SphereDetector& det;
  const CVec& z;
  int k;
  std::vector<int> labels;                                 // current path
  std::vector<double> pm;                                  // pm[i]: metric of levels >= i
  std::vector<Children> kids;                              // unvisited children per level
  std::size_t examined = 0;

  Search(const SphereDetector& d, const CVec& zz)
      : det(d), z(zz), k(static_cast<int>(d.layers_.size())),
        labels(static_cast<std::size_t>(k), 0), pm(static_cast<std::size_t>(k) + 1, 0.0),
        kids(static_cast<std::size_t>(k)) {}

  // Children of level i given labels at levels > i.
  void expand(int i) {
    const auto ui = static_cast<std::size_t>(i);
    cd b = z(i);
    for (int j = i + 1; j < k; ++j)
      b -= det.r_(i, j) * det.layers_[static_cast<std::size_t>(j)]->point(labels[static_cast<std::size_t>(j)]);
    kids[ui].reset(det.grids_[ui], b, det.r_(i, i).real());
  }

  // Depth-first walk of the subtree below `root_level + 1`'s fixed labels.
  // on_leaf(metric) returns nothing; bound() gives the pruning threshold;
  // budget caps visited nodes (0 = unbounded).
  template <class Bound, class Leaf>
  void run(int root_level, Bound&& bound, Leaf&& on_leaf, std::size_t budget) {
    if (root_level < 0) return;
    std::size_t used = 0;
    int level = root_level;
    expand(level);
    while (true) {
      const auto ul = static_cast<std::size_t>(level);
      bool descend = false;
      if (!kids[ul].empty() && (budget == 0 || used < budget)) {
        const double inc = kids[ul].top().inc;
        const int label = kids[ul].top().label;
        const double m = pm[ul + 1] + inc;
        const double limit = bound();
        if (!(m > limit) || metric_tied(m, limit)) {
          kids[ul].pop();
          ++used;
          ++examined;
          labels[ul] = label;
          pm[ul] = m;
          if (level == 0)
            on_leaf(m);
          else
            descend = true;
        } else {
          kids[ul].clear();  // remaining siblings are no better
        }
      } else {
        if (level == root_level) return;
        ++level;
        continue;
      }
      if (descend) {
        --level;
        expand(level);
      }
    }
  }
};

DetectionResult SphereDetector::hard(const CVec& y) const {
  double residual = 0.0;
  const CVec z = rotate(y, residual);
  Search s(*this, z);
  const int k = s.k;
  double best = kInf;
  std::vector<int> best_labels(static_cast<std::size_t>(k), 0);

  s.run(k - 1, [&] { return best; },
        [&](double m) {
          const bool tied = metric_tied(m, best);
          if (!tied && m < best) {
            best = m;
            best_labels = s.labels;
          } else if (tied && labels_less(s.labels, best_labels)) {
            best = std::min(best, m);
            best_labels = s.labels;
          }
        },
        0);

  DetectionResult out;
  out.hard = best_labels;
  out.metric = direct_metric(y, h_, layers_, best_labels);
  out.examined = s.examined;
  out.llr.clear();
  return out;
}

DetectionResult SphereDetector::soft(const CVec& y, double noise_var, int n_pe, double clip,
                                     int node_budget) const {
  if (n_pe < 1) throw std::invalid_argument("sphere_soft: n_pe must be >= 1");
  if (!(noise_var > 0.0)) throw std::invalid_argument("sphere_soft: noise variance must be > 0");

  DetectionResult ml = hard(y);
  double residual = 0.0;
  const CVec z = rotate(y, residual);
  const int k = static_cast<int>(layers_.size());

  // Running per-bit minima over the pooled candidate list.
  std::vector<std::size_t> offset(static_cast<std::size_t>(k) + 1, 0);
  for (int i = 0; i < k; ++i)
    offset[static_cast<std::size_t>(i) + 1] =
        offset[static_cast<std::size_t>(i)] + static_cast<std::size_t>(layers_[static_cast<std::size_t>(i)]->bits_per_symbol());
  std::vector<double> min0(offset.back(), kInf), min1(offset.back(), kInf);
  auto pool = [&](std::span<const int> labels, double metric) {
    for (int i = 0; i < k; ++i) {
      const Constellation& c = *layers_[static_cast<std::size_t>(i)];
      const int lab = labels[static_cast<std::size_t>(i)];
      for (int b = 0; b < c.bits_per_symbol(); ++b) {
        const std::size_t at = offset[static_cast<std::size_t>(i)] + static_cast<std::size_t>(b);
        double& slot = c.label_bit(lab, b) ? min1[at] : min0[at];
        slot = std::min(slot, metric);
      }
    }
  };
  // ML metric in the rotated domain so all candidates share one reference.
  const double ml_rot = std::max(0.0, ml.metric - residual);
  pool(ml.hard, ml_rot);

  // Root prefixes: shallowest depth whose prefix count reaches n_pe.
  int depth = 0;
  std::size_t count = 1;
  while (depth < k && count < static_cast<std::size_t>(n_pe)) {
    count *= static_cast<std::size_t>(layers_[static_cast<std::size_t>(k - 1 - depth)]->order());
    ++depth;
  }
  // Prefix labels live in one flat buffer, `depth` entries each (streams k-depth .. k-1).
  struct Prefix {
    double pm;
    std::size_t at;
  };
  std::vector<Prefix> prefixes;
  std::vector<int> prefix_labels;
  prefixes.reserve(count);
  prefix_labels.reserve(count * static_cast<std::size_t>(depth));
  const int stop = k - depth;
  Search s(*this, z);
  {
    std::vector<std::vector<std::pair<double, int>>> lists(static_cast<std::size_t>(depth));
    std::size_t examined_prefix = 0;
    // Recursive enumeration over the top `depth` levels.
    auto rec = [&](auto&& self, int level) -> void {
      if (level < stop) {
        prefixes.push_back({s.pm[static_cast<std::size_t>(stop)], prefix_labels.size()});
        prefix_labels.insert(prefix_labels.end(), s.labels.begin() + stop, s.labels.end());
        return;
      }
      s.expand(level);
      auto& list = lists[static_cast<std::size_t>(level - stop)];
      list.clear();
      s.kids[static_cast<std::size_t>(level)].each([&](double inc, int label) { list.emplace_back(inc, label); });
      for (const auto& [inc, label] : list) {
        ++examined_prefix;
        s.labels[static_cast<std::size_t>(level)] = label;
        s.pm[static_cast<std::size_t>(level)] = s.pm[static_cast<std::size_t>(level) + 1] + inc;
        self(self, level - 1);
      }
    };
    rec(rec, k - 1);
    ml.examined += examined_prefix;
  }
  auto labels_of = [&](const Prefix& p) {
    return std::span<const int>(prefix_labels.data() + p.at, static_cast<std::size_t>(depth));
  };
  const std::size_t keep = std::min(prefixes.size(), static_cast<std::size_t>(n_pe));
  auto prefix_less = [&](const Prefix& a, const Prefix& b) {
    if (a.pm != b.pm) return a.pm < b.pm;
    return labels_less(labels_of(a), labels_of(b));
  };
  const auto mid = prefixes.begin() + static_cast<std::ptrdiff_t>(keep);
  if (mid != prefixes.end()) std::nth_element(prefixes.begin(), mid, prefixes.end(), prefix_less);
  std::sort(prefixes.begin(), mid, prefix_less);
  prefixes.resize(keep);

  const double slack = clip * noise_var;
  for (const Prefix& p : prefixes) {
    const auto pl = labels_of(p);
    std::copy(pl.begin(), pl.end(), s.labels.begin() + stop);
    s.pm[static_cast<std::size_t>(stop)] = p.pm;
    if (stop == 0) {
      pool(s.labels, p.pm);
      continue;
    }
    double pe_best = kInf;
    s.run(stop - 1, [&] { return pe_best + slack; },
          [&](double m) {
            pe_best = std::min(pe_best, m);
            pool(s.labels, m);
          },
          static_cast<std::size_t>(node_budget));
  }
  ml.examined += s.examined;

  ml.llr.resize(offset.back());
  for (std::size_t i = 0; i < offset.back(); ++i) {
    double v;
    if (min1[i] == kInf)
      v = clip;
    else if (min0[i] == kInf)
      v = -clip;
    else
      v = (min1[i] - min0[i]) / noise_var;
    ml.llr[i] = std::clamp(v, -clip, clip);
  }
  return ml;
}

DetectionResult sphere_hard(const CVec& y, const CMat& h, const Constellation& c) {
  const auto layers = uniform_layers(c, h.cols());
  return SphereDetector(h, layers).hard(y);
}

DetectionResult sphere_soft(const CVec& y, const CMat& h, double noise_var,
                            const Constellation& c, int n_pe, double clip, int node_budget) {
  const auto layers = uniform_layers(c, h.cols());
  return SphereDetector(h, layers).soft(y, noise_var, n_pe, clip, node_budget);
}

}  // namespace nlphy
