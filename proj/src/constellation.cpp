#include "nlphy/constellation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "nlphy/error.hpp"

namespace nlphy {

namespace {

// Gray PAM level for axis bits c0..c_{m-1} (MSB first):
// (1-2c0) * (2^{m-1} - (1-2c1) * (2^{m-2} - (1-2c2) * ...)).
int pam_level(int axis_bits, int m) {
  int level = 1;
  for (int i = m - 1; i >= 1; --i) {
    const int c = (axis_bits >> (m - 1 - i)) & 1;
    level = (1 << (m - i)) - (1 - 2 * c) * level;
  }
  const int c0 = (axis_bits >> (m - 1)) & 1;
  return (1 - 2 * c0) * level;
}

}  // namespace

Constellation::Constellation(int order) : order_(order) {
  if (order != 4 && order != 16 && order != 64)
    throw std::invalid_argument("Constellation: order must be 4, 16 or 64");
  bits_ = order == 4 ? 2 : order == 16 ? 4 : 6;
  const int m = bits_ / 2;
  const double norm = std::sqrt(2.0 * (order - 1) / 3.0);
  points_.resize(static_cast<std::size_t>(order));
  for (int label = 0; label < order; ++label) {
    int ib = 0;
    int qb = 0;
    for (int i = 0; i < bits_; ++i) {
      const int b = (label >> (bits_ - 1 - i)) & 1;
      if (i % 2 == 0)
        ib = (ib << 1) | b;
      else
        qb = (qb << 1) | b;
    }
    points_[static_cast<std::size_t>(label)] =
        cd(pam_level(ib, m) / norm, pam_level(qb, m) / norm);
  }
  spacing_ = 2.0 / norm;
  max_coord_ = ((1 << m) - 1) / norm;
}

const Constellation& Constellation::qam(int order) {
  static const Constellation c4(4);
  static const Constellation c16(16);
  static const Constellation c64(64);
  switch (order) {
    case 4: return c4;
    case 16: return c16;
    case 64: return c64;
    default: throw std::invalid_argument("Constellation::qam: order must be 4, 16 or 64");
  }
}

int Constellation::nearest(cd y) const noexcept {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int l = 0; l < order_; ++l) {
    const double d = std::norm(y - points_[static_cast<std::size_t>(l)]);
    if (d < best_d) {
      best_d = d;
      best = l;
    }
  }
  return best;
}

std::vector<cd> modulate(std::span<const std::uint8_t> bits, const Constellation& c) {
  const auto k = static_cast<std::size_t>(c.bits_per_symbol());
  if (bits.size() % k != 0) {
    std::ostringstream os;
    os << "modulate: " << bits.size() << " bits not divisible by " << k;
    fail(ErrorCode::LengthMismatch, os.str());
  }
  std::vector<cd> out(bits.size() / k);
  for (std::size_t s = 0; s < out.size(); ++s) {
    int label = 0;
    for (std::size_t i = 0; i < k; ++i) label = (label << 1) | (bits[s * k + i] & 1);
    out[s] = c.point(label);
  }
  return out;
}

std::vector<std::uint8_t> hard_demap(std::span<const cd> symbols, const Constellation& c) {
  const int k = c.bits_per_symbol();
  std::vector<std::uint8_t> out;
  out.reserve(symbols.size() * static_cast<std::size_t>(k));
  for (const cd& y : symbols) {
    const int label = c.nearest(y);
    for (int i = 0; i < k; ++i) out.push_back(static_cast<std::uint8_t>(c.label_bit(label, i)));
  }
  return out;
}

namespace {

template <class Dist>
void maxlog_from_distances(const Constellation& c, double noise_var, double clip,
                           std::span<double> out, Dist&& dist) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const int k = c.bits_per_symbol();
  double min0[6] = {inf, inf, inf, inf, inf, inf};
  double min1[6] = {inf, inf, inf, inf, inf, inf};
  for (int l = 0; l < c.order(); ++l) {
    const double d = dist(c.point(l));
    for (int i = 0; i < k; ++i) {
      if (c.label_bit(l, i))
        min1[i] = std::min(min1[i], d);
      else
        min0[i] = std::min(min0[i], d);
    }
  }
  for (int i = 0; i < k; ++i) {
    const double llr = (min1[i] - min0[i]) / noise_var;
    out[static_cast<std::size_t>(i)] = std::clamp(llr, -clip, clip);
  }
}

}  // namespace

void demap_llr(cd y, cd h_eff, const Constellation& c, double noise_var, double clip,
               std::span<double> out) {
  maxlog_from_distances(c, noise_var, clip, out,
                        [&](const cd& s) { return std::norm(y - h_eff * s); });
}

std::vector<double> demap_llr(cd y, cd h_eff, const Constellation& c, double noise_var,
                              double clip) {
  std::vector<double> out(static_cast<std::size_t>(c.bits_per_symbol()));
  demap_llr(y, h_eff, c, noise_var, clip, out);
  return out;
}

void demap_llr_modulo(cd r, const Constellation& c, double tau, double noise_var, double clip,
                      std::span<double> out) {
  auto wrap = [tau](double d) {
    d = std::fmod(std::abs(d), tau);
    return std::min(d, tau - d);
  };
  maxlog_from_distances(c, noise_var, clip, out, [&](const cd& s) {
    const double dr = wrap(r.real() - s.real());
    const double di = wrap(r.imag() - s.imag());
    return dr * dr + di * di;
  });
}

double rate_value(CodeRate r) noexcept {
  switch (r) {
    case CodeRate::R1_3: return 1.0 / 3.0;
    case CodeRate::R1_2: return 1.0 / 2.0;
    case CodeRate::R2_3: return 2.0 / 3.0;
    case CodeRate::R3_4: return 3.0 / 4.0;
    case CodeRate::R5_6: return 5.0 / 6.0;
  }
  return 0.0;
}

std::string rate_name(CodeRate r) {
  switch (r) {
    case CodeRate::R1_3: return "1/3";
    case CodeRate::R1_2: return "1/2";
    case CodeRate::R2_3: return "2/3";
    case CodeRate::R3_4: return "3/4";
    case CodeRate::R5_6: return "5/6";
  }
  return "?";
}

McsTable::McsTable() {
  const std::pair<int, CodeRate> ladder[] = {
      {4, CodeRate::R1_3},  {4, CodeRate::R1_2},  {4, CodeRate::R2_3},  {4, CodeRate::R3_4},
      {4, CodeRate::R5_6},  {16, CodeRate::R1_2}, {16, CodeRate::R2_3}, {16, CodeRate::R3_4},
      {16, CodeRate::R5_6}, {64, CodeRate::R2_3}, {64, CodeRate::R3_4}, {64, CodeRate::R5_6},
  };
  for (const auto& [m, r] : ladder)
    entries_.push_back({m, r, rate_value(r) * std::log2(static_cast<double>(m))});
}

const McsTable& McsTable::standard() {
  static const McsTable table;
  return table;
}

std::string McsTable::to_csv() const {
  std::ostringstream os;
  os << "index,M,rate,efficiency\n";
  char buf[32];
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6f", entries_[i].efficiency);
    os << i << ',' << entries_[i].order << ',' << rate_name(entries_[i].rate) << ',' << buf
       << '\n';
  }
  return os.str();
}

}  // namespace nlphy
