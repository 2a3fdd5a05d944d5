#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nlphy/numerics.hpp"

namespace nlphy {

/// Gray-labelled square QAM with unit average energy.
///
/// Point index equals its bit label read MSB-first. Even label bits select
/// the in-phase level and odd bits the quadrature level, each axis carrying a
/// binary-reflected Gray PAM: for QPSK, bits "00" map to (1 + j)/sqrt(2).
class Constellation {
 public:
  explicit Constellation(int order);

  /// Shared instance for M in {4, 16, 64}.
  static const Constellation& qam(int order);

  int order() const noexcept { return order_; }
  int bits_per_symbol() const noexcept { return bits_; }
  std::span<const cd> points() const noexcept { return points_; }
  const cd& point(int label) const noexcept { return points_[static_cast<std::size_t>(label)]; }

  /// Bit i (0 = first transmitted) of a point label.
  int label_bit(int label, int i) const noexcept { return (label >> (bits_ - 1 - i)) & 1; }

  /// Minimum distance between distinct points.
  double min_spacing() const noexcept { return spacing_; }
  /// Largest coordinate magnitude (in-phase or quadrature) over all points.
  double max_coord() const noexcept { return max_coord_; }

  /// Nearest point label; ties resolve to the smaller label.
  int nearest(cd y) const noexcept;

 private:
  int order_;
  int bits_;
  double spacing_;
  double max_coord_;
  std::vector<cd> points_;
};

/// Map bits (0/1 bytes) onto symbols. Throws LengthMismatch when the bit count
/// is not a multiple of log2(M).
std::vector<cd> modulate(std::span<const std::uint8_t> bits, const Constellation& c);

/// Hard demapping by nearest point.
std::vector<std::uint8_t> hard_demap(std::span<const cd> symbols, const Constellation& c);

/// Default LLR saturation level.
inline constexpr double kDefaultLlrClip = 8.0;

/// Per-bit max-log LLRs of y = h_eff * s + n, positive meaning bit 0,
/// saturated to +-clip. Writes bits_per_symbol() values to out.
void demap_llr(cd y, cd h_eff, const Constellation& c, double noise_var, double clip,
               std::span<double> out);
std::vector<double> demap_llr(cd y, cd h_eff, const Constellation& c, double noise_var,
                              double clip);

/// Max-log LLRs for an already modulo-folded observation r of s + tau*l:
/// distances are taken to the nearest lattice image of each point.
void demap_llr_modulo(cd r, const Constellation& c, double tau, double noise_var, double clip,
                      std::span<double> out);

enum class CodeRate { R1_3, R1_2, R2_3, R3_4, R5_6 };

double rate_value(CodeRate r) noexcept;
std::string rate_name(CodeRate r);

struct McsEntry {
  int order;
  CodeRate rate;
  double efficiency;  ///< rate * log2(order), bits per symbol
};

/// Modulation and coding ladder with strictly increasing efficiency.
class McsTable {
 public:
  McsTable();
  static const McsTable& standard();

  std::size_t size() const noexcept { return entries_.size(); }
  const McsEntry& operator[](std::size_t i) const { return entries_.at(i); }
  std::span<const McsEntry> entries() const noexcept { return entries_; }

  /// CSV with header "index,M,rate,efficiency".
  std::string to_csv() const;

 private:
  std::vector<McsEntry> entries_;
};

}  // namespace nlphy
