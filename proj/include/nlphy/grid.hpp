#pragma once

#include <cstdint>
#include <vector>

namespace nlphy {

enum class CellKind : std::uint8_t { Empty, Data, Dmrs, Srs };
enum class SubframeRole : std::uint8_t { Downlink, Uplink, Special };

inline constexpr int kSubcarriersPerRb = 12;
inline constexpr int kSymbolsPerSubframe = 14;
inline constexpr int kMaxLayers = 8;

/// OFDM symbols carrying DMRS in DL/UL subframes and SRS in special subframes.
inline constexpr int kDmrsSymbols[] = {3, 10};
inline constexpr int kSrsSymbols[] = {12, 13};

/// Subframe resource layout with per-layer power levels.
///
/// Pilot cells (DMRS or SRS) are owned by one layer through a frequency comb
/// (subcarrier index modulo the layer count), so pilots of distinct layers
/// never share a cell. Data cells carry every layer.
class ResourceGrid {
 public:
  ResourceGrid(int n_rb, int n_layers, SubframeRole role, double dmrs_boost_db);

  int n_rb() const noexcept { return n_rb_; }
  int n_layers() const noexcept { return n_layers_; }
  int n_subcarriers() const noexcept { return n_rb_ * kSubcarriersPerRb; }
  int n_symbols() const noexcept { return kSymbolsPerSubframe; }
  SubframeRole role() const noexcept { return role_; }

  CellKind kind(int sc, int sym) const { return kinds_[index(sc, sym)]; }
  /// Owning layer of a pilot cell, -1 otherwise.
  int owner(int sc, int sym) const { return owners_[index(sc, sym)]; }

  /// Linear per-layer power on data cells after boost rebalancing.
  double data_power() const noexcept { return data_power_; }
  /// Linear per-layer power on the owning layer of a pilot cell.
  double pilot_power() const noexcept { return pilot_power_; }
  double dmrs_boost_db() const noexcept { return boost_db_; }

  /// Sum of per-layer powers over all occupied (layer, cell) entries.
  double total_power() const;
  /// Number of occupied (layer, cell) entries; the unboosted power budget.
  double power_budget() const;

  /// Data cells per layer inside one resource block.
  int data_cells_per_rb() const noexcept { return data_per_rb_; }
  /// Pilot cells owned by `layer` inside one resource block.
  int pilot_cells_per_rb(int layer) const;

 private:
  std::size_t index(int sc, int sym) const {
    return static_cast<std::size_t>(sym) * static_cast<std::size_t>(n_subcarriers()) +
           static_cast<std::size_t>(sc);
  }

  int n_rb_;
  int n_layers_;
  SubframeRole role_;
  double boost_db_;
  double data_power_ = 1.0;
  double pilot_power_ = 1.0;
  int data_per_rb_ = 0;
  std::vector<CellKind> kinds_;
  std::vector<std::int8_t> owners_;
};

/// Linear power ratio of a nominal DMRS boost in dB. Values within 0.025 dB
/// of 10*log10(n) for integer n in 1..8 are the standard's nominal labels
/// ("3 dB" for a doubling, "4.77 dB" for a tripling) and map to n exactly.
double dmrs_boost_ratio(double boost_db);

/// Throws TooManyLayers beyond kMaxLayers.
ResourceGrid build_grid(int n_rb, int n_layers, SubframeRole role, double dmrs_boost_db);

}  // namespace nlphy
