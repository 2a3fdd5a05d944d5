#include "nlphy/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "nlphy/error.hpp"

namespace nlphy {

ResourceGrid::ResourceGrid(int n_rb, int n_layers, SubframeRole role, double dmrs_boost_db)
    : n_rb_(n_rb), n_layers_(n_layers), role_(role), boost_db_(dmrs_boost_db) {
  if (n_layers > kMaxLayers) {
    std::ostringstream os;
    os << "build_grid: " << n_layers << " layers exceeds the orthogonal DMRS limit of "
       << kMaxLayers;
    fail(ErrorCode::TooManyLayers, os.str());
  }
  if (n_rb < 1 || n_layers < 1) throw std::invalid_argument("build_grid: n_rb and n_layers must be >= 1");

  const std::size_t cells = static_cast<std::size_t>(n_subcarriers()) * kSymbolsPerSubframe;
  kinds_.assign(cells, CellKind::Empty);
  owners_.assign(cells, -1);

  auto is_in = [](int sym, const auto& set) {
    return std::find(std::begin(set), std::end(set), sym) != std::end(set);
  };

  for (int sym = 0; sym < kSymbolsPerSubframe; ++sym) {
    for (int sc = 0; sc < n_subcarriers(); ++sc) {
      const std::size_t i = index(sc, sym);
      if (role == SubframeRole::Special) {
        if (is_in(sym, kSrsSymbols)) {
          kinds_[i] = CellKind::Srs;
          owners_[i] = static_cast<std::int8_t>((sc % kSubcarriersPerRb) % n_layers);
        }
      } else if (is_in(sym, kDmrsSymbols)) {
        kinds_[i] = CellKind::Dmrs;
        owners_[i] = static_cast<std::int8_t>((sc % kSubcarriersPerRb) % n_layers);
      } else {
        kinds_[i] = CellKind::Data;
      }
    }
  }

  data_per_rb_ = role == SubframeRole::Special
                     ? 0
                     : kSubcarriersPerRb * (kSymbolsPerSubframe - static_cast<int>(std::size(kDmrsSymbols)));

  // Rebalance so that total per-layer power stays at one unit per entry.
  if (role == SubframeRole::Special) {
    data_power_ = 1.0;
    pilot_power_ = 1.0;
  } else {
    const double boost = dmrs_boost_ratio(dmrs_boost_db);
    const double n_data = static_cast<double>(data_per_rb_) * n_rb_ * n_layers_;
    const double n_pilot = static_cast<double>(std::size(kDmrsSymbols)) * n_subcarriers();
    data_power_ = (n_data + n_pilot) / (n_data + boost * n_pilot);
    pilot_power_ = boost * data_power_;
  }
}

double ResourceGrid::total_power() const {
  double total = 0.0;
  for (CellKind k : kinds_) {
    if (k == CellKind::Data)
      total += data_power_ * n_layers_;
    else if (k == CellKind::Dmrs || k == CellKind::Srs)
      total += pilot_power_;
  }
  return total;
}

double ResourceGrid::power_budget() const {
  double n = 0.0;
  for (CellKind k : kinds_) {
    if (k == CellKind::Data)
      n += n_layers_;
    else if (k != CellKind::Empty)
      n += 1.0;
  }
  return n;
}

int ResourceGrid::pilot_cells_per_rb(int layer) const {
  int n = 0;
  for (int sym = 0; sym < kSymbolsPerSubframe; ++sym)
    for (int sc = 0; sc < kSubcarriersPerRb; ++sc)
      if (kind(sc, sym) != CellKind::Data && kind(sc, sym) != CellKind::Empty &&
          owner(sc, sym) == layer)
        ++n;
  return n;
}

double dmrs_boost_ratio(double boost_db) {
  for (int n = 1; n <= kMaxLayers; ++n)
    if (std::abs(boost_db - 10.0 * std::log10(static_cast<double>(n))) <= 0.025) return n;
  return std::pow(10.0, boost_db / 10.0);
}

ResourceGrid build_grid(int n_rb, int n_layers, SubframeRole role, double dmrs_boost_db) {
  return ResourceGrid(n_rb, n_layers, role, dmrs_boost_db);
}

}  // namespace nlphy
