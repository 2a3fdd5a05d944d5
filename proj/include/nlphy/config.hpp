#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nlphy/sim.hpp"

namespace nlphy {

/// Batch experiment description: one base operating point plus the value
/// lists that `run` (cartesian product of snr_db x dmrs_boost_db) and
/// `sweep` (one axis at a time) iterate over.
struct ExperimentConfig {
  std::string scenario = "default";
  SimConfig sim;  ///< snr_db / dmrs_boost_db / n_pe are set per point
  std::vector<double> snr_db{6.0, 9.0, 12.0, 15.0};
  std::vector<double> dmrs_boost_db{0.0};
  std::vector<int> sweep_n_pe{1, 8, 16, 32, 40};

  bool baseline_enabled = true;
  DetectorKind baseline_detector = DetectorKind::ZF;
  PrecoderKind baseline_precoder = PrecoderKind::ZF;

  void validate() const;
};

/// Strict parse: unknown keys, wrong types and out-of-range values throw
/// Error(ConfigError) naming the offending key.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved configuration (every key, defaults filled in) as
/// pretty-printed JSON; parse_config(resolved_json(c)) reproduces c.
std::string resolved_json(const ExperimentConfig& c);

}  // namespace nlphy
