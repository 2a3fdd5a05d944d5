#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nlphy/config.hpp"
#include "nlphy/sim.hpp"

namespace nlphy {

enum class SweepAxis { Snr, Boost, NPe };

/// "snr", "boost" or "n_pe"; anything else throws ConfigError.
SweepAxis parse_axis(const std::string& name);
std::string to_string(SweepAxis a);

struct PointResult {
  std::string label;      ///< output subdirectory name
  double axis_value = 0;  ///< swept value (snr for run mode)
  SimConfig sim;          ///< fully resolved operating point
  Metrics main;
  std::optional<Metrics> baseline;  ///< same seeds, linear detector/precoder

  /// Sum-goodput gain of main over baseline in percent; 0 without baseline.
  double gain_pct() const;
};

struct ExperimentResult {
  std::string mode;  ///< "run" or "sweep"
  std::optional<SweepAxis> axis;
  std::vector<PointResult> points;
};

/// Operating points of `run`: snr_db x dmrs_boost_db, snr-major.
std::vector<SimConfig> run_points(const ExperimentConfig& cfg);
/// Operating points of a sweep; unswept lists contribute their first value.
std::vector<SimConfig> sweep_points(const ExperimentConfig& cfg, SweepAxis axis);

/// jobs <= 0 uses the hardware concurrency. Every point (and its baseline)
/// is an independent simulation; results are ordered by point index, so
/// the outcome does not depend on jobs.
ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs);
ExperimentResult run_sweep(const ExperimentConfig& cfg, SweepAxis axis, int jobs);

/// Aggregates and gains, without timestamps: identical inputs give
/// byte-identical text.
std::string summary_json(const ExperimentConfig& cfg, const ExperimentResult& r);

/// Writes summary.json, config.resolved.json, sweep.csv (sweep mode) and
/// per point <label>/metrics.csv, <label>/events.csv, plus the same two
/// files under <label>/baseline/ when a baseline was run.
void write_artifacts(const ExperimentConfig& cfg, const ExperimentResult& r,
                     const std::filesystem::path& out_dir);

/// Column orders of the CSV artifacts.
inline constexpr const char* kMetricsCsvHeader =
    "frame,subframe,direction,ue,mcs,crc_ok,bits_delivered,seed";
inline constexpr const char* kEventsCsvHeader =
    "frame,ue,direction,outcome,mcs_before,mcs_after,seed";
inline constexpr const char* kSweepCsvHeader =
    "axis,value,snr_db,dmrs_boost_db,n_pe_ul,n_pe_dl,seed,sum_goodput,sum_se,dl_se,ul_se,dl_bler,ul_bler,"
    "baseline_sum_goodput,baseline_sum_se,baseline_dl_se,baseline_ul_se,gain_pct";

std::string metrics_csv(const Metrics& m, std::uint64_t seed);
std::string events_csv(const Metrics& m, std::uint64_t seed);

}  // namespace nlphy
