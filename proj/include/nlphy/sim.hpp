#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "nlphy/channel.hpp"
#include "nlphy/coding.hpp"
#include "nlphy/csi.hpp"
#include "nlphy/grid.hpp"
#include "nlphy/link.hpp"

namespace nlphy {

enum class Direction { Downlink, Uplink };
enum class DetectorKind { ZF, MMSE, Sphere };
enum class PrecoderKind { ZF, VP };

std::string to_string(Direction d);
std::string to_string(DetectorKind d);
std::string to_string(PrecoderKind p);
std::string to_string(SrsPowerMode m);

inline constexpr int kSubframesPerFrame = 10;
inline constexpr int kHarqProcesses = 8;
/// Bandwidth of one resource block in Hz and the subframe duration in s.
inline constexpr double kRbBandwidthHz = 180e3;
inline constexpr double kSubframeSeconds = 1e-3;

/// LTE TDD uplink/downlink configuration 3.
SubframeRole subframe_role(int subframe_in_frame);

/// One simulated operating point.
struct SimConfig {
  int n_bs = 4;
  int k = 4;
  int n_rb = 25;
  int frames = 100;
  DetectorKind detector = DetectorKind::Sphere;
  PrecoderKind precoder = PrecoderKind::VP;
  int n_pe_ul = 40;
  int n_pe_dl = 32;
  int pe_node_budget = 64;   ///< soft-detector nodes per PE
  double snr_db = 12.0;
  double dmrs_boost_db = 0.0;  ///< downlink DMRS boost
  SrsPowerMode srs_mode = SrsPowerMode::Constant;
  int srs_window = 4;
  double rho = 0.99;           ///< Gauss-Markov coefficient per frame
  std::vector<double> pathloss_db;  ///< per UE (attenuation, >= 0); empty = 0 dB
  bool perfect_csi = false;
  bool noise = true;
  bool impairments = true;
  int calibration_interval_frames = 100;
  double calibration_snr_db = 30.0;
  LinkParams link;
  int mcs_init = 4;
  int feedback_delay = 4;      ///< subframes
  int max_retx = kDefaultMaxRetx;
  double llr_clip = kDefaultLlrClip;
  std::uint64_t seed = 1;

  /// Throws ConfigError for inconsistent values.
  void validate() const;
};

/// Every data subframe serves all K UEs on all RBs as spatial layers.
struct Allocation {
  int n_layers = 0;
  std::vector<std::vector<int>> rbs;  ///< per UE
};
Allocation schedule(int k, int n_rb);

/// One transmission attempt of one UE in one data subframe.
struct SubframeRecord {
  std::int64_t frame = 0;
  int subframe = 0;  ///< index within the frame
  Direction direction = Direction::Downlink;
  int ue = 0;
  int mcs = 0;
  bool crc_ok = false;
  std::size_t bits_delivered = 0;
  int attempt = 0;   ///< 0 for a new transport block
};

/// One consumed ACK/NACK and its effect on link adaptation.
struct LinkEvent {
  std::int64_t frame = 0;
  int ue = 0;
  Direction direction = Direction::Downlink;
  Feedback outcome = Feedback::Ack;
  int mcs_before = 0;
  int mcs_after = 0;
  std::int64_t tx_subframe = 0;   ///< absolute subframe of the transmission
  std::int64_t rx_subframe = 0;   ///< absolute subframe in which it was consumed
};

struct DirectionStats {
  std::size_t attempts = 0;
  std::size_t errors = 0;
  std::size_t delivered_blocks = 0;
  std::size_t dropped_blocks = 0;
  std::size_t bits = 0;
  std::size_t subframes = 0;
  std::vector<std::size_t> ue_bits;

  double bler() const { return attempts ? static_cast<double>(errors) / static_cast<double>(attempts) : 0.0; }
};

struct Metrics {
  std::vector<SubframeRecord> records;
  std::vector<LinkEvent> events;
  DirectionStats dl, ul;
  std::int64_t subframes = 0;
  int n_rb = 0;
  /// Largest |mean per-stream data-cell power - 1| over downlink subframes.
  double power_deviation = 0.0;

  /// Delivered bits per subframe over both directions.
  double sum_goodput() const;
  /// bit/s/Hz over the scheduled bandwidth in that direction's subframes.
  double spectral_efficiency(Direction d) const;
  double sum_spectral_efficiency() const;
};

/// 100 * (a - b) / b on sum goodput.
double relative_gain(const Metrics& a, const Metrics& b);
double relative_gain(double a, double b);

/// Deterministic TDD frame engine.
class Engine {
 public:
  explicit Engine(SimConfig cfg);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  /// Advance one subframe (absolute index must equal next_subframe()).
  void run_subframe();
  std::int64_t next_subframe() const noexcept { return now_; }
  const Metrics& metrics() const noexcept { return metrics_; }
  Metrics take_metrics() { return std::move(metrics_); }

  const SimConfig& config() const noexcept { return cfg_; }
  const LinkState& link_state(Direction d, int ue) const;

  struct Impl;

 private:
  SimConfig cfg_;
  std::int64_t now_ = 0;
  Metrics metrics_;
  std::unique_ptr<Impl> impl_;
};

/// Runs cfg.frames frames.
Metrics run_simulation(const SimConfig& cfg);

}  // namespace nlphy
