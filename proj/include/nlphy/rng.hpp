#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace nlphy {

/// Independent RNG stream for one simulation entity.
///
/// Streams are keyed by (master seed, entity tag, index) so the draws of one
/// entity never depend on how many numbers another entity consumed.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t tag, std::uint64_t index = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                      static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(tag),
                      static_cast<std::uint32_t>(tag >> 32),
                      static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32)};
    engine_.seed(seq);
  }

  explicit RngStream(std::uint64_t seed) : RngStream(seed, 0, 0) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal() { return normal_(engine_); }

  /// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
  std::complex<double> cgauss(double variance = 1.0) {
    const double s = std::sqrt(variance / 2.0);
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return {s * re, s * im};
  }

  int bit() { return static_cast<int>(engine_() >> 63); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Entity tags for stream derivation.
namespace stream {
inline constexpr std::uint64_t kChannel = 1;
inline constexpr std::uint64_t kAging = 2;
inline constexpr std::uint64_t kNoise = 3;
inline constexpr std::uint64_t kImpairment = 4;
inline constexpr std::uint64_t kCalibration = 5;
inline constexpr std::uint64_t kPayloadUl = 6;
inline constexpr std::uint64_t kPayloadDl = 7;
inline constexpr std::uint64_t kSrsNoise = 8;
}  // namespace stream

}  // namespace nlphy
