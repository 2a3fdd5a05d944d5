#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nlphy/constellation.hpp"

namespace nlphy {

/// CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF, no reflection, no xorout)
/// over a sequence of bits (one bit per byte, MSB first).
std::uint16_t crc16_ccitt(std::span<const std::uint8_t> bits);

struct TransportBlock {
  std::vector<std::uint8_t> payload;  ///< information bits, one per byte
  std::uint16_t crc16 = 0;
  int mcs = 0;
  int ue = 0;
  int arq_process = 0;

  /// Recompute crc16 from the payload.
  void seal() { crc16 = crc16_ccitt(payload); }
};

// Rate-1/3 mother code: constraint length 7, generators 133/171/165 (octal),
// terminated with 6 zero tail bits, punctured to the target rate. The
// punctured codeword is repeated cyclically to fill the allocation.
inline constexpr int kConstraintLength = 7;
inline constexpr int kTailBits = kConstraintLength - 1;
inline constexpr int kCrcBits = 16;

/// Number of transmitted bits per the punctured codeword for n_input trellis
/// inputs (payload + CRC + tail).
std::size_t punctured_length(std::size_t n_input, CodeRate rate);

/// Largest payload that fits n_coded channel bits at the given rate, or 0 when
/// not even one payload bit fits.
std::size_t payload_capacity(std::size_t n_coded, CodeRate rate);

/// Mother codeword (3 bits per trellis input, before puncturing).
std::vector<std::uint8_t> conv_encode_mother(std::span<const std::uint8_t> input);

/// Encode payload + CRC into exactly n_coded channel bits.
/// Throws LengthMismatch when the payload does not fit.
std::vector<std::uint8_t> encode(const TransportBlock& tb, CodeRate rate, std::size_t n_coded);

struct DecodeResult {
  std::vector<std::uint8_t> payload;
  bool crc_ok = false;
};

/// Soft Viterbi decode of n_coded LLRs (positive means bit 0) carrying a
/// payload of payload_bits. Throws LengthMismatch when the LLR count cannot
/// hold that payload.
DecodeResult decode(std::span<const double> llrs, CodeRate rate, std::size_t payload_bits);

}  // namespace nlphy
