#include "nlphy/coding.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <sstream>

#include "nlphy/error.hpp"

namespace nlphy {

std::uint16_t crc16_ccitt(std::span<const std::uint8_t> bits) {
  std::uint16_t crc = 0xFFFF;
  for (std::uint8_t b : bits) {
    const bool top = (crc & 0x8000u) != 0;
    crc = static_cast<std::uint16_t>(crc << 1);
    if (top != ((b & 1u) != 0)) crc ^= 0x1021u;
  }
  return crc;
}

namespace {

constexpr int kStates = 1 << (kConstraintLength - 1);
constexpr std::array<unsigned, 3> kGenerators = {0133, 0171, 0165};

// Keep-masks over the 3 mother outputs for each input position in one
// puncturing period.
struct Puncture {
  int period;
  std::array<std::array<bool, 3>, 5> keep;
};

const Puncture& puncture_for(CodeRate r) {
  static const Puncture p13{1, {{{true, true, true}}}};
  static const Puncture p12{1, {{{true, true, false}}}};
  static const Puncture p23{2, {{{true, true, false}, {true, false, false}}}};
  static const Puncture p34{3, {{{true, true, false}, {true, false, false}, {false, true, false}}}};
  static const Puncture p56{5,
                            {{{true, true, false},
                              {true, false, false},
                              {false, true, false},
                              {true, false, false},
                              {false, true, false}}}};
  switch (r) {
    case CodeRate::R1_3: return p13;
    case CodeRate::R1_2: return p12;
    case CodeRate::R2_3: return p23;
    case CodeRate::R3_4: return p34;
    case CodeRate::R5_6: return p56;
  }
  return p13;
}

inline int parity(unsigned x) { return __builtin_parity(x); }

// Output bits for a register holding (input << 6) | state.
inline std::array<int, 3> branch_bits(unsigned reg) {
  return {parity(reg & kGenerators[0]), parity(reg & kGenerators[1]),
          parity(reg & kGenerators[2])};
}

}  // namespace

std::size_t punctured_length(std::size_t n_input, CodeRate rate) {
  const Puncture& p = puncture_for(rate);
  std::size_t n = 0;
  for (std::size_t i = 0; i < n_input; ++i) {
    const auto& keep = p.keep[i % static_cast<std::size_t>(p.period)];
    n += static_cast<std::size_t>(keep[0]) + keep[1] + keep[2];
  }
  return n;
}

std::size_t payload_capacity(std::size_t n_coded, CodeRate rate) {
  const std::size_t overhead = kCrcBits + kTailBits;
  // Upper bound from the rate, then walk down to the exact fit.
  std::size_t guess = static_cast<std::size_t>(static_cast<double>(n_coded) * rate_value(rate)) + 8;
  while (guess > overhead && punctured_length(guess, rate) > n_coded) --guess;
  return guess > overhead ? guess - overhead : 0;
}

std::vector<std::uint8_t> conv_encode_mother(std::span<const std::uint8_t> input) {
  std::vector<std::uint8_t> out;
  out.reserve(input.size() * 3);
  unsigned state = 0;
  for (std::uint8_t b : input) {
    const unsigned reg = (static_cast<unsigned>(b & 1u) << (kConstraintLength - 1)) | state;
    for (int bit : branch_bits(reg)) out.push_back(static_cast<std::uint8_t>(bit));
    state = reg >> 1;
  }
  return out;
}

std::vector<std::uint8_t> encode(const TransportBlock& tb, CodeRate rate, std::size_t n_coded) {
  const std::size_t n_input = tb.payload.size() + kCrcBits + kTailBits;
  const std::size_t n_punct = punctured_length(n_input, rate);
  if (tb.payload.empty() || n_punct > n_coded) {
    std::ostringstream os;
    os << "encode: payload of " << tb.payload.size() << " bits does not fit " << n_coded
       << " coded bits";
    fail(ErrorCode::LengthMismatch, os.str());
  }
  std::vector<std::uint8_t> input(tb.payload);
  const std::uint16_t crc = crc16_ccitt(tb.payload);
  for (int i = kCrcBits - 1; i >= 0; --i) input.push_back(static_cast<std::uint8_t>((crc >> i) & 1u));
  input.insert(input.end(), kTailBits, 0);

  const std::vector<std::uint8_t> mother = conv_encode_mother(input);
  const Puncture& p = puncture_for(rate);
  std::vector<std::uint8_t> punct;
  punct.reserve(n_punct);
  for (std::size_t i = 0; i < n_input; ++i) {
    const auto& keep = p.keep[i % static_cast<std::size_t>(p.period)];
    for (int j = 0; j < 3; ++j)
      if (keep[static_cast<std::size_t>(j)]) punct.push_back(mother[3 * i + static_cast<std::size_t>(j)]);
  }
  std::vector<std::uint8_t> out(n_coded);
  for (std::size_t i = 0; i < n_coded; ++i) out[i] = punct[i % n_punct];
  return out;
}

DecodeResult decode(std::span<const double> llrs, CodeRate rate, std::size_t payload_bits) {
  const std::size_t n_input = payload_bits + kCrcBits + kTailBits;
  const std::size_t n_punct = punctured_length(n_input, rate);
  if (payload_bits == 0 || n_punct > llrs.size()) {
    std::ostringstream os;
    os << "decode: " << llrs.size() << " LLRs cannot carry a " << payload_bits << "-bit payload";
    fail(ErrorCode::LengthMismatch, os.str());
  }
  // Fold cyclic repetitions back onto the punctured codeword.
  std::vector<double> punct(n_punct, 0.0);
  for (std::size_t i = 0; i < llrs.size(); ++i) punct[i % n_punct] += llrs[i];

  // Depuncture: erased mother bits get LLR 0.
  const Puncture& p = puncture_for(rate);
  std::vector<double> mother(3 * n_input, 0.0);
  {
    std::size_t k = 0;
    for (std::size_t i = 0; i < n_input; ++i) {
      const auto& keep = p.keep[i % static_cast<std::size_t>(p.period)];
      for (std::size_t j = 0; j < 3; ++j)
        if (keep[j]) mother[3 * i + j] = punct[k++];
    }
  }

  // Branch output of (state, input bit) as a 3-bit index into the per-step correlations.
  std::array<std::array<std::uint8_t, 2>, kStates> out_idx{};
  for (unsigned s = 0; s < kStates; ++s)
    for (unsigned b = 0; b < 2; ++b) {
      const auto bits = branch_bits((b << (kConstraintLength - 1)) | s);
      out_idx[s][b] = static_cast<std::uint8_t>((bits[0] ? 4 : 0) | (bits[1] ? 2 : 0) | (bits[2] ? 1 : 0));
    }

  // Unreached states sit far below any reachable metric, so they never win a comparison.
  constexpr double unreached = -1e300;
  std::array<double, kStates> metric;
  std::array<double, kStates> next;
  metric.fill(unreached);
  metric[0] = 0.0;
  // Survivor decisions: for each step and next state, which predecessor won.
  std::vector<std::uint8_t> decision(n_input * kStates);

  for (std::size_t t = 0; t < n_input; ++t) {
    const double* l = &mother[3 * t];
    // Bit 0 maps to +1, bit 1 to -1.
    std::array<double, 8> corr;
    for (unsigned o = 0; o < 8; ++o)
      corr[o] = ((o & 4) ? -l[0] : l[0]) + ((o & 2) ? -l[1] : l[1]) + ((o & 1) ? -l[2] : l[2]);
    // next state ns = (b << 5) | (s >> 1); predecessors s = ((ns << 1) & 63) | lsb.
    for (unsigned ns = 0; ns < kStates; ++ns) {
      const unsigned b = ns >> (kConstraintLength - 2);
      const unsigned s0 = (ns << 1) & (kStates - 1);
      const double m0 = metric[s0] + corr[out_idx[s0][b]];
      const double m1 = metric[s0 | 1] + corr[out_idx[s0 | 1][b]];
      const bool pick1 = m1 > m0;
      next[ns] = pick1 ? m1 : m0;
      decision[t * kStates + ns] = static_cast<std::uint8_t>(pick1);
    }
    metric = next;
  }

  // Terminated trellis ends in state 0.
  std::vector<std::uint8_t> input(n_input);
  unsigned state = 0;
  for (std::size_t t = n_input; t-- > 0;) {
    input[t] = static_cast<std::uint8_t>(state >> (kConstraintLength - 2));
    const unsigned lsb = decision[t * kStates + state];
    state = ((state << 1) & (kStates - 1)) | lsb;
  }

  DecodeResult out;
  out.payload.assign(input.begin(), input.begin() + static_cast<std::ptrdiff_t>(payload_bits));
  std::uint16_t rx_crc = 0;
  for (std::size_t i = 0; i < kCrcBits; ++i)
    rx_crc = static_cast<std::uint16_t>((rx_crc << 1) | input[payload_bits + i]);
  out.crc_ok = rx_crc == crc16_ccitt(out.payload);
  return out;
}

}  // namespace nlphy
