#include <cmath>

#include "doctest.h"
#include "link_suite.hpp"
#include "nlphy/coding.hpp"
#include "nlphy/link.hpp"
#include "nlphy/rng.hpp"

using namespace nlphy;

TEST_CASE("on_feedback matches the counter rules exhaustively") {
  const testing::SuiteResult r = testing::run_link_suite();
  for (const std::string& f : r.failures) MESSAGE(f);
  CHECK(r.failures.empty());
  CHECK(r.cases > 4'000'000);
}

TEST_CASE("arq: first failure asks for a retransmission with the buffer populated") {
  ArqState s;
  const std::vector<double> a{1.0, -2.0, 0.5};
  CHECK(arq_step(s, false, a) == ArqDecision::Retransmit);
  CHECK(s.llr == a);
  CHECK(s.retx == 1);
}

TEST_CASE("arq: combined LLRs are element-wise sums") {
  ArqState s;
  const std::vector<double> a{1.0, -2.0, 0.5}, b{-0.25, 1.0, 3.0}, c{2.0, 2.0, -1.0};
  arq_step(s, false, a);
  arq_step(s, false, b);
  const std::vector<double> comb = s.combine(c);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(s.llr[i] == a[i] + b[i]);
    CHECK(comb[i] == a[i] + b[i] + c[i]);
  }
}

TEST_CASE("arq: drop after max_retx failed retransmissions, deliver clears") {
  ArqState s;
  const std::vector<double> a{1.0};
  CHECK(arq_step(s, false, a) == ArqDecision::Retransmit);
  CHECK(arq_step(s, false, a) == ArqDecision::Retransmit);
  CHECK(arq_step(s, false, a) == ArqDecision::Retransmit);
  CHECK(arq_step(s, false, a) == ArqDecision::Drop);
  CHECK(s.llr.empty());
  CHECK(s.retx == 0);
  arq_step(s, false, a);
  CHECK(arq_step(s, true, a) == ArqDecision::Deliver);
  CHECK(s.llr.empty());
  CHECK(s.retx == 0);
}

TEST_CASE("chase combining of two weak attempts beats a single attempt") {
  RngStream rng(1);
  const Constellation& c = Constellation::qam(4);
  const std::size_t n_coded = 192;
  const std::size_t payload = payload_capacity(n_coded, CodeRate::R1_2);
  const double nv = std::pow(10.0, 1.0 / 10.0);  // -1 dB per attempt
  int single = 0, combined = 0;
  for (int t = 0; t < 500; ++t) {
    TransportBlock tb;
    tb.payload.resize(payload);
    for (auto& b : tb.payload) b = static_cast<std::uint8_t>(rng.bit());
    const auto sym = modulate(encode(tb, CodeRate::R1_2, n_coded), c);
    std::vector<double> first, second;
    for (const cd& s : sym) {
      for (double l : demap_llr(s + rng.cgauss(nv), 1.0, c, nv, 1e9)) first.push_back(l);
      for (double l : demap_llr(s + rng.cgauss(nv), 1.0, c, nv, 1e9)) second.push_back(l);
    }
    ArqState arq;
    const bool ok1 = decode(first, CodeRate::R1_2, payload).crc_ok;
    single += ok1;
    if (ok1) {
      ++combined;
      continue;
    }
    arq_step(arq, false, first);
    combined += decode(arq.combine(second), CodeRate::R1_2, payload).crc_ok;
  }
  MESSAGE("single " << single << " combined " << combined);
  CHECK(combined > single);
  CHECK(single < 400);
}
