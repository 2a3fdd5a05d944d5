#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "nlphy/error.hpp"
#include "nlphy/sim.hpp"

using namespace nlphy;

namespace {

SimConfig small(int n_bs = 4, int k = 4) {
  SimConfig c;
  c.n_bs = n_bs;
  c.k = k;
  c.n_rb = 1;
  c.frames = 10;
  c.seed = 17;
  return c;
}

SimConfig noiseless_fixed(DetectorKind det, PrecoderKind pre) {
  SimConfig c = small();
  c.noise = false;
  c.perfect_csi = true;
  c.detector = det;
  c.precoder = pre;
  c.link.mcs_min = c.link.mcs_max = c.mcs_init = 7;
  return c;
}

bool same_records(const Metrics& a, const Metrics& b) {
  if (a.records.size() != b.records.size() || a.events.size() != b.events.size()) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const SubframeRecord &x = a.records[i], &y = b.records[i];
    if (x.frame != y.frame || x.subframe != y.subframe || x.direction != y.direction || x.ue != y.ue ||
        x.mcs != y.mcs || x.crc_ok != y.crc_ok || x.bits_delivered != y.bits_delivered)
      return false;
  }
  for (std::size_t i = 0; i < a.events.size(); ++i)
    if (a.events[i].mcs_after != b.events[i].mcs_after || a.events[i].outcome != b.events[i].outcome)
      return false;
  return true;
}

}  // namespace

TEST_CASE("tdd configuration 3 has 6 downlink, 3 uplink and 1 special subframe") {
  int dl = 0, ul = 0, sp = 0;
  for (int i = 0; i < kSubframesPerFrame; ++i) {
    const SubframeRole r = subframe_role(i);
    dl += r == SubframeRole::Downlink;
    ul += r == SubframeRole::Uplink;
    sp += r == SubframeRole::Special;
  }
  CHECK(dl == 6);
  CHECK(ul == 3);
  CHECK(sp == 1);
  CHECK(subframe_role(1) == SubframeRole::Special);
  for (int i : {2, 3, 4}) CHECK(subframe_role(i) == SubframeRole::Uplink);
}

TEST_CASE("schedule gives every UE every RB") {
  const Allocation a = schedule(4, 25);
  CHECK(a.n_layers == 4);
  REQUIRE(a.rbs.size() == 4);
  for (const auto& r : a.rbs) CHECK(r.size() == 25);
  const Allocation one = schedule(1, 25);
  CHECK(one.n_layers == 1);
  CHECK(one.rbs.size() == 1);
  CHECK(schedule(4, 25).rbs == a.rbs);
}

TEST_CASE("relative gain arithmetic") {
  CHECK(relative_gain(5.0, 5.0) == 0.0);
  CHECK(relative_gain(10.0, 5.0) == 100.0);
  CHECK(relative_gain(2.5, 5.0) == -50.0);
  const Metrics m = run_simulation(small());
  CHECK(relative_gain(m, m) == 0.0);
}

TEST_CASE("config validation rejects inconsistent dimensions") {
  SimConfig c = small(4, 5);
  CHECK_THROWS_AS(run_simulation(c), Error);
  c = small();
  c.frames = 0;
  CHECK_THROWS_AS(run_simulation(c), Error);
  c = small();
  c.pathloss_db = {0.0, 6.0};
  CHECK_THROWS_AS(run_simulation(c), Error);
  c = small();
  c.link.mcs_max = 12;
  CHECK_THROWS_AS(run_simulation(c), Error);
}

TEST_CASE("noiseless perfect-CSI runs decode every block") {
  for (auto [det, pre] : {std::pair{DetectorKind::ZF, PrecoderKind::ZF}, std::pair{DetectorKind::Sphere, PrecoderKind::VP},
                          std::pair{DetectorKind::MMSE, PrecoderKind::ZF}}) {
    const Metrics m = run_simulation(noiseless_fixed(det, pre));
    CHECK(m.dl.attempts == 6u * 10u * 4u);
    CHECK(m.ul.attempts == 3u * 10u * 4u);
    CHECK(m.dl.errors == 0);
    CHECK(m.ul.errors == 0);
    CHECK(m.power_deviation < 1e-9);
  }
}

TEST_CASE("noiseless estimated CSI with impairments and calibration decodes every block") {
  for (PrecoderKind pre : {PrecoderKind::ZF, PrecoderKind::VP}) {
    SimConfig c = noiseless_fixed(DetectorKind::Sphere, pre);
    c.perfect_csi = false;
    c.rho = 1.0;
    c.dmrs_boost_db = 3.0;
    const Metrics m = run_simulation(c);
    CHECK(m.dl.errors == 0);
    CHECK(m.ul.errors == 0);
    CHECK(m.power_deviation < 1e-9);
  }
}

TEST_CASE("identical seeds give identical metrics; other seeds differ") {
  SimConfig c = small();
  c.snr_db = 9.0;
  const Metrics a = run_simulation(c);
  const Metrics b = run_simulation(c);
  CHECK(same_records(a, b));
  c.seed = 18;
  CHECK_FALSE(same_records(a, run_simulation(c)));
}

TEST_CASE("feedback is consumed exactly after the configured delay") {
  SimConfig c = small();
  c.snr_db = 6.0;
  Engine e(c);
  while (e.next_subframe() < 200) e.run_subframe();
  const Metrics& m = e.metrics();
  REQUIRE(!m.events.empty());
  std::int64_t last = 0;
  for (const LinkEvent& ev : m.events) {
    CHECK(ev.rx_subframe == ev.tx_subframe + 4);
    CHECK(ev.rx_subframe >= last);
    CHECK(ev.frame == ev.rx_subframe / kSubframesPerFrame);
    last = ev.rx_subframe;
  }
  // Transmissions of the last 4 subframes are still in flight.
  std::size_t attempts = m.dl.attempts + m.ul.attempts;
  std::size_t in_flight = 0;
  for (const SubframeRecord& r : m.records)
    if (r.frame * kSubframesPerFrame + r.subframe >= 196) ++in_flight;
  CHECK(m.events.size() == attempts - in_flight);
}

TEST_CASE("link adaptation bounds hold and changes respect the cool-off") {
  SimConfig c = small();
  c.frames = 60;
  c.snr_db = 12.0;
  c.link.cooloff_frames = 3;
  c.link.mcs_min = 2;
  c.link.mcs_max = 9;
  const Metrics m = run_simulation(c);
  for (Direction d : {Direction::Downlink, Direction::Uplink})
    for (int ue = 0; ue < c.k; ++ue) {
      std::int64_t last_change = -1000;
      for (const LinkEvent& ev : m.events) {
        if (ev.direction != d || ev.ue != ue) continue;
        CHECK(ev.mcs_after >= 2);
        CHECK(ev.mcs_after <= 9);
        if (ev.mcs_after != ev.mcs_before) {
          CHECK(ev.frame - last_change >= 3);
          last_change = ev.frame;
        }
      }
    }
}

TEST_CASE("harq retransmissions reuse the stored MCS and deliver each block once") {
  SimConfig c = small();
  c.frames = 40;
  c.snr_db = 3.0;
  c.link.mcs_min = c.link.mcs_max = c.mcs_init = 6;
  const Metrics m = run_simulation(c);
  std::size_t retx = 0, delivered = 0, bits = 0;
  for (const SubframeRecord& r : m.records) {
    retx += r.attempt > 0;
    CHECK(r.attempt <= c.max_retx);
    if (r.bits_delivered) {
      ++delivered;
      bits += r.bits_delivered;
      CHECK(r.crc_ok);
    }
  }
  CHECK(retx > 0);
  CHECK(delivered == m.dl.delivered_blocks + m.ul.delivered_blocks);
  CHECK(bits == m.dl.bits + m.ul.bits);
}

TEST_CASE("spectral efficiency uses the scheduled bandwidth") {
  Metrics m;
  m.n_rb = 2;
  m.dl.subframes = 10;
  m.dl.bits = 3'600'000;
  CHECK(m.spectral_efficiency(Direction::Downlink) == doctest::Approx(1000.0));
  m.subframes = 20;
  CHECK(m.sum_goodput() == doctest::Approx(180000.0));
}
