#include <cmath>

#include "doctest.h"
#include "nlphy/oracle.hpp"
#include "nlphy/precode.hpp"
#include "test_util.hpp"

using namespace nlphy;
using nlphy::testing::random_cmat;

namespace {

CMat random_block(RngStream& rng, const Constellation& c, int k, int n) {
  CMat s(k, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < k; ++i)
      s(i, j) = c.point(static_cast<int>(rng.engine()() % static_cast<unsigned>(c.order())));
  return s;
}

}  // namespace

TEST_CASE("tau_for follows the fundamental-region rule") {
  CHECK(tau_for(Constellation::qam(4)) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-15));
  for (int m : {4, 16, 64}) {
    const Constellation& c = Constellation::qam(m);
    const double tau = tau_for(c);
    CHECK(tau > 2.0 * c.max_coord());
    for (const cd& p : c.points()) CHECK(std::abs(modulo_receive(p, 1.0, tau) - p) < 1e-15);
  }
}

TEST_CASE("modulo_receive folds lattice translates and is idempotent") {
  const Constellation& c = Constellation::qam(16);
  const double tau = tau_for(c);
  for (const cd& p : c.points()) {
    CHECK(std::abs(modulo_receive(p + tau * cd(1, 1), 1.0, tau) - p) < 1e-12);
    CHECK(std::abs(modulo_receive(p - tau * cd(2, -3), 1.0, tau) - p) < 1e-12);
  }
  RngStream rng(1);
  for (int i = 0; i < 1000; ++i) {
    const cd x = rng.cgauss(100.0);
    const cd f = modulo_receive(x, 1.0, tau);
    CHECK(f.real() >= -tau / 2);
    CHECK(f.real() < tau / 2);
    CHECK(f.imag() >= -tau / 2);
    CHECK(f.imag() < tau / 2);
    CHECK(modulo_receive(f, 1.0, tau) == f);
  }
  CHECK(modulo_receive(cd(tau / 2, -tau / 2), 1.0, tau).real() == doctest::Approx(-tau / 2));
  CHECK(modulo_receive(cd(0.5, 0.25), 2.0, tau) == cd(1.0, 0.5));
}

TEST_CASE("zf_precode on the identity channel") {
  RngStream rng(2);
  const CMat s = random_block(rng, Constellation::qam(16), 3, 1);
  const ZfPrecoded z = zf_precode(CMat::Identity(3, 3), s);
  CHECK(z.gamma == doctest::Approx(s.squaredNorm() / 3.0).epsilon(1e-14));
  CHECK((z.x - s / std::sqrt(z.gamma)).norm() < 1e-14);
  CHECK(z.gamma > 0.0);
}

TEST_CASE("zf_precode on a 2x2 channel delivers s / sqrt(gamma)") {
  CMat h(2, 2);
  h << cd(1, 0.5), cd(0.3, 0), cd(-0.2, 0.1), cd(0.8, -0.4);
  const Constellation& c = Constellation::qam(4);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      CMat s(2, 1);
      s << c.point(a), c.point(b);
      const ZfPrecoded z = zf_precode(h, s);
      const CMat r = h * z.x;
      CHECK((r - s / std::sqrt(z.gamma)).norm() < 1e-9);
      CHECK(z.x.squaredNorm() == doctest::Approx(2.0).epsilon(1e-12));
    }
}

TEST_CASE("zf_precode rejects a rank-deficient channel") {
  CMat h(2, 3);
  h << 1, 2, 3, 2, 4, 6;
  CHECK_THROWS(zf_precode(h, CMat::Ones(2, 1)));
}

TEST_CASE("vp on the identity channel chooses no perturbation") {
  RngStream rng(3);
  for (int m : {4, 16, 64}) {
    const Constellation& c = Constellation::qam(m);
    const PerturbedSignal p = vp_precode(CMat::Identity(4, 4), random_block(rng, c, 4, 20), tau_for(c), 32);
    for (const GaussInt& l : p.perturbation) CHECK(l == GaussInt{});
  }
}

TEST_CASE("vp power matches the bounded exhaustive minimum on an ill-conditioned 2x2 channel") {
  const Constellation& c = Constellation::qam(4);
  const double tau = tau_for(c);
  RngStream rng(4);
  int max_coord = 0;
  for (int t = 0; t < 100; ++t) {
    const CMat h = oracle::conditioned_matrix(500 + static_cast<std::uint64_t>(t), 2, 2, 50.0);
    const VectorPerturbation vp(h, {tau, tau}, 32);
    const CVec s = random_block(rng, c, 2, 1).col(0);
    GaussInt l[2];
    const double power = vp.search(s, l);
    int chosen = 0;
    for (const GaussInt& g : l) chosen = std::max({chosen, std::abs(g.re), std::abs(g.im)});
    const oracle::VpResult ref = oracle::exhaustive_vp(vp.precoder(), s, tau, std::max(3, chosen));
    CHECK(std::abs(power - ref.power) <= 1e-9 * std::max(1.0, ref.power));
    // Outside the [-3, 3] box the bounded reference would be too narrow.
    if (chosen < 3) CHECK(ref.max_abs_coord <= 3);
    max_coord = std::max(max_coord, chosen);
  }
  MESSAGE("largest perturbation coordinate " << max_coord);
}

TEST_CASE("vp power never exceeds zf power") {
  RngStream rng(5);
  const Constellation& c = Constellation::qam(16);
  const double tau = tau_for(c);
  for (int t = 0; t < 1000; ++t) {
    const CMat h = random_cmat(rng, 4, 4);
    const CVec s = random_block(rng, c, 4, 1).col(0);
    const VectorPerturbation vp(h, std::vector<double>(4, tau), 32);
    GaussInt l[4];
    const double power = vp.search(s, l);
    const double zf = (vp.precoder() * s).squaredNorm();
    CHECK(power <= zf * (1.0 + 1e-12));
  }
}

TEST_CASE("vp output is power-normalised and undone by the modulo receiver") {
  RngStream rng(6);
  for (int m : {4, 16, 64}) {
    const Constellation& c = Constellation::qam(m);
    const double tau = tau_for(c);
    for (int t = 0; t < 20; ++t) {
      const CMat h = random_cmat(rng, 3, 6);
      const CMat s = random_block(rng, c, 3, 12);
      const PerturbedSignal p = vp_precode(h, s, tau, 32);
      CHECK(p.x.squaredNorm() / 12.0 == doctest::Approx(3.0).epsilon(1e-12));
      CHECK(p.gamma > 0.0);
      const CMat r = h * p.x;
      for (int j = 0; j < 12; ++j)
        for (int k = 0; k < 3; ++k)
          CHECK(std::abs(modulo_receive(r(k, j), std::sqrt(p.gamma), tau) - s(k, j)) < 1e-9);
    }
  }
}

TEST_CASE("vp oracle suite passes") {
  const oracle::Report r = oracle::run("vp", 100, 3, 3, 7);
  CHECK(r.matches == r.trials);
  MESSAGE("largest perturbation coordinate " << r.max_perturbation);
}
