#pragma once

#include "nlphy/numerics.hpp"
#include "nlphy/rng.hpp"

namespace nlphy::testing {

inline CMat random_cmat(RngStream& rng, int rows, int cols) {
  CMat a(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) a(i, j) = rng.cgauss();
  return a;
}

inline CVec random_cvec(RngStream& rng, int n) { return random_cmat(rng, n, 1).col(0); }

}  // namespace nlphy::testing
