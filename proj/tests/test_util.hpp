#pragma once

#include <doctest.h>

#include <cmath>
#include <random>

#include "pw/hyperreal.hpp"
#include "pw/lab.hpp"
#include "pw/wavefield.hpp"

namespace testutil {

using namespace pw;

inline WaveFunction gaussian_state(const Grid& g, double center, double sigma,
                                   double momentum = 0.0) {
  lab::InitSpec init;
  init.kind = "gaussian";
  init.center = center;
  init.sigma = sigma;
  init.momentum = momentum;
  return lab::make_initial(init, g);
}

inline WaveFunction bump_state(const Grid& g, double lo, double hi) {
  lab::InitSpec init;
  init.kind = "bump";
  init.lo = lo;
  init.hi = hi;
  return lab::make_initial(init, g);
}

inline WaveFunction box_state(const Grid& g, double lo, double hi) {
  lab::InitSpec init;
  init.kind = "box";
  init.lo = lo;
  init.hi = hi;
  return lab::make_initial(init, g);
}

// termwise comparison within tol on the coefficients of the difference
inline bool hclose(const HyperReal& a, const HyperReal& b, double tol) {
  for (const auto& t : (a - b).terms())
    if (std::abs(t.coefficient) > tol) return false;
  return true;
}

// sigma(t) for a free Gaussian of initial width sigma0 (m = hbar = 1)
inline double free_width(double sigma0, double t) {
  const double a = t / (2.0 * sigma0 * sigma0);
  return sigma0 * std::sqrt(1.0 + a * a);
}

}  // namespace testutil
