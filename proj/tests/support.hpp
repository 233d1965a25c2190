#pragma once

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdint>
#include <random>

#include "bsmix/option_pricing.hpp"

namespace bsmix::test {

inline bool rel_close(double a, double b, double rel, double abs_floor = 0.0) {
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

// Random pricing inputs over a wide but well-conditioned box. About one case
// in twenty hits each degenerate boundary so the limit branches are covered.
inline OptionParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  OptionParams p;
  p.spot = 0.1 + 99.9 * u(rng);
  p.strike = 0.1 + 99.9 * u(rng);
  p.rate = 0.1 * u(rng);
  p.vol = 1e-4 + u(rng);
  p.tte = 100.0 * u(rng);
  const double r = u(rng);
  if (r < 0.05) p.tte = 0.0;
  else if (r < 0.10) p.vol = 0.0;
  else if (r < 0.15) p.spot = 0.0;
  else if (r < 0.20) p.strike = 0.0;
  return p;
}

}  // namespace bsmix::test
