#pragma once

#include <cmath>
#include <numbers>

#include "ergolab/cocycle.hpp"
#include "ergolab/map_spec.hpp"

namespace fixtures {

using namespace ergolab;

inline constexpr IntMat2 kA{2, 1, 1, 1};
inline constexpr IntMat2 kB{1, 1, 1, 2};

inline const double kLogGoldenSq = std::log((3.0 + std::sqrt(5.0)) / 2.0);

inline ShearPair test_shears() {
  ShearPair s;
  s.psi1.terms = {{1, 0.15, 0.0}, {2, 0.03, 0.7}};
  s.psi2.terms = {{1, 0.1, 0.3}};
  return s;
}

inline Family linear_ab() { return {MapSpec::linear(kA), MapSpec::linear(kB)}; }

inline Family shear_ab(double eps) {
  return {MapSpec::shear_pair(kA, test_shears(), eps), MapSpec::shear_pair(kB, test_shears(), eps)};
}

inline TrigField test_trig() {
  TrigField t;
  t.terms = {{1, 0, {0.1, 0.05}, 0.2}, {1, 1, {-0.04, 0.08}, 1.1}};
  return t;
}

}  // namespace fixtures
