#pragma once

#include "bvmlab/elliptic_forward.hpp"

#include <cmath>
#include <numbers>

namespace bvmlab::testing {

inline constexpr double kPi = std::numbers::pi;

// N = 2 has one interior node: (16 + q) u = f + 4 * (4 g), so u = (f + 16 g) / (16 + q).
inline double scalar_forward(double q, double f, double g) { return (f + 16.0 * g) / (16.0 + q); }

inline std::shared_ptr<const MediumForwardModel> medium_model(int N, double f = 1.0, double g = 1.0,
                                                              Bounds b = {}) {
  const GridSpec grid(N);
  return std::make_shared<const MediumForwardModel>(grid, ProblemData::constant(grid, f, g), b);
}

}  // namespace bvmlab::testing
