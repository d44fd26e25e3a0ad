#pragma once

#include "bvmlab/common.hpp"
#include "bvmlab/forward_model.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace bvmlab {

/// Empirical stability / linearization constants of a forward map over sampled points.
/// The numbers are maxima over a random sample, never a proof over all of the box.
struct AuditReport {
  Index d = 0;
  int n_pairs = 0;
  double a2_lower = 0.0;  ///< max |G(q1) - G(q2)| / |q1 - q2|
  double a2_upper = 0.0;  ///< max |q1 - q2| / (d |G(q1) - G(q2)|)
  double a3_ratio = 0.0;  ///< max |G(q1) - G(q2) - J(q2)(q1 - q2)| / |q1 - q2|^2
  double a3_slope = std::numeric_limits<double>::quiet_NaN();
  double max_residual = 0.0;
  bool sampled_not_exhaustive = true;

  struct Point {
    double step;      ///< |q1 - q2| or radius t
    double residual;  ///< linearization remainder
  };
  std::vector<Point> points;
};

/// Samples q1, q2 uniformly in the box and records both stability ratios and the remainder ratio.
/// Coincident pairs are resampled. Deterministic for a fixed seed.
AuditReport audit_stability(const ForwardModel& model, int n_pairs, std::uint64_t seed);

/// Remainder r(t) = |G(q0 + t p) - G(q0) - t J(q0) p| along n_dirs random unit directions p.
/// Directions that leave the box for the largest radius are rejected.
AuditReport audit_linearization(const ForwardModel& model, const Vector& base_q,
                                const std::vector<double>& radii, int n_dirs, std::uint64_t seed);

/// Slope of the least-squares line through (log x, log y); points with y <= 0 are skipped.
double log_log_slope(const std::vector<AuditReport::Point>& points);

}  // namespace bvmlab
