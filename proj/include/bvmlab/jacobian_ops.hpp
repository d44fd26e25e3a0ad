#pragma once

#include "bvmlab/common.hpp"
#include "bvmlab/elliptic_forward.hpp"

#include <span>

namespace bvmlab {

/// Derivative of the forward map, J = -(h^-2 A + Q)^-1 diag(u_q), evaluated at at_q.
struct JacobianMatrix {
  Matrix J;
  Vector at_q;
};

/// Extreme singular values of J and of J^-1.
struct SpectralReport {
  Index d = 0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double sigma_min_inv = 0.0;
  double sigma_max_inv = 0.0;
  double asymmetry = 0.0;  ///< |J - J^T|_F / |J|_F
};

struct GrowthFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Builds J column by column: column k is -(u_q)_k M^-1 e_k, using the cached factorization.
JacobianMatrix jacobian(const ForwardSystem& sys, const ForwardSolution& u);

/// Full SVD of J. Refuses d > 4096.
SpectralReport spectral_report(const Matrix& J);
inline SpectralReport spectral_report(const JacobianMatrix& J) { return spectral_report(J.J); }

/// |J - J^T|_F / |J|_F; zero for symmetric input.
double asymmetry(const Matrix& J);

/// Least-squares fit of log sigma_max(J^-1) against log d. Needs at least 3 distinct d.
GrowthFit sigma_growth_fit(std::span<const SpectralReport> reports);

}  // namespace bvmlab
