#pragma once

#include "bvmlab/common.hpp"
#include "bvmlab/forward_model.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace bvmlab {

/// Gaussian N(mean, cov) with a cached lower Cholesky factor.
class MultivariateNormal {
 public:
  MultivariateNormal(Vector mean, Matrix cov);

  Index dim() const { return mean_.size(); }
  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }
  const Matrix& chol() const { return chol_; }

  double log_pdf(const Vector& x) const;
  /// (x - mean)^T cov^-1 (x - mean)
  double mahalanobis_sq(const Vector& x) const;
  Vector sample(Rng& rng) const;

 private:
  Vector mean_;
  Matrix cov_;
  Matrix chol_;
  double log_det_ = 0.0;
};

enum class PriorKind { Uniform, TruncatedNormal };

std::string to_string(PriorKind kind);
PriorKind prior_kind_from_string(const std::string& s);

/// Product prior with identical components supported on [q_min, q_max].
struct PriorSpec {
  PriorKind kind = PriorKind::Uniform;
  Bounds bounds;
  double mean = 0.0;  ///< truncated-normal location
  double std = 1.0;   ///< truncated-normal scale

  static PriorSpec uniform(Bounds bounds);
  /// Defaults: mean (q_min + q_max)/2, std (q_max - q_min)/4.
  static PriorSpec truncated_normal(Bounds bounds);

  /// Normalized log-density of one component; -inf outside the bounds.
  double component_log_density(double x) const;
  /// Sum of component log-densities; -inf outside the box.
  double log_density(const Vector& q) const;
  Vector sample(Index d, Rng& rng) const;
};

/// Numerical check of the per-component prior conditions on a uniform 1D grid.
struct PriorRegularity {
  double log_density_range = 0.0;  ///< max - min of log pi_i over the support
  double lipschitz = 0.0;          ///< max |d log pi_i / dq| from grid differences
  bool pass = false;
};
PriorRegularity check_prior_regularity(const PriorSpec& prior, int grid_points = 2001);

/// Synthetic-data posterior: Y_n = G(q0) + n^{-1/2} eta.
struct PosteriorSpec {
  std::shared_ptr<const ForwardModel> model;
  PriorSpec prior;
  Vector q0;
  Vector eta;
  Vector y;
  Vector g_q0;  ///< G(q0), cached
  double n = 1.0;
  std::uint64_t seed = 0;

  Index dim() const { return q0.size(); }
};

/// Draws eta ~ N(0, I_d) from the seed. Warns when q0 touches the boundary of the box.
PosteriorSpec synthesize_data(std::shared_ptr<const ForwardModel> model, PriorSpec prior,
                              const Vector& q0, double n, std::uint64_t seed);

/// Same, with a caller-supplied noise vector.
PosteriorSpec make_posterior(std::shared_ptr<const ForwardModel> model, PriorSpec prior,
                             const Vector& q0, double n, Vector eta);

/// -(n/2)|Y_n - G(q)|^2 + log pi(q); -inf outside the box.
double log_posterior_unnorm(const PosteriorSpec& spec, const Vector& q);

/// Log likelihood ratio in local coordinates u = sqrt(n)(q - q0):
/// <eta, T> - |T|^2/2 with T = sqrt(n)(G(q0 + u/sqrt(n)) - G(q0)). Throws BoundsError off the box.
double log_L_n(const PosteriorSpec& spec, const Vector& u);

/// Gaussian approximation of the posterior. Local coordinates: N(Delta_n, Sigma);
/// original coordinates: N(center_orig, Sigma / n).
struct GaussianApprox {
  Matrix J0;            ///< forward Jacobian at q0
  Matrix Sigma;         ///< (J0^T J0)^-1
  Vector Delta_n;       ///< Sigma J0^T eta
  Vector center_orig;   ///< q0 + Delta_n / sqrt(n)
  Matrix cov_orig;      ///< Sigma / n
  double n = 1.0;

  MultivariateNormal local() const { return {Delta_n, Sigma}; }
  MultivariateNormal original() const { return {center_orig, cov_orig}; }
};

/// Throws std::domain_error when the condition number of J0 exceeds 1e12.
GaussianApprox gaussian_approx(const PosteriorSpec& spec);

/// Surrogate exponent as printed for the limit problem: 2<u, Sigma^-1 Delta_n> - |Sigma^-1/2 u|^2,
/// evaluated as 2<eta, J0 u> - |J0 u|^2. exp() of it is proportional to N(Delta_n, Sigma/2).
double log_L_tilde(const PosteriorSpec& spec, const GaussianApprox& approx, const Vector& u);

/// First-order expansion of log_L_n: <eta, J0 u> - |J0 u|^2 / 2 (half of log_L_tilde).
/// exp() of it is proportional to N(Delta_n, Sigma).
double log_L_tilde_half(const PosteriorSpec& spec, const GaussianApprox& approx, const Vector& u);

struct ExpansionGap {
  double max_gap = 0.0;    ///< max over samples of |log_L_n - log_L_tilde_half|
  double bound_rhs = 0.0;  ///< C (n^-1/2 |eta| K(d)^2 + n^-1 K(d)^4)
  double radius = 0.0;     ///< K(d)
  bool within_bound = false;
};

/// Compares the exact log likelihood ratio with its linearization on samples from the ball
/// of radius radius. constant_c is the C of the bound.
ExpansionGap expansion_gap(const PosteriorSpec& spec, const GaussianApprox& approx,
                           const std::vector<Vector>& u_samples, double radius, double constant_c);

/// Ill-posedness degree sigma(d) = d of the elliptic medium problem.
inline double sigma_medium(double d) { return d; }

/// K(d) = K sigma(d) sqrt(d (log d + log sigma(d))), natural logarithms.
double K_of_d(double d, double K, const std::function<double(double)>& sigma = sigma_medium);

/// count points uniform in the centred d-ball of the given radius.
std::vector<Vector> sample_ball(Index d, double radius, int count, Rng& rng);

}  // namespace bvmlab
