#pragma once

#include "bvmlab/common.hpp"
#include "bvmlab/posterior_core.hpp"
#include "bvmlab/samplers.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace bvmlab {

/// Unnormalized log density; -inf marks zero density.
using LogDensity = std::function<double(const Vector&)>;

enum class TVMethod { Grid, Importance };
std::string to_string(TVMethod m);

struct TVEstimate {
  double value = 0.0;    ///< in [0, 1]
  double std_err = 0.0;  ///< grid: |TV(m) - TV(m/2)|; importance: batch-means standard error
  TVMethod method = TVMethod::Grid;
  long m = 0;            ///< cells per dimension or sample count
};

/// TV between the normalized target restricted to [lo, hi] and phi, by midpoint quadrature.
/// phi-mass outside the box is added exactly. Supports d <= 2.
TVEstimate tv_box(const LogDensity& log_target, const Vector& lo, const Vector& hi,
                  const MultivariateNormal& phi, int cells_per_dim);

/// Posterior vs N(center_orig, cov_orig) on the admissible box. Warns below 50 cells per dimension.
TVEstimate tv_grid(const PosteriorSpec& spec, const GaussianApprox& approx, int cells_per_dim);

/// Self-normalized importance estimate of TV(target, phi) with proposal phi; std_err from 20 batch means.
/// Thrown by tv_importance when no Gaussian draw lands where the target has positive density.
struct DisjointSupport : std::domain_error {
  using std::domain_error::domain_error;
};

TVEstimate tv_importance(const LogDensity& log_target, const MultivariateNormal& phi, long m, std::uint64_t seed);
TVEstimate tv_importance(const PosteriorSpec& spec, const GaussianApprox& approx, long m, std::uint64_t seed);

/// Mass of N(mean, cov) inside the axis-aligned box [lo, hi]; d <= 2.
double gaussian_box_mass(const MultivariateNormal& phi, const Vector& lo, const Vector& hi);

/// P(|X| > radius) for X ~ N(mean, cov), any d: closed form for d = 1, Imhof's inversion
/// formula otherwise.
double gaussian_ball_tail(const MultivariateNormal& phi, double radius);

double chi_square_quantile(double dof, double p);

struct MomentGap {
  double mean_gap = 0.0;      ///< |sample mean - center_orig|
  double cov_gap = 0.0;       ///< ||sample cov - cov_orig||_2
  double mean_gap_rel = 0.0;  ///< mean_gap / sqrt(tr cov_orig)
  double cov_gap_rel = 0.0;   ///< cov_gap / ||cov_orig||_2
  double min_ess = 0.0;
};

/// Throws if the smallest per-component ESS is below min_ess.
MomentGap moment_gap(const SampleSet& samples, const GaussianApprox& approx, double min_ess = 500.0);

enum class CredibleSetKind { GaussianEllipsoid, McmcHpd };
std::string to_string(CredibleSetKind k);
CredibleSetKind credible_set_from_string(const std::string& s);

struct CoverageResult {
  double alpha = 0.0;
  int n_reps = 0;
  int hits = 0;
  double coverage = 0.0;
  double ci_halfwidth = 0.0;  ///< 2 sqrt(c (1 - c) / n_reps)
};

struct CoverageOptions {
  CredibleSetKind kind = CredibleSetKind::GaussianEllipsoid;
  int chain_steps = 4000;  ///< independence-chain length per replication for McmcHpd
};

/// Frequentist coverage of the level-(1 - alpha) credible set over n_reps fresh noise draws.
CoverageResult credible_coverage(std::shared_ptr<const ForwardModel> model, const PriorSpec& prior, const Vector& q0,
                                 double n, double alpha, int n_reps, std::uint64_t seed,
                                 const CoverageOptions& options = {});

struct ContractionResult {
  double M = 0.0;
  double eps_n = 0.0;         ///< n^-1/2 K(d)
  double mass_outside = 0.0;  ///< fraction of samples with |q - q0| >= M eps_n
};

std::vector<ContractionResult> contraction_probe(const SampleSet& samples, const Vector& q0, double n, double d,
                                                 double K, const std::vector<double>& M_list);

struct TailMass {
  double radius = 0.0;           ///< K(d)
  double posterior_tail = 0.0;   ///< empirical mass of |u| > K(d), u = sqrt(n)(q - q0)
  double gaussian_tail = 0.0;    ///< N(Delta_n, Sigma) mass of the same set
};

TailMass tail_mass_probe(const SampleSet& samples, const GaussianApprox& approx, const Vector& q0, double n,
                         double d, double K);

}  // namespace bvmlab
