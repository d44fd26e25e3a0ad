#include "bvmlab/posterior_core.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace bvmlab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace

MultivariateNormal::MultivariateNormal(Vector mean, Matrix cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
    throw DimensionError("MultivariateNormal: covariance shape does not match mean");
  }
  Eigen::LLT<Matrix> llt(cov_);
  if (llt.info() != Eigen::Success) throw std::domain_error("MultivariateNormal: covariance not positive definite");
  chol_ = llt.matrixL();
  log_det_ = 2.0 * chol_.diagonal().array().log().sum();
}

double MultivariateNormal::mahalanobis_sq(const Vector& x) const {
  const Vector z = chol_.triangularView<Eigen::Lower>().solve(x - mean_);
  return z.squaredNorm();
}

double MultivariateNormal::log_pdf(const Vector& x) const {
  const double d = static_cast<double>(dim());
  return -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det_ + mahalanobis_sq(x));
}

Vector MultivariateNormal::sample(Rng& rng) const { return mean_ + chol_ * standard_normal_vector(dim(), rng); }

std::string to_string(PriorKind kind) { return kind == PriorKind::Uniform ? "uniform" : "tnorm"; }

PriorKind prior_kind_from_string(const std::string& s) {
  if (s == "uniform") return PriorKind::Uniform;
  if (s == "tnorm" || s == "truncated-normal") return PriorKind::TruncatedNormal;
  throw std::invalid_argument("unknown prior kind '" + s + "' (expected uniform|tnorm)");
}

PriorSpec PriorSpec::uniform(Bounds bounds) {
  PriorSpec p;
  p.kind = PriorKind::Uniform;
  p.bounds = bounds;
  p.mean = 0.5 * (bounds.q_min + bounds.q_max);
  p.std = bounds.width();
  return p;
}

PriorSpec PriorSpec::truncated_normal(Bounds bounds) {
  PriorSpec p;
  p.kind = PriorKind::TruncatedNormal;
  p.bounds = bounds;
  p.mean = 0.5 * (bounds.q_min + bounds.q_max);
  p.std = 0.25 * bounds.width();
  return p;
}

double PriorSpec::component_log_density(double x) const {
  if (!bounds.contains(x)) return kNegInf;
  if (kind == PriorKind::Uniform) return -std::log(bounds.width());
  const double z = (x - mean) / std;
  const double mass = normal_cdf((bounds.q_max - mean) / std) - normal_cdf((bounds.q_min - mean) / std);
  return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(std) - std::log(mass);
}

double PriorSpec::log_density(const Vector& q) const {
  double acc = 0.0;
  for (Index k = 0; k < q.size(); ++k) {
    const double v = component_log_density(q[k]);
    if (v == kNegInf) return kNegInf;
    acc += v;
  }
  return acc;
}

Vector PriorSpec::sample(Index d, Rng& rng) const {
  Vector out(d);
  std::uniform_real_distribution<double> uniform(bounds.q_min, bounds.q_max);
  std::normal_distribution<double> normal(mean, std);
  for (Index k = 0; k < d; ++k) {
    if (kind == PriorKind::Uniform) {
      out[k] = uniform(rng);
    } else {
      double x;
      do {
        x = normal(rng);
      } while (!bounds.contains(x));
      out[k] = x;
    }
  }
  return out;
}

PriorRegularity check_prior_regularity(const PriorSpec& prior, int grid_points) {
  if (grid_points < 3) throw std::invalid_argument("check_prior_regularity: need >= 3 grid points");
  PriorRegularity out;
  const double step = prior.bounds.width() / (grid_points - 1);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double prev = 0.0;
  for (int i = 0; i < grid_points; ++i) {
    const double x = prior.bounds.q_min + i * step;
    const double v = prior.component_log_density(std::min(x, prior.bounds.q_max));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    if (i > 0) out.lipschitz = std::max(out.lipschitz, std::abs(v - prev) / step);
    prev = v;
  }
  out.log_density_range = hi - lo;
  out.pass = std::isfinite(out.log_density_range) && std::isfinite(out.lipschitz);
  return out;
}

PosteriorSpec make_posterior(std::shared_ptr<const ForwardModel> model, PriorSpec prior, const Vector& q0,
                             double n, Vector eta) {
  if (!model) throw std::invalid_argument("make_posterior: null forward model");
  if (q0.size() != model->dim() || eta.size() != model->dim()) {
    throw DimensionError("make_posterior: q0 / eta length does not match the model");
  }
  if (!(n > 0.0)) throw std::invalid_argument("make_posterior: noise parameter n must be positive");
  if (!model->bounds().contains(q0)) throw BoundsError("make_posterior: truth outside the admissible box");
  if (!model->bounds().strictly_contains(q0)) warn("truth q0 lies on the boundary of the admissible box");
  PosteriorSpec spec;
  spec.model = std::move(model);
  spec.prior = prior;
  spec.q0 = q0;
  spec.eta = std::move(eta);
  spec.n = n;
  spec.g_q0 = spec.model->evaluate(q0);
  spec.y = spec.g_q0 + spec.eta / std::sqrt(n);
  return spec;
}

PosteriorSpec synthesize_data(std::shared_ptr<const ForwardModel> model, PriorSpec prior, const Vector& q0,
                              double n, std::uint64_t seed) {
  if (!model) throw std::invalid_argument("synthesize_data: null forward model");
  Rng rng(seed);
  Vector eta = standard_normal_vector(model->dim(), rng);
  PosteriorSpec spec = make_posterior(std::move(model), prior, q0, n, std::move(eta));
  spec.seed = seed;
  return spec;
}

double log_posterior_unnorm(const PosteriorSpec& spec, const Vector& q) {
  if (q.size() != spec.dim()) throw DimensionError("log_posterior_unnorm: wrong parameter length");
  if (!spec.model->bounds().contains(q)) return kNegInf;
  const double log_prior = spec.prior.log_density(q);
  if (log_prior == kNegInf) return kNegInf;
  if (spec.n == 0.0) return log_prior;
  return -0.5 * spec.n * (spec.y - spec.model->evaluate(q)).squaredNorm() + log_prior;
}

double log_L_n(const PosteriorSpec& spec, const Vector& u) {
  if (u.size() != spec.dim()) throw DimensionError("log_L_n: wrong local vector length");
  const double root_n = std::sqrt(spec.n);
  const Vector q = spec.q0 + u / root_n;
  if (!spec.model->bounds().contains(q)) throw BoundsError("log_L_n: q0 + u/sqrt(n) leaves the admissible box");
  const Vector t = root_n * (spec.model->evaluate(q) - spec.g_q0);
  return spec.eta.dot(t) - 0.5 * t.squaredNorm();
}

GaussianApprox gaussian_approx(const PosteriorSpec& spec) {
  GaussianApprox out;
  out.J0 = spec.model->jacobian(spec.q0);
  Eigen::JacobiSVD<Matrix> svd(out.J0);
  const Vector& s = svd.singularValues();
  const double condition = s[s.size() - 1] > 0.0 ? s[0] / s[s.size() - 1] : std::numeric_limits<double>::infinity();
  if (!(condition <= 1e12)) {
    std::ostringstream msg;
    msg << "gaussian_approx: forward Jacobian at q0 is near-singular (condition " << condition << ")";
    throw std::domain_error(msg.str());
  }
  const Matrix precision = out.J0.transpose() * out.J0;
  out.Sigma = precision.llt().solve(Matrix::Identity(spec.dim(), spec.dim()));
  out.Sigma = 0.5 * (out.Sigma + out.Sigma.transpose());
  out.Delta_n = out.Sigma * (out.J0.transpose() * spec.eta);
  out.n = spec.n;
  out.center_orig = spec.q0 + out.Delta_n / std::sqrt(spec.n);
  out.cov_orig = out.Sigma / spec.n;
  return out;
}

double log_L_tilde(const PosteriorSpec& spec, const GaussianApprox& approx, const Vector& u) {
  const Vector ju = approx.J0 * u;
  return 2.0 * spec.eta.dot(ju) - ju.squaredNorm();
}

double log_L_tilde_half(const PosteriorSpec& spec, const GaussianApprox& approx, const Vector& u) {
  const Vector ju = approx.J0 * u;
  return spec.eta.dot(ju) - 0.5 * ju.squaredNorm();
}

ExpansionGap expansion_gap(const PosteriorSpec& spec, const GaussianApprox& approx,
                           const std::vector<Vector>& u_samples, double radius, double constant_c) {
  if (u_samples.empty()) throw std::invalid_argument("expansion_gap: empty sample list");
  std::vector<double> gaps(u_samples.size());
  parallel_for(u_samples.size(), [&](std::size_t i) {
    gaps[i] = std::abs(log_L_n(spec, u_samples[i]) - log_L_tilde_half(spec, approx, u_samples[i]));
  });
  ExpansionGap out;
  for (double g : gaps) out.max_gap = std::max(out.max_gap, g);
  const double k2 = radius * radius;
  out.radius = radius;
  out.bound_rhs = constant_c * (spec.eta.norm() * k2 / std::sqrt(spec.n) + k2 * k2 / spec.n);
  out.within_bound = out.max_gap <= out.bound_rhs;
  return out;
}

double K_of_d(double d, double K, const std::function<double(double)>& sigma) {
  const double s = sigma(d);
  const double log_term = std::log(d) + std::log(s);
  return K * s * std::sqrt(d * std::max(log_term, 0.0));
}

std::vector<Vector> sample_ball(Index d, double radius, int count, Rng& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Vector z = standard_normal_vector(d, rng);
    const double r = radius * std::pow(uniform(rng), 1.0 / static_cast<double>(d));
    out.push_back(z.normalized() * r);
  }
  return out;
}

}  // namespace bvmlab
