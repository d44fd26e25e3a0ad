#include "bvmlab/bvm_diagnostics.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

namespace bvmlab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kBatches = 20;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double tv_box_once(const LogDensity& log_target, const Vector& lo, const Vector& hi, const MultivariateNormal& phi,
                   int cells) {
  const Index d = lo.size();
  const Vector width = (hi - lo) / cells;
  const double vol = width.prod();
  long total = 1;
  for (Index k = 0; k < d; ++k) total *= cells;

  std::vector<Vector> centers(static_cast<std::size_t>(total));
  for (long c = 0; c < total; ++c) {
    Vector x(d);
    long rest = c;
    for (Index k = 0; k < d; ++k) {
      x[k] = lo[k] + (static_cast<double>(rest % cells) + 0.5) * width[k];
      rest /= cells;
    }
    centers[static_cast<std::size_t>(c)] = std::move(x);
  }
  std::vector<double> log_p(centers.size());
  parallel_for(centers.size(), [&](std::size_t c) { log_p[c] = log_target(centers[c]); });

  double max_lp = kNegInf;
  for (double v : log_p) max_lp = std::max(max_lp, v);
  if (max_lp == kNegInf) throw std::domain_error("tv_grid: target has zero density on every cell");
  double norm = 0.0;
  for (double v : log_p) norm += std::exp(v - max_lp);
  norm *= vol;

  double l1 = 0.0;
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const double p = std::exp(log_p[c] - max_lp) / norm;
    l1 += std::abs(p - std::exp(phi.log_pdf(centers[c]))) * vol;
  }
  const double outside = std::max(0.0, 1.0 - gaussian_box_mass(phi, lo, hi));
  return std::clamp(0.5 * (l1 + outside), 0.0, 1.0);
}

}  // namespace

std::string to_string(TVMethod m) { return m == TVMethod::Grid ? "grid" : "importance"; }

double gaussian_box_mass(const MultivariateNormal& phi, const Vector& lo, const Vector& hi) {
  const Index d = phi.dim();
  if (lo.size() != d || hi.size() != d) throw DimensionError("gaussian_box_mass: box dimension");
  if (d == 1) {
    const double s = std::sqrt(phi.cov()(0, 0));
    return normal_cdf((hi[0] - phi.mean()[0]) / s) - normal_cdf((lo[0] - phi.mean()[0]) / s);
  }
  if (d != 2) throw std::invalid_argument("gaussian_box_mass: only d <= 2 is supported");
  // Condition on the first coordinate and integrate its marginal.
  const double m1 = phi.mean()[0], m2 = phi.mean()[1];
  const double v1 = phi.cov()(0, 0), v2 = phi.cov()(1, 1), c12 = phi.cov()(0, 1);
  const double s1 = std::sqrt(v1);
  const double s_cond = std::sqrt(std::max(v2 - c12 * c12 / v1, 0.0));
  const double a = std::max(lo[0], m1 - 12.0 * s1);
  const double b = std::min(hi[0], m1 + 12.0 * s1);
  if (!(a < b)) return 0.0;
  auto integrand = [&](double x) {
    const double mu = m2 + c12 / v1 * (x - m1);
    const double inner = s_cond > 0.0
                             ? normal_cdf((hi[1] - mu) / s_cond) - normal_cdf((lo[1] - mu) / s_cond)
                             : (mu >= lo[1] && mu <= hi[1] ? 1.0 : 0.0);
    const double z = (x - m1) / s1;
    return std::exp(-0.5 * z * z) / (s1 * std::sqrt(2.0 * std::numbers::pi)) * inner;
  };
  constexpr int kSegments = 400;
  const double step = (b - a) / kSegments;
  double acc = 0.0;
  for (int i = 0; i < kSegments; ++i) {
    acc += boost::math::quadrature::gauss<double, 20>::integrate(integrand, a + i * step, a + (i + 1) * step);
  }
  return acc;
}

TVEstimate tv_box(const LogDensity& log_target, const Vector& lo, const Vector& hi, const MultivariateNormal& phi,
                  int cells_per_dim) {
  const Index d = lo.size();
  if (d > 2) throw std::invalid_argument("tv_grid: quadrature oracle supports d <= 2 only");
  if (hi.size() != d || phi.dim() != d) throw DimensionError("tv_grid: dimension mismatch");
  if (cells_per_dim < 2) throw std::invalid_argument("tv_grid: need at least 2 cells per dimension");
  TVEstimate out;
  out.method = TVMethod::Grid;
  out.m = cells_per_dim;
  out.value = tv_box_once(log_target, lo, hi, phi, cells_per_dim);
  out.std_err = std::abs(out.value - tv_box_once(log_target, lo, hi, phi, cells_per_dim / 2));
  return out;
}

TVEstimate tv_grid(const PosteriorSpec& spec, const GaussianApprox& approx, int cells_per_dim) {
  if (cells_per_dim < 50) warn("tv_grid: fewer than 50 cells per dimension; quadrature error may dominate");
  const Index d = spec.dim();
  const Bounds box = spec.model->bounds();
  return tv_box([&spec](const Vector& q) { return log_posterior_unnorm(spec, q); },
                Vector::Constant(d, box.q_min), Vector::Constant(d, box.q_max), approx.original(), cells_per_dim);
}

TVEstimate tv_importance(const LogDensity& log_target, const MultivariateNormal& phi, long m, std::uint64_t seed) {
  if (m < kBatches) throw std::invalid_argument("tv_importance: sample size too small");
  Rng rng(seed);
  std::vector<Vector> draws;
  draws.reserve(static_cast<std::size_t>(m));
  for (long i = 0; i < m; ++i) draws.push_back(phi.sample(rng));

  std::vector<double> log_w(draws.size());
  parallel_for(draws.size(), [&](std::size_t i) {
    const double lt = log_target(draws[i]);
    log_w[i] = lt == kNegInf ? kNegInf : lt - phi.log_pdf(draws[i]);
  });
  double max_lw = kNegInf;
  for (double v : log_w) max_lw = std::max(max_lw, v);
  if (max_lw == kNegInf) throw DisjointSupport("tv_importance: every proposal has zero target density");

  double z_hat = 0.0;
  for (double v : log_w) z_hat += std::exp(v - max_lw);
  z_hat /= static_cast<double>(m);

  std::vector<double> batch(kBatches, 0.0);
  const long per_batch = m / kBatches;
  double total = 0.0;
  for (long i = 0; i < m; ++i) {
    const double a = std::abs(std::exp(log_w[static_cast<std::size_t>(i)] - max_lw) / z_hat - 1.0);
    total += a;
    const long b = std::min<long>(i / per_batch, kBatches - 1);
    batch[static_cast<std::size_t>(b)] += a;
  }
  double mean_b = 0.0;
  for (int b = 0; b < kBatches; ++b) {
    const long size = b == kBatches - 1 ? m - per_batch * (kBatches - 1) : per_batch;
    batch[static_cast<std::size_t>(b)] = 0.5 * batch[static_cast<std::size_t>(b)] / static_cast<double>(size);
    mean_b += batch[static_cast<std::size_t>(b)];
  }
  mean_b /= kBatches;
  double var_b = 0.0;
  for (double v : batch) var_b += (v - mean_b) * (v - mean_b);
  var_b /= (kBatches - 1);

  TVEstimate out;
  out.method = TVMethod::Importance;
  out.m = m;
  out.value = std::clamp(0.5 * total / static_cast<double>(m), 0.0, 1.0);
  out.std_err = std::sqrt(var_b / kBatches);
  return out;
}

TVEstimate tv_importance(const PosteriorSpec& spec, const GaussianApprox& approx, long m, std::uint64_t seed) {
  if (m < 10000) throw std::invalid_argument("tv_importance: m must be >= 1e4");
  return tv_importance([&spec](const Vector& q) { return log_posterior_unnorm(spec, q); }, approx.original(), m,
                       seed);
}

double gaussian_ball_tail(const MultivariateNormal& phi, double radius) {
  const Index d = phi.dim();
  if (!(radius > 0.0)) return 1.0;
  if (d == 1) {
    const double s = std::sqrt(phi.cov()(0, 0));
    const double mu = phi.mean()[0];
    return normal_cdf((-radius - mu) / s) + normal_cdf((mu - radius) / s);
  }
  // |X|^2 = sum_j lambda_j (z_j + delta_j)^2 after diagonalising the covariance; Imhof inversion
  // with everything scaled by radius^2 so the threshold is 1.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(phi.cov());
  const Vector lambda = eig.eigenvalues() / (radius * radius);
  const Vector shift = eig.eigenvectors().transpose() * phi.mean();
  Vector delta_sq(d);
  for (Index j = 0; j < d; ++j) delta_sq[j] = shift[j] * shift[j] / (eig.eigenvalues()[j]);

  auto integrand = [&](double u) {
    if (u == 0.0) return 0.5 * (lambda.dot((Vector::Ones(d) + delta_sq)) - 1.0);
    double theta = -0.5 * u;
    double log_rho = 0.0;
    for (Index j = 0; j < d; ++j) {
      const double lu = lambda[j] * u;
      const double q = 1.0 + lu * lu;
      theta += 0.5 * (std::atan(lu) + delta_sq[j] * lu / q);
      log_rho += 0.25 * std::log(q) + 0.5 * delta_sq[j] * lu * lu / q;
    }
    return std::sin(theta) / (u * std::exp(log_rho));
  };
  // Chernoff bounds settle the cases where either side has negligible mass.
  double lambda_max = lambda.maxCoeff();
  auto log_mgf = [&](double s) {  // log E exp(s Q), Q = |X|^2 / radius^2, s < 1 / (2 lambda_max)
    double acc = 0.0;
    for (Index j = 0; j < d; ++j) {
      const double w = 1.0 - 2.0 * s * lambda[j];
      acc += -0.5 * std::log(w) + delta_sq[j] * lambda[j] * s / w;
    }
    return acc;
  };
  auto golden_min = [](const std::function<double(double)>& f, double lo, double hi) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 200; ++it) {
      if (f1 < f2) {
        hi = x2; x2 = x1; f2 = f1; x1 = hi - g * (hi - lo); f1 = f(x1);
      } else {
        lo = x1; x1 = x2; f1 = f2; x2 = lo + g * (hi - lo); f2 = f(x2);
      }
    }
    return std::min(f1, f2);
  };
  constexpr double kNegligible = 1e-13;
  const double log_upper = golden_min([&](double s) { return log_mgf(s) - s; }, 0.0, 0.5 / lambda_max * (1 - 1e-12));
  if (log_upper < std::log(kNegligible)) return 0.0;
  const double log_lower = golden_min([&](double s) { return log_mgf(-s) + s; }, 0.0, 1e6);
  if (log_lower < std::log(kNegligible)) return 1.0;

  // theta(u) ~ -u/2 for large u, so integrating by parts bounds the remainder beyond U by
  // roughly 2 h(U) / |theta'(U)| with h = 1/(u rho); require |theta'| >= 1/4 and keep a margin.
  auto theta_rho = [&](double u, double* log_rho) {
    double theta = -0.5 * u;
    *log_rho = 0.0;
    for (Index j = 0; j < d; ++j) {
      const double lu = lambda[j] * u;
      const double q = 1.0 + lu * lu;
      theta += 0.5 * (std::atan(lu) + delta_sq[j] * lu / q);
      *log_rho += 0.25 * std::log(q) + 0.5 * delta_sq[j] * lu * lu / q;
    }
    return theta;
  };
  auto remainder_bound = [&](double u) {
    double lr = 0.0, dummy = 0.0;
    const double eps = 1e-6 * u;
    const double slope = (theta_rho(u + eps, &dummy) - theta_rho(u - eps, &dummy)) / (2.0 * eps);
    theta_rho(u, &lr);
    if (std::abs(slope) < 0.25) return std::numeric_limits<double>::infinity();
    return 4.0 * std::exp(-std::log(u) - lr) / std::abs(slope);
  };

  // Large scaled eigenvalues put structure on the 1/lambda scale near the origin, so bisect
  // segments until the Kronrod error estimate meets an absolute budget per unit length
  // (or a relative one where the integrand is large).
  std::function<double(double, double, int)> adaptive = [&](double lo, double hi, int depth) {
    double err = 0.0, l1 = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, lo, hi, 0, 0.0, &err, &l1);
    if (depth == 0 || err <= 1e-14 * (hi - lo) + 1e-12 * l1) return v;
    const double mid = 0.5 * (lo + hi);
    return adaptive(lo, mid, depth - 1) + adaptive(mid, hi, depth - 1);
  };
  constexpr double kSegment = std::numbers::pi;
  constexpr long kMaxSegments = 2'000'000;
  double acc = 0.0;
  double a = 0.0;
  long segments = 0;
  while (a == 0.0 || remainder_bound(a) / std::numbers::pi > 1e-10) {
    acc += adaptive(a, a + kSegment, 24);
    a += kSegment;
    if (++segments == kMaxSegments) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.3g", remainder_bound(a) / std::numbers::pi);
      warn(std::string("gaussian_ball_tail: truncating Imhof integral; remainder bound ") + buf);
      break;
    }
  }
  return std::clamp(0.5 + acc / std::numbers::pi, 0.0, 1.0);
}

double chi_square_quantile(double dof, double p) {
  return boost::math::quantile(boost::math::chi_squared_distribution<double>(dof), p);
}

MomentGap moment_gap(const SampleSet& samples, const GaussianApprox& approx, double min_ess) {
  if (samples.samples.size() < 100) throw std::invalid_argument("moment_gap: need at least 100 samples");
  const Vector ess_per = ess(samples);
  MomentGap out;
  out.min_ess = ess_per.minCoeff();
  if (out.min_ess < min_ess) {
    throw std::runtime_error("moment_gap: effective sample size " + std::to_string(out.min_ess) + " below " +
                             std::to_string(min_ess));
  }
  const Index d = samples.dim();
  const double count = static_cast<double>(samples.samples.size());
  Vector mean = Vector::Zero(d);
  for (const auto& s : samples.samples) mean += s;
  mean /= count;
  Matrix cov = Matrix::Zero(d, d);
  for (const auto& s : samples.samples) cov += (s - mean) * (s - mean).transpose();
  cov /= (count - 1.0);

  const Eigen::SelfAdjointEigenSolver<Matrix> diff((cov - approx.cov_orig).eval());
  const Eigen::SelfAdjointEigenSolver<Matrix> ref(approx.cov_orig);
  out.mean_gap = (mean - approx.center_orig).norm();
  out.cov_gap = diff.eigenvalues().cwiseAbs().maxCoeff();
  out.mean_gap_rel = out.mean_gap / std::sqrt(approx.cov_orig.trace());
  out.cov_gap_rel = out.cov_gap / ref.eigenvalues().cwiseAbs().maxCoeff();
  return out;
}

std::string to_string(CredibleSetKind k) { return k == CredibleSetKind::GaussianEllipsoid ? "ellipsoid" : "hpd"; }

CredibleSetKind credible_set_from_string(const std::string& s) {
  if (s == "ellipsoid") return CredibleSetKind::GaussianEllipsoid;
  if (s == "hpd" || s == "mcmc-hpd") return CredibleSetKind::McmcHpd;
  throw std::invalid_argument("unknown credible set '" + s + "' (expected ellipsoid|hpd)");
}

CoverageResult credible_coverage(std::shared_ptr<const ForwardModel> model, const PriorSpec& prior, const Vector& q0,
                                 double n, double alpha, int n_reps, std::uint64_t seed,
                                 const CoverageOptions& options) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("credible_coverage: alpha must lie in (0, 1)");
  if (n_reps < 1) throw std::invalid_argument("credible_coverage: n_reps must be positive");
  const double radius_sq = chi_square_quantile(static_cast<double>(q0.size()), 1.0 - alpha);

  std::vector<char> hit(static_cast<std::size_t>(n_reps), 0);
  parallel_for(hit.size(), [&](std::size_t r) {
    const PosteriorSpec spec = synthesize_data(model, prior, q0, n, derive_seed(seed, 2 * r));
    const GaussianApprox approx = gaussian_approx(spec);
    if (options.kind == CredibleSetKind::GaussianEllipsoid) {
      hit[r] = approx.original().mahalanobis_sq(q0) <= radius_sq;
      return;
    }
    ChainConfig cfg = ChainConfig::defaults(spec.dim(), options.chain_steps, derive_seed(seed, 2 * r + 1));
    cfg.kind = ChainKind::IndependenceGauss;
    const SampleSet chain = run_independence(spec, approx, cfg);
    std::vector<double> levels = chain.log_density;
    const auto cut = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(levels.size())));
    std::nth_element(levels.begin(), levels.begin() + static_cast<std::ptrdiff_t>(cut), levels.end());
    hit[r] = log_posterior_unnorm(spec, q0) >= levels[cut];
  });

  CoverageResult out;
  out.alpha = alpha;
  out.n_reps = n_reps;
  for (char h : hit) out.hits += h;
  out.coverage = static_cast<double>(out.hits) / n_reps;
  out.ci_halfwidth = 2.0 * std::sqrt(out.coverage * (1.0 - out.coverage) / n_reps);
  return out;
}

std::vector<ContractionResult> contraction_probe(const SampleSet& samples, const Vector& q0, double n, double d,
                                                 double K, const std::vector<double>& M_list) {
  if (samples.samples.empty()) throw std::invalid_argument("contraction_probe: no samples");
  const double eps_n = K_of_d(d, K) / std::sqrt(n);
  std::vector<double> dist;
  dist.reserve(samples.samples.size());
  for (const auto& s : samples.samples) dist.push_back((s - q0).norm());
  std::vector<ContractionResult> out;
  for (double M : M_list) {
    long outside = 0;
    for (double r : dist) outside += r >= M * eps_n;
    out.push_back({M, eps_n, static_cast<double>(outside) / static_cast<double>(dist.size())});
  }
  return out;
}

TailMass tail_mass_probe(const SampleSet& samples, const GaussianApprox& approx, const Vector& q0, double n,
                         double d, double K) {
  if (samples.samples.empty()) throw std::invalid_argument("tail_mass_probe: no samples");
  TailMass out;
  out.radius = K_of_d(d, K);
  const double root_n = std::sqrt(n);
  long outside = 0;
  for (const auto& s : samples.samples) outside += (root_n * (s - q0)).norm() > out.radius;
  out.posterior_tail = static_cast<double>(outside) / static_cast<double>(samples.samples.size());
  out.gaussian_tail = gaussian_ball_tail(approx.local(), out.radius);
  return out;
}

}  // namespace bvmlab
