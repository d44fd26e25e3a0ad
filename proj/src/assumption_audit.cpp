#include "bvmlab/assumption_audit.hpp"

#include <algorithm>
#include <cmath>

namespace bvmlab {

double log_log_slope(const std::vector<AuditReport::Point>& points) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (const auto& p : points) {
    if (!(p.residual > 0.0) || !(p.step > 0.0)) continue;
    const double x = std::log(p.step);
    const double y = std::log(p.residual);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  const double denom = m * sxx - sx * sx;
  if (m < 2 || denom <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (m * sxy - sx * sy) / denom;
}

AuditReport audit_stability(const ForwardModel& model, int n_pairs, std::uint64_t seed) {
  if (n_pairs < 10) throw std::invalid_argument("audit_stability: n_pairs must be >= 10");
  const Index d = model.dim();
  const Bounds box = model.bounds();

  // Pairs are drawn sequentially so the sample does not depend on the worker count.
  Rng rng(seed);
  std::uniform_real_distribution<double> uniform(box.q_min, box.q_max);
  std::vector<std::pair<Vector, Vector>> pairs;
  pairs.reserve(static_cast<std::size_t>(n_pairs));
  while (static_cast<int>(pairs.size()) < n_pairs) {
    Vector q1(d), q2(d);
    for (Index k = 0; k < d; ++k) q1[k] = uniform(rng);
    for (Index k = 0; k < d; ++k) q2[k] = uniform(rng);
    if ((q1 - q2).norm() == 0.0) continue;
    pairs.emplace_back(std::move(q1), std::move(q2));
  }

  struct PairResult {
    double lower, upper, ratio, step, residual;
  };
  std::vector<PairResult> results(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    const auto& [q1, q2] = pairs[i];
    const Vector g1 = model.evaluate(q1);
    const Vector g2 = model.evaluate(q2);
    const Vector dq = q1 - q2;
    const double dq_norm = dq.norm();
    const double dg_norm = (g1 - g2).norm();
    const double residual = (g1 - g2 - model.jacobian(q2) * dq).norm();
    results[i] = {dg_norm / dq_norm, dq_norm / (static_cast<double>(d) * dg_norm),
                  residual / (dq_norm * dq_norm), dq_norm, residual};
  });

  AuditReport report;
  report.d = d;
  report.n_pairs = n_pairs;
  for (const auto& r : results) {
    report.a2_lower = std::max(report.a2_lower, r.lower);
    report.a2_upper = std::max(report.a2_upper, r.upper);
    report.a3_ratio = std::max(report.a3_ratio, r.ratio);
    report.max_residual = std::max(report.max_residual, r.residual);
    report.points.push_back({r.step, r.residual});
  }
  report.a3_slope = log_log_slope(report.points);
  return report;
}

AuditReport audit_linearization(const ForwardModel& model, const Vector& base_q,
                                const std::vector<double>& radii, int n_dirs, std::uint64_t seed) {
  const Index d = model.dim();
  const Bounds box = model.bounds();
  if (base_q.size() != d) throw DimensionError("audit_linearization: base point length");
  if (radii.empty() || n_dirs < 1) throw std::invalid_argument("audit_linearization: empty radii or directions");
  for (double t : radii) {
    if (!(t > 0.0)) throw std::invalid_argument("audit_linearization: radii must be positive");
  }
  const double t_max = *std::max_element(radii.begin(), radii.end());

  Rng rng(seed);
  std::vector<Vector> directions;
  const int max_attempts = 100 * n_dirs;
  for (int attempt = 0; attempt < max_attempts && static_cast<int>(directions.size()) < n_dirs; ++attempt) {
    Vector p = standard_normal_vector(d, rng);
    p.normalize();
    if (box.contains(Vector(base_q + t_max * p))) directions.push_back(std::move(p));
  }
  if (directions.empty()) {
    throw std::domain_error("audit_linearization: base point too close to boundary");
  }

  const Vector g0 = model.evaluate(base_q);
  const Matrix j0 = model.jacobian(base_q);
  std::vector<AuditReport::Point> points(directions.size() * radii.size());
  parallel_for(directions.size(), [&](std::size_t i) {
    const Vector jp = j0 * directions[i];
    for (std::size_t r = 0; r < radii.size(); ++r) {
      const double t = radii[r];
      const Vector gt = model.evaluate(base_q + t * directions[i]);
      points[i * radii.size() + r] = {t, (gt - g0 - t * jp).norm()};
    }
  });

  AuditReport report;
  report.d = d;
  report.n_pairs = static_cast<int>(directions.size());
  for (const auto& p : points) {
    report.a3_ratio = std::max(report.a3_ratio, p.residual / (p.step * p.step));
    report.max_residual = std::max(report.max_residual, p.residual);
  }
  report.points = std::move(points);
  report.a3_slope = log_log_slope(report.points);
  return report;
}

}  // namespace bvmlab
