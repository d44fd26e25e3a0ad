#include "bvmlab/jacobian_ops.hpp"

#include <cmath>
#include <set>

namespace bvmlab {

namespace {
constexpr Index kMaxSpectralDim = 4096;
}

JacobianMatrix jacobian(const ForwardSystem& sys, const ForwardSolution& u) {
  const Index d = sys.grid().dim();
  if (u.u.size() != d) throw DimensionError("jacobian: solution length does not match system");
  Matrix rhs = Matrix::Zero(d, d);
  rhs.diagonal() = -u.u;
  return {sys.solve(rhs), sys.medium().q};
}

double asymmetry(const Matrix& J) {
  const double norm = J.norm();
  if (norm == 0.0) return 0.0;
  return (J - J.transpose()).norm() / norm;
}

SpectralReport spectral_report(const Matrix& J) {
  if (J.rows() != J.cols()) throw DimensionError("spectral_report: J must be square");
  if (J.rows() > kMaxSpectralDim) throw std::invalid_argument("spectral_report: d exceeds 4096");
  if (!J.allFinite()) throw std::invalid_argument("spectral_report: J has non-finite entries");
  Eigen::BDCSVD<Matrix> svd(J);
  if (svd.info() != Eigen::Success) throw InternalError("spectral_report: SVD failed");
  const Vector& s = svd.singularValues();
  SpectralReport report;
  report.d = J.rows();
  report.sigma_max = s[0];
  report.sigma_min = s[s.size() - 1];
  report.sigma_max_inv = 1.0 / report.sigma_min;
  report.sigma_min_inv = 1.0 / report.sigma_max;
  report.asymmetry = asymmetry(J);
  return report;
}

GrowthFit sigma_growth_fit(std::span<const SpectralReport> reports) {
  std::set<Index> distinct;
  for (const auto& r : reports) distinct.insert(r.d);
  if (distinct.size() < 3) {
    throw std::invalid_argument("sigma_growth_fit: need at least 3 distinct dimensions");
  }
  const double m = static_cast<double>(reports.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : reports) {
    const double x = std::log(static_cast<double>(r.d));
    const double y = std::log(r.sigma_max_inv);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  GrowthFit fit;
  fit.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / m;
  return fit;
}

}  // namespace bvmlab
