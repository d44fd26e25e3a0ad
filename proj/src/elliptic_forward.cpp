#include "bvmlab/elliptic_forward.hpp"

#include "bvmlab/jacobian_ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace bvmlab {

namespace {

// Dense Cholesky is faster than the sparse path until the band gets wide.
constexpr Index kDenseFactorLimit = 400;

}  // namespace

GridSpec::GridSpec(int subdivisions) : n_(subdivisions) {
  if (subdivisions < 2) throw std::invalid_argument("GridSpec: N must be >= 2");
}

Index GridSpec::index(int i, int j) const {
  if (i < 1 || i > n_ - 1 || j < 1 || j > n_ - 1) {
    throw std::out_of_range("GridSpec::index: node is not interior");
  }
  return static_cast<Index>(j - 1) * (n_ - 1) + (i - 1);
}

std::pair<int, int> GridSpec::node(Index k) const {
  if (k < 0 || k >= dim()) throw std::out_of_range("GridSpec::node: index out of range");
  const int m = n_ - 1;
  return {static_cast<int>(k % m) + 1, static_cast<int>(k / m) + 1};
}

MediumField MediumField::constant(const GridSpec& grid, double value, Bounds bounds) {
  return {Vector::Constant(grid.dim(), value), bounds};
}

MediumField MediumField::from_function(const GridSpec& grid, const ScalarField& fn, Bounds bounds) {
  Vector q(grid.dim());
  for (Index k = 0; k < grid.dim(); ++k) {
    const auto [i, j] = grid.node(k);
    q[k] = fn(grid.coordinate(i), grid.coordinate(j));
  }
  return {std::move(q), bounds};
}

void MediumField::validate() const {
  for (Index k = 0; k < q.size(); ++k) {
    if (!bounds.contains(q[k])) {
      std::ostringstream msg;
      msg << "coefficient q[" << k << "] = " << q[k] << " outside [" << bounds.q_min << ", "
          << bounds.q_max << "]";
      throw BoundsError(msg.str());
    }
  }
}

Vector boundary_vector_stencil(const GridSpec& grid, const ScalarField& g) {
  const int n = grid.subdivisions();
  Vector out = Vector::Zero(grid.dim());
  for (int j = 1; j < n; ++j) {
    for (int i = 1; i < n; ++i) {
      double acc = 0.0;
      const int nbr[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
      for (const auto& p : nbr) {
        if (p[0] == 0 || p[0] == n || p[1] == 0 || p[1] == n) {
          acc += g(grid.coordinate(p[0]), grid.coordinate(p[1]));
        }
      }
      out[grid.index(i, j)] = acc;
    }
  }
  return out;
}

Vector boundary_vector_block_display(const GridSpec& grid, const ScalarField& g) {
  const int n = grid.subdivisions();
  const int m = n - 1;
  auto at = [&](int i, int j) { return g(grid.coordinate(i), grid.coordinate(j)); };
  Vector out = Vector::Zero(grid.dim());
  for (int b = 1; b <= m; ++b) {
    for (int e = 1; e <= m; ++e) {
      double v = 0.0;
      if (b == 1) v += at(0, e);
      if (b == m) v += at(n, e);
      if (e == 1) v += at(b, 0);
      if (e == m) v += at(b, n);
      out[static_cast<Index>(b - 1) * m + (e - 1)] = v;
    }
  }
  return out;
}

ProblemData ProblemData::from_functions(const GridSpec& grid, ScalarField f, ScalarField g) {
  ProblemData data;
  data.f_vec.resize(grid.dim());
  for (Index k = 0; k < grid.dim(); ++k) {
    const auto [i, j] = grid.node(k);
    data.f_vec[k] = f(grid.coordinate(i), grid.coordinate(j));
  }
  data.g_vec = boundary_vector_stencil(grid, g);
  data.f_fn = std::move(f);
  data.g_fn = std::move(g);
  return data;
}

ProblemData ProblemData::constant(const GridSpec& grid, double f, double g) {
  return from_functions(
      grid, [f](double, double) { return f; }, [g](double, double) { return g; });
}

bool ProblemData::positive(const GridSpec& grid) const {
  if ((f_vec.array() <= 0.0).any()) return false;
  if (!g_fn) return (g_vec.array() > 0.0).all();
  const int n = grid.subdivisions();
  for (int t = 0; t <= n; ++t) {
    const double x = grid.coordinate(t);
    if (g_fn(x, 0.0) <= 0.0 || g_fn(x, 1.0) <= 0.0 || g_fn(0.0, x) <= 0.0 || g_fn(1.0, x) <= 0.0) {
      return false;
    }
  }
  return true;
}

SparseMatrix laplacian_matrix(const GridSpec& grid) {
  const int m = grid.interior_per_side();
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(grid.dim()) * 5);
  for (int j = 1; j <= m; ++j) {
    for (int i = 1; i <= m; ++i) {
      const Index k = grid.index(i, j);
      entries.emplace_back(k, k, 4.0);
      if (i > 1) entries.emplace_back(k, grid.index(i - 1, j), -1.0);
      if (i < m) entries.emplace_back(k, grid.index(i + 1, j), -1.0);
      if (j > 1) entries.emplace_back(k, grid.index(i, j - 1), -1.0);
      if (j < m) entries.emplace_back(k, grid.index(i, j + 1), -1.0);
    }
  }
  SparseMatrix a(grid.dim(), grid.dim());
  a.setFromTriplets(entries.begin(), entries.end());
  return a;
}

std::vector<double> eigenvalues_of_A(const GridSpec& grid) {
  const int n = grid.subdivisions();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(grid.dim()));
  for (int i = 1; i < n; ++i) {
    for (int j = 1; j < n; ++j) {
      out.push_back(2.0 * (2.0 - std::cos(i * std::numbers::pi / n) - std::cos(j * std::numbers::pi / n)));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

ForwardSystem::ForwardSystem(GridSpec grid, MediumField medium)
    : grid_(grid), medium_(std::move(medium)) {
  if (medium_.q.size() != grid_.dim()) {
    throw DimensionError("assemble: q has length " + std::to_string(medium_.q.size()) +
                         ", grid has d = " + std::to_string(grid_.dim()));
  }
  medium_.validate();
  const double inv_h2 = 1.0 / (grid_.spacing() * grid_.spacing());
  matrix_ = inv_h2 * laplacian_matrix(grid_);
  for (Index k = 0; k < grid_.dim(); ++k) matrix_.coeffRef(k, k) += medium_.q[k];
  matrix_.makeCompressed();

  if (grid_.dim() <= kDenseFactorLimit) {
    auto factor = std::make_shared<std::variant<DenseFactor, SparseFactor>>(
        std::in_place_type<DenseFactor>, Matrix(matrix_));
    if (std::get<DenseFactor>(*factor).info() != Eigen::Success) {
      throw InternalError("ForwardSystem: Cholesky factorization failed");
    }
    factor_ = std::move(factor);
  } else {
    auto factor = std::make_shared<std::variant<DenseFactor, SparseFactor>>(
        std::in_place_type<SparseFactor>);
    std::get<SparseFactor>(*factor).compute(matrix_);
    if (std::get<SparseFactor>(*factor).info() != Eigen::Success) {
      throw InternalError("ForwardSystem: sparse Cholesky factorization failed");
    }
    factor_ = std::move(factor);
  }
}

Vector ForwardSystem::solve(const Vector& rhs) const {
  if (rhs.size() != grid_.dim()) throw DimensionError("ForwardSystem::solve: rhs length");
  return std::visit([&](const auto& f) -> Vector { return f.solve(rhs); }, *factor_);
}

Matrix ForwardSystem::solve(const Matrix& rhs) const {
  if (rhs.rows() != grid_.dim()) throw DimensionError("ForwardSystem::solve: rhs rows");
  return std::visit([&](const auto& f) -> Matrix { return f.solve(rhs); }, *factor_);
}

ForwardSystem assemble(const GridSpec& grid, const MediumField& q, const ProblemData& data) {
  if (data.f_vec.size() != grid.dim() || data.g_vec.size() != grid.dim()) {
    throw DimensionError("assemble: problem data does not match the grid");
  }
  return ForwardSystem(grid, q);
}

ForwardSolution solve(const ForwardSystem& sys, const ProblemData& data) {
  const double inv_h2 = 1.0 / (sys.grid().spacing() * sys.grid().spacing());
  const Vector rhs = data.f_vec + inv_h2 * data.g_vec;
  Vector u = sys.solve(rhs);
  const double residual = (sys.matrix() * u - rhs).norm();
  if (!(residual <= 1e-10 * (1.0 + rhs.norm()))) {
    throw InternalError("solve: residual " + std::to_string(residual) + " exceeds tolerance");
  }
  return {std::move(u)};
}

MaxPrincipleReport max_principle_check(const ForwardSolution& u, const GridSpec& grid,
                                       const ProblemData& data) {
  MaxPrincipleReport report;
  report.min_u = u.u.minCoeff();
  report.max_u = u.u.maxCoeff();
  report.data_positive = data.positive(grid);
  report.pass = report.min_u > 0.0;
  return report;
}

MediumField default_truth(const GridSpec& grid, Bounds bounds) {
  return MediumField::from_function(
      grid,
      [](double x, double y) {
        return 2.0 + std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y);
      },
      bounds);
}

MediumForwardModel::MediumForwardModel(GridSpec grid, ProblemData data, Bounds bounds)
    : grid_(grid), data_(std::move(data)), bounds_(bounds) {
  if (data_.f_vec.size() != grid_.dim() || data_.g_vec.size() != grid_.dim()) {
    throw DimensionError("MediumForwardModel: problem data does not match the grid");
  }
}

Vector MediumForwardModel::evaluate(const Vector& q) const {
  const ForwardSystem sys = assemble(grid_, MediumField{q, bounds_}, data_);
  return solve(sys, data_).u;
}

Matrix MediumForwardModel::jacobian(const Vector& q) const {
  const ForwardSystem sys = assemble(grid_, MediumField{q, bounds_}, data_);
  return bvmlab::jacobian(sys, solve(sys, data_)).J;
}

}  // namespace bvmlab
