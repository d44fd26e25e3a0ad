#pragma once

#include "bvmlab/common.hpp"
#include "bvmlab/forward_model.hpp"

#include <memory>
#include <utility>
#include <variant>
#include <vector>

namespace bvmlab {

/// Uniform grid on the unit square with N subdivisions (h = 1/N) and d = (N-1)^2
/// interior nodes in natural row-wise order: k = (j-1)(N-1) + (i-1).
class GridSpec {
 public:
  explicit GridSpec(int subdivisions);

  int subdivisions() const { return n_; }
  int interior_per_side() const { return n_ - 1; }
  Index dim() const { return static_cast<Index>(n_ - 1) * (n_ - 1); }
  double spacing() const { return 1.0 / n_; }
  double coordinate(int i) const { return static_cast<double>(i) / n_; }

  /// 1-based interior node (i, j) -> 0-based row-wise index.
  Index index(int i, int j) const;
  /// Inverse of index().
  std::pair<int, int> node(Index k) const;

 private:
  int n_;
};

using ScalarField = std::function<double(double, double)>;

/// Coefficient values q at interior nodes together with the admissible box.
struct MediumField {
  Vector q;
  Bounds bounds;

  static MediumField constant(const GridSpec& grid, double value, Bounds bounds = {});
  static MediumField from_function(const GridSpec& grid, const ScalarField& fn, Bounds bounds = {});

  /// Throws BoundsError if any component leaves [q_min, q_max].
  void validate() const;
};

/// Source and boundary data sampled on a grid. g_vec holds the sum of the Dirichlet values
/// adjacent to each interior node (it enters the system scaled by h^-2).
struct ProblemData {
  Vector f_vec;
  Vector g_vec;
  ScalarField f_fn;
  ScalarField g_fn;

  static ProblemData from_functions(const GridSpec& grid, ScalarField f, ScalarField g);
  static ProblemData constant(const GridSpec& grid, double f, double g);

  /// f > 0 at every interior node and g > 0 at every boundary node.
  bool positive(const GridSpec& grid) const;
};

/// Boundary vector built by walking the 5-point stencil of every interior node.
Vector boundary_vector_stencil(const GridSpec& grid, const ScalarField& g);

/// Boundary vector laid out as the block display of the discrete system: block b
/// (b = 1..N-1) collects g_{0,e}/g_{N,e} in its first/last block and g_{b,0}/g_{b,N} at
/// its first/last element. Kept as an independent cross-check of the stencil route.
Vector boundary_vector_block_display(const GridSpec& grid, const ScalarField& g);

/// Block-tridiagonal 5-point matrix A: diagonal blocks B = tridiag(-1, 4, -1), off-diagonal blocks -I.
SparseMatrix laplacian_matrix(const GridSpec& grid);

/// Analytic spectrum of A: 2(2 - cos(i pi/N) - cos(j pi/N)), i, j = 1..N-1, ascending.
std::vector<double> eigenvalues_of_A(const GridSpec& grid);

/// Assembled operator h^-2 A + diag(q) with a cached Cholesky factorization.
/// Immutable after construction; concurrent solve() calls are safe.
class ForwardSystem {
 public:
  ForwardSystem(GridSpec grid, MediumField medium);

  const GridSpec& grid() const { return grid_; }
  const MediumField& medium() const { return medium_; }
  const SparseMatrix& matrix() const { return matrix_; }

  Vector solve(const Vector& rhs) const;
  Matrix solve(const Matrix& rhs) const;

 private:
  using DenseFactor = Eigen::LLT<Matrix>;
  using SparseFactor = Eigen::SimplicialLLT<SparseMatrix>;

  GridSpec grid_;
  MediumField medium_;
  SparseMatrix matrix_;
  std::shared_ptr<const std::variant<DenseFactor, SparseFactor>> factor_;
};

struct ForwardSolution {
  Vector u;
};

struct MaxPrincipleReport {
  double min_u = 0.0;
  double max_u = 0.0;
  bool data_positive = false;  ///< precondition f > 0, g > 0
  bool pass = false;           ///< min_u > 0
};

ForwardSystem assemble(const GridSpec& grid, const MediumField& q, const ProblemData& data);

/// Solves M u = f + h^-2 g; throws InternalError if the residual exceeds 1e-10 (1 + |rhs|).
ForwardSolution solve(const ForwardSystem& sys, const ProblemData& data);

MaxPrincipleReport max_principle_check(const ForwardSolution& u, const GridSpec& grid,
                                       const ProblemData& data);

/// Smooth interior truth used by default: 2 + sin(pi x) sin(pi y).
MediumField default_truth(const GridSpec& grid, Bounds bounds = {});

/// The discrete elliptic forward map q -> u as a ForwardModel.
class MediumForwardModel final : public ForwardModel {
 public:
  MediumForwardModel(GridSpec grid, ProblemData data, Bounds bounds = {});

  Index dim() const override { return grid_.dim(); }
  Bounds bounds() const override { return bounds_; }
  Vector evaluate(const Vector& q) const override;
  Matrix jacobian(const Vector& q) const override;

  const GridSpec& grid() const { return grid_; }
  const ProblemData& data() const { return data_; }

 private:
  GridSpec grid_;
  ProblemData data_;
  Bounds bounds_;
};

}  // namespace bvmlab
