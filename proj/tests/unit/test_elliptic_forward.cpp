#include "bvmlab/elliptic_forward.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <random>

using namespace bvmlab;
using bvmlab::testing::kPi;

TEST_CASE("grid indexing is row-wise and invertible") {
  const GridSpec grid(5);
  CHECK(grid.dim() == 16);
  CHECK(grid.index(1, 1) == 0);
  CHECK(grid.index(2, 1) == 1);
  CHECK(grid.index(1, 2) == 4);
  CHECK(grid.index(4, 4) == 15);
  for (Index k = 0; k < grid.dim(); ++k) {
    const auto [i, j] = grid.node(k);
    CHECK(grid.index(i, j) == k);
  }
  CHECK_THROWS(GridSpec(1));
}

TEST_CASE("assembly: single node and constant shift") {
  const GridSpec g2(2);
  const ForwardSystem s2 = assemble(g2, MediumField::constant(g2, 1.0), ProblemData::constant(g2, 1.0, 1.0));
  CHECK(Matrix(s2.matrix())(0, 0) == doctest::Approx(17.0).epsilon(1e-15));

  const GridSpec g3(3);
  const Bounds zero_ok{0.0, 10.0};
  const ForwardSystem s3 = assemble(g3, MediumField::constant(g3, 0.0, zero_ok), ProblemData::constant(g3, 1.0, 1.0));
  Matrix expected(4, 4);
  expected << 4, -1, -1, 0,
             -1, 4, 0, -1,
             -1, 0, 4, -1,
              0, -1, -1, 4;
  CHECK((Matrix(s3.matrix()) - 9.0 * expected).norm() < 1e-12);

  for (int N : {3, 6, 9}) {
    const GridSpec g(N);
    const ForwardSystem s = assemble(g, MediumField::constant(g, 2.5), ProblemData::constant(g, 1.0, 1.0));
    const Matrix shift = Matrix(s.matrix()) - Matrix(laplacian_matrix(g)) * (N * N);
    CHECK((shift - 2.5 * Matrix::Identity(g.dim(), g.dim())).norm() < 1e-10);
  }
}

TEST_CASE("assembly rejects bad input") {
  const GridSpec g(4);
  MediumField q = MediumField::constant(g, 1.0);
  q.q[3] = 20.0;
  CHECK_THROWS_AS(assemble(g, q, ProblemData::constant(g, 1.0, 1.0)), BoundsError);
  const GridSpec other(3);
  CHECK_THROWS_AS(assemble(g, MediumField::constant(g, 1.0), ProblemData::constant(other, 1.0, 1.0)),
                  DimensionError);
}

TEST_CASE("assembled matrix is symmetric with A's sparsity pattern") {
  const GridSpec g(7);
  Rng rng(3);
  std::uniform_real_distribution<double> unif(0.1, 10.0);
  MediumField q = MediumField::constant(g, 1.0);
  for (Index k = 0; k < g.dim(); ++k) q.q[k] = unif(rng);
  const Matrix M = Matrix(assemble(g, q, ProblemData::constant(g, 1.0, 1.0)).matrix());
  CHECK((M - M.transpose()).norm() == 0.0);
  const Matrix A = Matrix(laplacian_matrix(g));
  for (Index r = 0; r < A.rows(); ++r) {
    CHECK(A(r, r) == 4.0);
    for (Index c = 0; c < A.cols(); ++c) {
      if (r == c) continue;
      const auto [ir, jr] = g.node(r);
      const auto [ic, jc] = g.node(c);
      const bool neighbour = std::abs(ir - ic) + std::abs(jr - jc) == 1;
      CHECK(A(r, c) == (neighbour ? -1.0 : 0.0));
    }
  }
}

TEST_CASE("solve: closed-form cases") {
  const GridSpec g4(4);
  const ProblemData ones = ProblemData::constant(g4, 1.0, 1.0);
  const ForwardSolution u1 = solve(assemble(g4, MediumField::constant(g4, 1.0), ones), ones);
  CHECK((u1.u - Vector::Ones(9)).cwiseAbs().maxCoeff() <= 1e-10);

  const GridSpec g2(2);
  const ProblemData no_boundary = ProblemData::constant(g2, 1.0, 0.0);
  const ForwardSolution u2 = solve(assemble(g2, MediumField::constant(g2, 1.0), no_boundary), no_boundary);
  CHECK(u2.u[0] == doctest::Approx(1.0 / 17.0).epsilon(1e-14));

  // q = c, g = k, f = c k reproduces u = k
  for (int N : {3, 8, 16}) {
    const GridSpec g(N);
    const double c = 3.7, k = 0.6;
    const ProblemData data = ProblemData::constant(g, c * k, k);
    const ForwardSolution u = solve(assemble(g, MediumField::constant(g, c), data), data);
    CHECK((u.u.array() - k).abs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("manufactured solution converges at second order") {
  const Bounds zero_ok{0.0, 10.0};
  auto exact = [](double x, double y) { return std::sin(kPi * x) * std::sin(kPi * y); };
  auto source = [&](double x, double y) { return 2.0 * kPi * kPi * exact(x, y); };
  std::vector<double> errs;
  for (int N : {8, 16, 32, 64}) {
    const GridSpec g(N);
    const ProblemData data = ProblemData::from_functions(g, source, [](double, double) { return 0.0; });
    const ForwardSolution u = solve(assemble(g, MediumField::constant(g, 0.0, zero_ok), data), data);
    double err = 0.0;
    for (Index k = 0; k < g.dim(); ++k) {
      const auto [i, j] = g.node(k);
      err = std::max(err, std::abs(u.u[k] - exact(g.coordinate(i), g.coordinate(j))));
    }
    errs.push_back(err);
  }
  for (std::size_t s = 0; s + 1 < errs.size(); ++s) {
    const double order = std::log2(errs[s] / errs[s + 1]);
    CHECK(order >= 1.8);
    CHECK(order <= 2.2);
  }
}

TEST_CASE("boundary vector: stencil route against the block display") {
  for (int N : {2, 3, 5}) {
    const GridSpec g(N);
    auto symmetric = [](double x, double y) { return 1.0 + x * y + x * x + y * y; };
    const Vector s = boundary_vector_stencil(g, symmetric);
    const Vector b = boundary_vector_block_display(g, symmetric);
    CHECK((s - b).norm() <= 1e-14 * (1.0 + s.norm()));

    // asymmetric data: the display lists node (i, j) at block i, element j
    auto skewed = [](double x, double y) { return 1.0 + 3.0 * x + 0.5 * y * y; };
    const Vector s2 = boundary_vector_stencil(g, skewed);
    const Vector b2 = boundary_vector_block_display(g, skewed);
    for (int i = 1; i < N; ++i) {
      for (int j = 1; j < N; ++j) {
        CHECK(b2[(i - 1) * (N - 1) + (j - 1)] == doctest::Approx(s2[g.index(i, j)]).epsilon(1e-14));
      }
    }
  }
  // zero at nodes away from the boundary; corners collect two values
  const GridSpec g(5);
  const Vector s = boundary_vector_stencil(g, [](double, double) { return 1.0; });
  CHECK(s[g.index(2, 2)] == 0.0);
  CHECK(s[g.index(1, 1)] == 2.0);
  CHECK(s[g.index(2, 1)] == 1.0);
}

TEST_CASE("analytic spectrum of A") {
  CHECK(eigenvalues_of_A(GridSpec(2)) == std::vector<double>{4.0});
  CHECK(eigenvalues_of_A(GridSpec(4)).front() == doctest::Approx(2.0 * (2.0 - 2.0 * std::cos(kPi / 4))).epsilon(1e-12));
  CHECK(eigenvalues_of_A(GridSpec(4)).front() == doctest::Approx(1.17157).epsilon(1e-5));
  for (int N : {2, 3, 5, 8, 16}) {
    const GridSpec g(N);
    Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix(laplacian_matrix(g)), Eigen::EigenvaluesOnly);
    const auto lam = eigenvalues_of_A(g);
    REQUIRE(lam.size() == static_cast<std::size_t>(g.dim()));
    for (Index k = 0; k < g.dim(); ++k) CHECK(std::abs(es.eigenvalues()[k] - lam[k]) <= 1e-8);
  }
  double lo = 1e300, hi = 0.0;
  for (int N = 4; N <= 32; N *= 2) {
    const double scaled = eigenvalues_of_A(GridSpec(N)).front() * N * N;
    lo = std::min(lo, scaled);
    hi = std::max(hi, scaled);
  }
  CHECK(hi / lo < 1.1);  // tends to 2 pi^2
}

TEST_CASE("maximum principle") {
  std::vector<double> mins;
  for (int N : {4, 8, 16}) {
    const GridSpec g(N);
    const ProblemData data = ProblemData::constant(g, 1.0, 1.0);
    const ForwardSolution u = solve(assemble(g, MediumField::constant(g, 1.0), data), data);
    const auto r = max_principle_check(u, g, data);
    CHECK(r.pass);
    CHECK(r.data_positive);
    CHECK(r.min_u == doctest::Approx(1.0).epsilon(1e-10));
    mins.push_back(r.min_u);

    const ForwardSolution v = solve(assemble(g, default_truth(g), data), data);
    const auto rv = max_principle_check(v, g, data);
    CHECK(rv.pass);
    CHECK(rv.min_u > 0.3);
    CHECK(rv.max_u <= 1.0 + 1e-12);
  }
  const GridSpec g(4);
  const ProblemData bad = ProblemData::from_functions(g, [](double x, double) { return x - 0.5; },
                                                      [](double, double) { return 1.0; });
  const ForwardSolution u = solve(assemble(g, MediumField::constant(g, 1.0), bad), bad);
  const auto r = max_principle_check(u, g, bad);
  CHECK_FALSE(r.data_positive);
}

TEST_CASE("forward map is non-increasing in q") {
  const GridSpec g(5);
  const MediumForwardModel model(g, ProblemData::constant(g, 1.0, 1.0));
  Rng rng(11);
  std::uniform_real_distribution<double> unif(0.1, 10.0), bump(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    Vector q1(g.dim()), q2(g.dim());
    for (Index k = 0; k < g.dim(); ++k) {
      q1[k] = unif(rng);
      q2[k] = std::min(10.0, q1[k] + bump(rng));
    }
    CHECK(((model.evaluate(q2) - model.evaluate(q1)).array() <= 1e-14).all());
  }
}

TEST_CASE("dense and sparse factorizations agree") {
  // d = 441 takes the sparse branch
  const GridSpec g(22);
  const ProblemData data = ProblemData::constant(g, 1.0, 1.0);
  const MediumField q = default_truth(g);
  const ForwardSolution u = solve(assemble(g, q, data), data);
  const Matrix M = Matrix(assemble(g, q, data).matrix());
  const Vector rhs = data.f_vec + (22.0 * 22.0) * data.g_vec;
  const Vector dense = M.llt().solve(rhs);
  CHECK((u.u - dense).norm() <= 1e-10 * dense.norm());
}
