#include "bvmlab/assumption_audit.hpp"
#include "helpers.hpp"

#include <doctest.h>

using namespace bvmlab;

TEST_CASE("scalar stability ratio lies in the closed-form interval") {
  // f = 1, g = 0: |dG| = |dq| / ((16 + q1)(16 + q2))
  const auto model = bvmlab::testing::medium_model(2, 1.0, 0.0);
  const AuditReport r = audit_stability(*model, 200, 42);
  CHECK(r.n_pairs == 200);
  CHECK(r.sampled_not_exhaustive);
  const double lo = 16.1 * 16.1, hi = 26.0 * 26.0;
  CHECK(r.a2_upper <= hi * (1 + 1e-9));
  CHECK(r.a2_upper >= lo * (1 - 1e-9));
  CHECK(1.0 / r.a2_lower >= lo * (1 - 1e-9));
  CHECK(std::isfinite(r.a3_ratio));
  CHECK(r.a3_ratio > 0.0);
}

TEST_CASE("stability audit is deterministic and bounded across d") {
  const auto m4 = bvmlab::testing::medium_model(4);
  const AuditReport a = audit_stability(*m4, 40, 9);
  const AuditReport b = audit_stability(*m4, 40, 9);
  CHECK(a.a2_lower == b.a2_lower);
  CHECK(a.a2_upper == b.a2_upper);
  CHECK(a.a3_ratio == b.a3_ratio);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) CHECK(a.points[i].residual == b.points[i].residual);
  CHECK_THROWS(audit_stability(*m4, 5, 1));

  double up_lo = 1e300, up_hi = 0, low_lo = 1e300, low_hi = 0;
  for (int N : {4, 8}) {
    const AuditReport r = audit_stability(*bvmlab::testing::medium_model(N), 40, 3);
    up_lo = std::min(up_lo, r.a2_upper);
    up_hi = std::max(up_hi, r.a2_upper);
    low_lo = std::min(low_lo, r.a2_lower);
    low_hi = std::max(low_hi, r.a2_lower);
  }
  CHECK(up_hi / up_lo < 10.0);
  CHECK(low_hi / low_lo < 10.0);
}

TEST_CASE("linearization remainder is quadratic at d = 9") {
  const auto model = bvmlab::testing::medium_model(4);
  const Vector base = default_truth(model->grid()).q;
  const AuditReport r = audit_linearization(*model, base, {1e-3, 3e-3, 1e-2, 3e-2, 1e-1}, 20, 5);
  CHECK(r.a3_slope >= 1.9);
  CHECK(r.a3_slope <= 2.1);
  // r(t)/t shrinks as t -> 0
  double small = 0, large = 0;
  for (const auto& p : r.points) {
    if (p.step == 1e-3) small = std::max(small, p.residual / p.step);
    if (p.step == 1e-1) large = std::max(large, p.residual / p.step);
  }
  CHECK(small < large / 50.0);
}

TEST_CASE("linear map has no remainder") {
  Rng rng(1);
  Matrix a = Matrix::Random(4, 4);
  const LinearForwardModel lin(a, Vector::Ones(4), Bounds{});
  const AuditReport r = audit_linearization(lin, Vector::Constant(4, 5.0), {1e-3, 1e-2, 1e-1}, 10, 2);
  CHECK(r.max_residual <= 1e-12);
}

TEST_CASE("radius that leaves the box rejects every direction") {
  // some component of a unit vector in R^4 has size >= 1/2, and 20/2 exceeds the box width
  const auto model = bvmlab::testing::medium_model(3);
  try {
    audit_linearization(*model, default_truth(model->grid()).q, {20.0}, 10, 1);
    FAIL("expected a domain_error");
  } catch (const std::domain_error& e) {
    CHECK(std::string(e.what()).find("base point too close to boundary") != std::string::npos);
  }
}

TEST_CASE("log-log slope") {
  std::vector<AuditReport::Point> pts;
  for (double t : {0.1, 0.2, 0.4, 0.8}) pts.push_back({t, 3.0 * t * t * t});
  CHECK(log_log_slope(pts) == doctest::Approx(3.0).epsilon(1e-12));
}
