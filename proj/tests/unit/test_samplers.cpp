#include "bvmlab/samplers.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>

using namespace bvmlab;
using bvmlab::testing::medium_model;

namespace {

PosteriorSpec prior_only(Index N) {
  const auto model = medium_model(static_cast<int>(N));
  PosteriorSpec spec;
  spec.model = model;
  spec.prior = PriorSpec::uniform(model->bounds());
  spec.q0 = default_truth(model->grid()).q;
  spec.eta = Vector::Zero(model->dim());
  spec.g_q0 = model->evaluate(spec.q0);
  spec.y = spec.g_q0;
  spec.n = 0.0;
  return spec;
}

std::vector<double> component(const SampleSet& s, Index k) {
  std::vector<double> out;
  for (const auto& v : s.samples) out.push_back(v[k]);
  return out;
}

}  // namespace

TEST_CASE("reflection") {
  const double lo = 0.1, hi = 10.0;
  for (double x : {0.1, 3.0, 10.0}) CHECK(reflect_into(x, lo, hi) == x);
  CHECK(reflect_into(10.5, lo, hi) == doctest::Approx(9.5));
  CHECK(reflect_into(-0.4, lo, hi) == doctest::Approx(0.6));
  CHECK(reflect_into(10.0 + 9.9 + 1.0, lo, hi) == doctest::Approx(1.1));
  Rng rng(3);
  std::uniform_real_distribution<double> far(-40.0, 50.0), near(0.0, 9.9);
  for (int t = 0; t < 1000; ++t) {
    const double x = far(rng);
    const double r = reflect_into(x, lo, hi);
    CHECK(r >= lo);
    CHECK(r <= hi);
    CHECK(reflect_into(r, lo, hi) == r);
    // a single mirror across the crossed endpoint is undone by mirroring back
    const double past_hi = hi + near(rng);
    CHECK(2.0 * hi - reflect_into(past_hi, lo, hi) == doctest::Approx(past_hi).epsilon(1e-14));
    const double past_lo = lo - near(rng);
    CHECK(2.0 * lo - reflect_into(past_lo, lo, hi) == doctest::Approx(past_lo).epsilon(1e-14));
  }
}

TEST_CASE("chain configuration") {
  ChainConfig cfg = ChainConfig::defaults(4, 1000, 1);
  CHECK(cfg.step_scale == doctest::Approx(1.2));
  CHECK(cfg.n_burn == 200);
  cfg.n_burn = 1000;
  CHECK_THROWS(cfg.validate());
  cfg = ChainConfig::defaults(4, 1000, 1);
  cfg.thin = 0;
  CHECK_THROWS(cfg.validate());
  CHECK(chain_kind_from_string("rwm") == ChainKind::RwmReflect);
  CHECK(to_string(ChainKind::IndependenceGauss) == "independence");
}

TEST_CASE("random walk on the prior has the midpoint as mean") {
  const PosteriorSpec spec = prior_only(3);
  ChainConfig cfg = ChainConfig::defaults(4, 60000, 17);
  cfg.step_scale = 4.0;
  const SampleSet s = run_rwm(spec, cfg);
  const Vector n_eff = ess(s);
  for (Index k = 0; k < 4; ++k) {
    const auto xs = component(s, k);
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= xs.size();
    const double se = 9.9 / std::sqrt(12.0) / std::sqrt(n_eff[k]);
    CHECK(std::abs(mean - 5.05) <= 3.0 * se);
  }
}

TEST_CASE("random walk reproduces the scalar posterior CDF") {
  const auto model = medium_model(2);
  const PosteriorSpec spec = synthesize_data(model, PriorSpec::uniform({}), Vector::Constant(1, 2.0), 1e3, 31);
  ChainConfig cfg = ChainConfig::defaults(1, 250000, 5);
  cfg.thin = 2;
  const SampleSet s = run_rwm(spec, cfg);
  REQUIRE(s.samples.size() >= 100000);
  std::vector<double> xs = component(s, 0);
  std::sort(xs.begin(), xs.end());

  // quadrature CDF on a fine midpoint grid
  const int cells = 200000;
  const double lo = 0.1, width = 9.9;
  std::vector<double> logp(cells);
  double top = -1e300;
  for (int i = 0; i < cells; ++i) {
    logp[i] = log_posterior_unnorm(spec, Vector::Constant(1, lo + width * (i + 0.5) / cells));
    top = std::max(top, logp[i]);
  }
  std::vector<double> cdf(cells + 1, 0.0);
  for (int i = 0; i < cells; ++i) cdf[i + 1] = cdf[i] + std::exp(logp[i] - top);
  for (double& c : cdf) c /= cdf.back();

  double sup = 0.0;
  for (std::size_t r = 0; r < xs.size(); r += 97) {
    const double pos = (xs[r] - lo) / width * cells;
    const int i = std::clamp(static_cast<int>(pos), 0, cells - 1);
    const double F = cdf[i] + (cdf[i + 1] - cdf[i]) * (pos - i);
    sup = std::max(sup, std::abs(F - (r + 0.5) / xs.size()));
  }
  CHECK(sup <= 0.02);
}

TEST_CASE("chains are deterministic, stay in the box and have finite density") {
  const auto model = medium_model(3);
  const PosteriorSpec spec =
      synthesize_data(model, PriorSpec::truncated_normal({}), default_truth(model->grid()).q, 1e4, 2);
  const GaussianApprox approx = gaussian_approx(spec);
  for (ChainKind kind : {ChainKind::RwmReflect, ChainKind::IndependenceGauss}) {
    ChainConfig cfg = ChainConfig::defaults(4, 5000, 8);
    cfg.kind = kind;
    const SampleSet a = kind == ChainKind::RwmReflect ? run_rwm(spec, cfg) : run_independence(spec, approx, cfg);
    const SampleSet b = kind == ChainKind::RwmReflect ? run_rwm(spec, cfg) : run_independence(spec, approx, cfg);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
      CHECK(a.samples[i] == b.samples[i]);
      CHECK(model->bounds().contains(a.samples[i]));
      CHECK(std::isfinite(a.log_density[i]));
    }
    CHECK(a.acceptance_rate >= 0.0);
    CHECK(a.acceptance_rate <= 1.0);
  }
}

TEST_CASE("independence sampler accepts everything when the proposal is the target") {
  Matrix a(2, 2);
  a << 1.0, 0.2, -0.3, 0.8;
  auto lin = std::make_shared<const LinearForwardModel>(a, Vector::Zero(2), Bounds{});
  const PosteriorSpec spec = synthesize_data(lin, PriorSpec::uniform({}), Vector::Constant(2, 5.0), 1e2, 3);
  const SampleSet s = run_independence(spec, gaussian_approx(spec), ChainConfig::defaults(2, 5000, 4));
  CHECK(s.acceptance_rate >= 0.999);
}

TEST_CASE("independence acceptance grows with n") {
  const auto model = medium_model(3);
  const Vector q0 = default_truth(model->grid()).q;
  std::vector<double> rates;
  for (double n : {1e3, 1e5, 1e7}) {
    const PosteriorSpec spec = synthesize_data(model, PriorSpec::uniform({}), q0, n, 77);
    rates.push_back(run_independence(spec, gaussian_approx(spec), ChainConfig::defaults(4, 20000, 6)).acceptance_rate);
  }
  CHECK(rates[0] < rates[1]);
  CHECK(rates[1] < rates[2]);
}

TEST_CASE("effective sample size") {
  Rng rng(12);
  std::normal_distribution<double> normal;
  const int n = 20000;
  std::vector<double> iid(n), ar(n), flat(n, 3.0);
  double prev = 0.0;
  for (int i = 0; i < n; ++i) {
    iid[i] = normal(rng);
    prev = 0.5 * prev + std::sqrt(1 - 0.25) * normal(rng);
    ar[i] = prev;
  }
  CHECK(ess_1d(iid) == doctest::Approx(n).epsilon(0.2));
  CHECK(ess_1d(flat) == doctest::Approx(1.0));
  CHECK(ess_1d(ar) / n == doctest::Approx(1.0 / 3.0).epsilon(0.25));
  CHECK_THROWS(ess_1d(std::vector<double>(50, 1.0)));
}

TEST_CASE("chain binary round trip") {
  SampleSet s;
  Rng rng(1);
  for (int i = 0; i < 7; ++i) s.samples.push_back(standard_normal_vector(3, rng));
  const auto path = std::filesystem::temp_directory_path() / "bvmlab_chain_roundtrip.bin";
  write_chain_binary(path, s);
  CHECK(std::filesystem::file_size(path) == 16 + 7 * 3 * 8);
  const SampleSet back = read_chain_binary(path);
  REQUIRE(back.samples.size() == 7);
  for (int i = 0; i < 7; ++i) CHECK(back.samples[i] == s.samples[i]);
  std::filesystem::remove(path);
}
