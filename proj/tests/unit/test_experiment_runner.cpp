#include "bvmlab/experiment_runner.hpp"
#include "bvmlab/svg_plot.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace bvmlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

SweepPlan small_plan(const fs::path& dir) {
  SweepPlan p;
  p.n_grid = {2, 3};
  p.n_noise = {1e3, 1e5};
  p.output_dir = dir;
  p.is_samples = 10000;
  p.grid_cells = 400;
  p.coverage_reps = 10;
  p.chain_steps = 3000;
  return p;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("growth quantity") {
  CHECK(delta_n(4, 1e6, 1.0, DeltaVariant::CubicLog) == doctest::Approx(64.0 * std::log(4.0) / 1000.0).epsilon(1e-14));
  CHECK(delta_n(4, 1e6, 1.0, DeltaVariant::CubicLog) == doctest::Approx(0.08872).epsilon(1e-4));
  // sqrt(2/4) * (2 sqrt(2 * 2 ln 2))^2 = sqrt(0.5) * 16 ln 2
  const double general = std::sqrt(0.5) * 16.0 * std::log(2.0);
  CHECK(delta_n(2, 4, 1.0, DeltaVariant::General) == doctest::Approx(general).epsilon(1e-14));
  CHECK(delta_n(2, 4, 1.0, DeltaVariant::General) == doctest::Approx(7.84207).epsilon(1e-5));

  bool degenerate = false;
  CHECK(delta_n(1, 10, 1.0, DeltaVariant::General, &degenerate) == 0.0);
  CHECK(degenerate);
  delta_n(3, 10, 1.0, DeltaVariant::General, &degenerate);
  CHECK_FALSE(degenerate);
  CHECK_THROWS(delta_n(4, 0.0, 1.0, DeltaVariant::General));

  double prev = 1e300;
  for (double n = 1; n <= 1e16; n *= 10) {
    const double v = delta_n(9, n, 1.0, DeltaVariant::CubicLog);
    CHECK(v < prev);
    prev = v;
  }
  CHECK(prev < 1e-3);
  for (double n : {1.0, 1e4}) {
    for (int d = 3; d < 50; ++d) {
      CHECK(delta_n(d + 1, n, 1.0, DeltaVariant::General) > delta_n(d, n, 1.0, DeltaVariant::General));
    }
  }
}

TEST_CASE("plan validation and JSON") {
  SweepPlan p;
  CHECK_NOTHROW(p.validate());
  CHECK(p.cell_count() == 9);
  SweepPlan empty = p;
  empty.n_noise.clear();
  CHECK_THROWS(empty.validate());
  SweepPlan big = p;
  big.replications = 200;
  CHECK_THROWS(big.validate());

  nlohmann::json j = p.to_json();
  const SweepPlan back = SweepPlan::from_json(j);
  CHECK(back.to_json() == j);
  const SweepPlan partial = SweepPlan::from_json(nlohmann::json{{"N_list", {3}}, {"n_list", {1e4}}, {"seed", 5}});
  CHECK(partial.cell_count() == 1);
  CHECK(partial.base_seed == 5);
  CHECK(partial.coverage_reps == 50);
}

TEST_CASE("sweep: record count, resumption and determinism") {
  const fs::path a = fresh_dir("bvmlab_sweep_a");
  const SweepResult first = run_sweep(small_plan(a));
  REQUIRE(first.records.size() == 4);
  CHECK(first.computed_cells == 4);
  CHECK(first.failed_cells == 0);
  for (const auto& r : first.records) {
    CHECK(r.status == "ok");
    CHECK(r.schema_version == kRecordSchemaVersion);
    CHECK(r.tv_estimate >= 0.0);
    CHECK(r.tv_estimate <= 1.0);
    CHECK(r.tv_method == (r.d <= 2 ? "grid" : "importance"));
  }
  const std::string csv = slurp(a / "records.csv");

  const SweepResult again = run_sweep(small_plan(a));
  CHECK(again.computed_cells == 0);
  CHECK(slurp(a / "records.csv") == csv);

  const fs::path b = fresh_dir("bvmlab_sweep_b");
  run_sweep(small_plan(b));
  CHECK(slurp(b / "records.csv") == csv);
  CHECK(slurp(b / "records.json") == slurp(a / "records.json"));
  for (const char* plot : {"tv_vs_n.svg", "tv_vs_delta.svg", "coverage_vs_n.svg", "contraction_vs_n.svg"}) {
    CHECK(slurp(b / "plots" / plot) == slurp(a / "plots" / plot));
  }

  const auto parsed = records_from_csv(csv);
  REQUIRE(parsed.size() == first.records.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) CHECK(record_to_json(parsed[i]) == record_to_json(first.records[i]));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("failing cells are recorded, not thrown") {
  const fs::path dir = fresh_dir("bvmlab_sweep_fail");
  SweepPlan p = small_plan(dir);
  p.n_grid = {3};
  p.n_noise = {1e3};
  p.f = 0.0;
  p.g = 0.0;  // u = 0, so the Jacobian vanishes
  const SweepResult r = run_sweep(p);
  REQUIRE(r.records.size() == 1);
  CHECK(r.failed_cells == 1);
  CHECK(r.records[0].status == "error");
  CHECK_FALSE(r.records[0].error.empty());
  // failed cells are retried on the next run
  CHECK(run_sweep(p).computed_cells == 1);
  fs::remove_all(dir);
}

TEST_CASE("a Gaussian with no draws in the box gives TV 1") {
  // d = 16, n = 1e3: the approximation's spread dwarfs the box
  SweepPlan p = small_plan(fresh_dir("bvmlab_disjoint"));
  const SweepRecord r = run_cell(p, 5, 1e3, 0, 3);
  CHECK(r.status == "ok");
  CHECK(r.tv_method == "disjoint");
  CHECK(r.tv_estimate == 1.0);
  CHECK(r.tv_stderr == doctest::Approx(3.0 / p.is_samples));
  // with another seed a few draws land inside and the estimate is just below 1
  const SweepRecord s = run_cell(p, 5, 1e3, 0, 17);
  CHECK(s.tv_method == "importance");
  CHECK(s.tv_estimate > 0.99);
}

TEST_CASE("report for a single record") {
  const fs::path dir = fresh_dir("bvmlab_report_one");
  SweepRecord r;
  r.N = 3;
  r.d = 4;
  r.n = 1e4;
  r.delta_n_paper = 0.88;
  r.delta_n_general = 3.0;
  r.tv_method = "importance";
  r.tv_estimate = 0.02;
  r.coverage = 0.9;
  r.contraction_mass = 0.1;
  r.error = "with, comma \"quoted\"";
  const ReportFiles files = emit_report({r}, dir);
  const std::string csv = slurp(files.csv);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  CHECK(files.plots.size() == 4);
  for (const auto& p : files.plots) CHECK(slurp(p).find("<circle") != std::string::npos);
  const auto back = records_from_csv(csv);
  REQUIRE(back.size() == 1);
  CHECK(back[0].error == r.error);
  CHECK(back[0].tv_estimate == r.tv_estimate);
  CHECK(nlohmann::json::parse(slurp(files.json))["records"].size() == 1);
  CHECK_THROWS(emit_report({}, dir));
  fs::remove_all(dir);
}

TEST_CASE("rank correlation") {
  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman({1, 2, 3, 4, 5}, {2, 1, 4, 3, 5}) == doctest::Approx(0.8));
  CHECK(spearman({1, 1, 2}, {1, 2, 3}) == doctest::Approx(std::sqrt(3.0) / 2.0));
  CHECK_THROWS(spearman({1}, {1}));
}

TEST_CASE("svg rendering drops points a log axis cannot show") {
  svg::Plot plot{"t", "x", "y", true, true, {{"s", {{1.0, 1.0}, {10.0, 0.0}, {100.0, 5.0}}, true}}};
  const std::string doc = svg::render(plot);
  CHECK(std::count(doc.begin(), doc.end(), '\n') > 5);
  std::size_t circles = 0;
  for (std::size_t pos = doc.find("r=\"3.5\""); pos != std::string::npos; pos = doc.find("r=\"3.5\"", pos + 1)) ++circles;
  CHECK(circles == 2);
  CHECK(svg::render(plot) == doc);
}
