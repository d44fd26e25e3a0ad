#pragma once

#include "bvmlab/common.hpp"
#include "bvmlab/posterior_core.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace bvmlab {

enum class DeltaVariant {
  CubicLog,  ///< n^-1/2 d^3 ln d
  General     ///< sqrt(d/n) K(d)^2 with sigma(d) = d
};

/// Growth-condition quantity. For d = 1 the logarithm vanishes; the result is 0 and
/// degenerate_log (when given) is set.
double delta_n(double d, double n, double K, DeltaVariant variant, bool* degenerate_log = nullptr);

inline constexpr int kRecordSchemaVersion = 1;

struct SweepPlan {
  std::vector<int> n_grid{3, 4, 5};
  std::vector<double> n_noise{1e3, 1e5, 1e7};
  int replications = 1;
  std::uint64_t base_seed = 20160901;
  double K = 1.0;
  PriorKind prior = PriorKind::Uniform;
  std::filesystem::path output_dir = "bvm_sweep";

  double f = 1.0;
  double g = 1.0;
  Bounds bounds;

  long is_samples = 20000;
  int grid_cells = 4000;  ///< cells per dimension when d <= 2
  int coverage_reps = 50;
  double alpha = 0.1;
  int chain_steps = 20000;
  double contraction_M = 1.0;
  int max_cells = 1000;

  void validate() const;
  std::size_t cell_count() const { return n_grid.size() * n_noise.size() * static_cast<std::size_t>(replications); }
  std::uint64_t cell_seed(std::size_t cell_index) const { return derive_seed(base_seed, cell_index); }

  static SweepPlan from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct SweepRecord {
  int schema_version = kRecordSchemaVersion;
  int N = 0;
  long d = 0;
  double n = 0.0;
  std::uint64_t seed = 0;
  int replicate = 0;
  double delta_n_paper = 0.0;
  double delta_n_general = 0.0;
  std::string tv_method;
  double tv_estimate = 0.0;
  double tv_stderr = 0.0;
  double coverage_alpha = 0.0;
  int coverage_reps = 0;
  double coverage = 0.0;
  double coverage_halfwidth = 0.0;
  double contraction_M = 0.0;
  double eps_n = 0.0;
  double contraction_mass = 0.0;
  double posterior_tail = 0.0;
  double gaussian_tail = 0.0;
  std::string sampler;
  double acceptance_rate = 0.0;
  std::string status = "ok";
  std::string error;
  double wall_time = 0.0;  ///< seconds; kept out of records.csv/json so those stay reproducible
};

nlohmann::json record_to_json(const SweepRecord& r);
SweepRecord record_from_json(const nlohmann::json& j);

struct SweepResult {
  std::vector<SweepRecord> records;
  int computed_cells = 0;  ///< cells evaluated in this call (cached cells are not counted)
  int failed_cells = 0;
};

/// Runs one (N, n, seed) cell. Failures are reported through status/error, not exceptions.
SweepRecord run_cell(const SweepPlan& plan, int N, double n, int replicate, std::uint64_t seed);

/// Evaluates every cell of the plan on a worker pool, caching each finished cell under
/// output_dir/cells so that a rerun skips completed work.
SweepResult run_sweep(const SweepPlan& plan);

struct ReportFiles {
  std::filesystem::path csv;
  std::filesystem::path json;
  std::vector<std::filesystem::path> plots;
};

/// records.csv, records.json and plots/*.svg under dir. Byte-identical for identical records.
ReportFiles emit_report(const std::vector<SweepRecord>& records, const std::filesystem::path& dir);

std::string records_to_csv(const std::vector<SweepRecord>& records);
std::vector<SweepRecord> records_from_csv(const std::string& text);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace bvmlab
