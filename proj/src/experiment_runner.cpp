#include "bvmlab/experiment_runner.hpp"

#include "bvmlab/bvm_diagnostics.hpp"
#include "bvmlab/elliptic_forward.hpp"
#include "bvmlab/samplers.hpp"
#include "bvmlab/svg_plot.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>

namespace bvmlab {

namespace fs = std::filesystem;
using nlohmann::json;

double delta_n(double d, double n, double K, DeltaVariant variant, bool* degenerate_log) {
  if (!(d >= 1.0)) throw std::invalid_argument("delta_n: d must be >= 1");
  if (!(n > 0.0)) throw std::invalid_argument("delta_n: n must be positive");
  const bool degenerate = d == 1.0;
  if (degenerate_log) *degenerate_log = degenerate;
  if (degenerate) return 0.0;
  if (variant == DeltaVariant::CubicLog) return std::pow(d, 3.0) * std::log(d) / std::sqrt(n);
  const double k_d = K_of_d(d, K);
  return std::sqrt(d / n) * k_d * k_d;
}

// ---------------------------------------------------------------------------------------------
// Plan

void SweepPlan::validate() const {
  if (n_grid.empty()) throw std::invalid_argument("sweep plan: N_list is empty");
  if (n_noise.empty()) throw std::invalid_argument("sweep plan: n_list is empty");
  if (replications < 1) throw std::invalid_argument("sweep plan: replications must be >= 1");
  for (int N : n_grid) {
    if (N < 2) throw std::invalid_argument("sweep plan: grid sizes must be >= 2");
  }
  for (double n : n_noise) {
    if (!(n > 0.0)) throw std::invalid_argument("sweep plan: noise parameters must be positive");
  }
  if (!(K > 0.0)) throw std::invalid_argument("sweep plan: K must be positive");
  if (!(bounds.q_min >= 0.0 && bounds.q_min < bounds.q_max)) throw std::invalid_argument("sweep plan: bad bounds");
  if (cell_count() > static_cast<std::size_t>(max_cells)) {
    throw std::invalid_argument("sweep plan: " + std::to_string(cell_count()) + " cells exceed max_cells = " +
                                std::to_string(max_cells));
  }
  std::set<std::uint64_t> seeds;
  for (std::size_t c = 0; c < cell_count(); ++c) seeds.insert(cell_seed(c));
  if (seeds.size() != cell_count()) throw std::invalid_argument("sweep plan: cell seeds collide");
}

SweepPlan SweepPlan::from_json(const json& j) {
  SweepPlan p;
  if (j.contains("N_list")) {
    p.n_grid = j.at("N_list").get<std::vector<int>>();
  } else if (j.contains("n_grid")) {
    p.n_grid = j.at("n_grid").get<std::vector<int>>();
  }
  if (j.contains("n_list")) p.n_noise = j.at("n_list").get<std::vector<double>>();
  p.replications = j.value("replications", p.replications);
  p.base_seed = j.value("seed", p.base_seed);
  p.K = j.value("K", p.K);
  p.prior = prior_kind_from_string(j.value("prior", to_string(p.prior)));
  p.output_dir = j.value("output_dir", p.output_dir.string());
  p.f = j.value("f", p.f);
  p.g = j.value("g", p.g);
  p.bounds.q_min = j.value("q_min", p.bounds.q_min);
  p.bounds.q_max = j.value("q_max", p.bounds.q_max);
  p.is_samples = j.value("is_samples", p.is_samples);
  p.grid_cells = j.value("grid_cells", p.grid_cells);
  p.coverage_reps = j.value("coverage_reps", p.coverage_reps);
  p.alpha = j.value("alpha", p.alpha);
  p.chain_steps = j.value("chain_steps", p.chain_steps);
  p.contraction_M = j.value("contraction_M", p.contraction_M);
  p.max_cells = j.value("max_cells", p.max_cells);
  return p;
}

json SweepPlan::to_json() const {
  return json{{"N_list", n_grid},
              {"n_list", n_noise},
              {"replications", replications},
              {"seed", base_seed},
              {"K", K},
              {"prior", to_string(prior)},
              {"output_dir", output_dir.string()},
              {"f", f},
              {"g", g},
              {"q_min", bounds.q_min},
              {"q_max", bounds.q_max},
              {"is_samples", is_samples},
              {"grid_cells", grid_cells},
              {"coverage_reps", coverage_reps},
              {"alpha", alpha},
              {"chain_steps", chain_steps},
              {"contraction_M", contraction_M},
              {"max_cells", max_cells}};
}

// ---------------------------------------------------------------------------------------------
// Record <-> JSON / CSV. One table drives both directions.

namespace {

struct Column {
  const char* name;
  std::function<json(const SweepRecord&)> get;
  std::function<void(SweepRecord&, const json&)> set;
};

template <typename T>
Column column(const char* name, T SweepRecord::*member) {
  return {name, [member](const SweepRecord& r) { return json(r.*member); },
          [member](SweepRecord& r, const json& v) { r.*member = v.get<T>(); }};
}

const std::vector<Column>& columns() {
  static const std::vector<Column> cols = {
      column("schema_version", &SweepRecord::schema_version),
      column("N", &SweepRecord::N),
      column("d", &SweepRecord::d),
      column("n", &SweepRecord::n),
      column("seed", &SweepRecord::seed),
      column("replicate", &SweepRecord::replicate),
      column("delta_n_paper", &SweepRecord::delta_n_paper),
      column("delta_n_general", &SweepRecord::delta_n_general),
      column("tv_method", &SweepRecord::tv_method),
      column("tv_estimate", &SweepRecord::tv_estimate),
      column("tv_stderr", &SweepRecord::tv_stderr),
      column("coverage_alpha", &SweepRecord::coverage_alpha),
      column("coverage_reps", &SweepRecord::coverage_reps),
      column("coverage", &SweepRecord::coverage),
      column("coverage_halfwidth", &SweepRecord::coverage_halfwidth),
      column("contraction_M", &SweepRecord::contraction_M),
      column("eps_n", &SweepRecord::eps_n),
      column("contraction_mass", &SweepRecord::contraction_mass),
      column("posterior_tail", &SweepRecord::posterior_tail),
      column("gaussian_tail", &SweepRecord::gaussian_tail),
      column("sampler", &SweepRecord::sampler),
      column("acceptance_rate", &SweepRecord::acceptance_rate),
      column("status", &SweepRecord::status),
      column("error", &SweepRecord::error),
  };
  return cols;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const json& v) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
      if (c == '"') out += '"';
      out += c;
    }
    return out + "\"";
  }
  if (v.is_number_float()) return format_double(v.get<double>());
  return v.dump();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    os << text;
    if (!os) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

}  // namespace

json record_to_json(const SweepRecord& r) {
  json j = json::object();
  for (const auto& c : columns()) j[c.name] = c.get(r);
  return j;
}

SweepRecord record_from_json(const json& j) {
  SweepRecord r;
  for (const auto& c : columns()) {
    if (j.contains(c.name)) c.set(r, j.at(c.name));
  }
  return r;
}

std::string records_to_csv(const std::vector<SweepRecord>& records) {
  std::string out;
  const auto& cols = columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + std::string(cols[i].name);
  out += '\n';
  for (const auto& r : records) {
    for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + csv_field(cols[i].get(r));
    out += '\n';
  }
  return out;
}

std::vector<SweepRecord> records_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("records_from_csv: missing header");
  const std::vector<std::string> header = split_csv_line(line);
  std::map<std::string, const Column*> by_name;
  for (const auto& c : columns()) by_name[c.name] = &c;

  std::vector<SweepRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) throw std::invalid_argument("records_from_csv: ragged row");
    SweepRecord r;
    for (std::size_t i = 0; i < header.size(); ++i) {
      const auto it = by_name.find(header[i]);
      if (it == by_name.end()) continue;
      const json current = it->second->get(r);
      if (current.is_string()) {
        it->second->set(r, json(fields[i]));
      } else if (current.is_number_float()) {
        it->second->set(r, json(std::stod(fields[i])));
      } else if (current.is_number_unsigned()) {
        it->second->set(r, json(std::stoull(fields[i])));
      } else {
        it->second->set(r, json(std::stoll(fields[i])));
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Cells

SweepRecord run_cell(const SweepPlan& plan, int N, double n, int replicate, std::uint64_t seed) {
  const auto started = std::chrono::steady_clock::now();
  SweepRecord rec;
  rec.N = N;
  rec.n = n;
  rec.seed = seed;
  rec.replicate = replicate;
  rec.coverage_alpha = plan.alpha;
  rec.coverage_reps = plan.coverage_reps;
  rec.contraction_M = plan.contraction_M;
  try {
    const GridSpec grid(N);
    rec.d = static_cast<long>(grid.dim());
    const double d = static_cast<double>(grid.dim());
    rec.delta_n_paper = delta_n(d, n, plan.K, DeltaVariant::CubicLog);
    rec.delta_n_general = delta_n(d, n, plan.K, DeltaVariant::General);

    auto model = std::make_shared<const MediumForwardModel>(grid, ProblemData::constant(grid, plan.f, plan.g),
                                                            plan.bounds);
    const Vector q0 = default_truth(grid, plan.bounds).q;
    const PriorSpec prior = plan.prior == PriorKind::Uniform ? PriorSpec::uniform(plan.bounds)
                                                              : PriorSpec::truncated_normal(plan.bounds);
    const PosteriorSpec spec = synthesize_data(model, prior, q0, n, derive_seed(seed, 0));
    const GaussianApprox approx = gaussian_approx(spec);

    try {
      const TVEstimate tv = grid.dim() <= 2 ? tv_grid(spec, approx, plan.grid_cells)
                                            : tv_importance(spec, approx, plan.is_samples, derive_seed(seed, 1));
      rec.tv_method = to_string(tv.method);
      rec.tv_estimate = tv.value;
      rec.tv_stderr = tv.std_err;
    } catch (const DisjointSupport&) {
      // None of m Gaussian draws fell in the box: phi(box) <= 3/m at 95%, and
      // TV >= phi(outside box), so TV lies in [1 - 3/m, 1].
      rec.tv_method = "disjoint";
      rec.tv_estimate = 1.0;
      rec.tv_stderr = 3.0 / static_cast<double>(plan.is_samples);
    }

    const CoverageResult cov =
        credible_coverage(model, prior, q0, n, plan.alpha, plan.coverage_reps, derive_seed(seed, 2));
    rec.coverage = cov.coverage;
    rec.coverage_halfwidth = cov.ci_halfwidth;

    ChainConfig cfg = ChainConfig::defaults(grid.dim(), plan.chain_steps, derive_seed(seed, 3));
    SampleSet chain;
    try {
      cfg.kind = ChainKind::IndependenceGauss;
      chain = run_independence(spec, approx, cfg);
    } catch (const std::runtime_error&) {
      // Most of the Gaussian mass lies outside the box; fall back to a reflected random walk
      // scaled to the Gaussian approximation.
      cfg.kind = ChainKind::RwmReflect;
      cfg.step_scale *= std::sqrt(approx.Sigma.trace() / d);
      chain = run_rwm(spec, cfg);
    }
    rec.sampler = to_string(cfg.kind);
    rec.acceptance_rate = chain.acceptance_rate;
    const auto contraction = contraction_probe(chain, q0, n, d, plan.K, {plan.contraction_M});
    rec.eps_n = contraction.front().eps_n;
    rec.contraction_mass = contraction.front().mass_outside;
    const TailMass tails = tail_mass_probe(chain, approx, q0, n, d, plan.K);
    rec.posterior_tail = tails.posterior_tail;
    rec.gaussian_tail = tails.gaussian_tail;
  } catch (const std::exception& e) {
    rec.status = "error";
    rec.error = e.what();
  }
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return rec;
}

SweepResult run_sweep(const SweepPlan& plan) {
  plan.validate();
  const fs::path cell_dir = plan.output_dir / "cells";
  fs::create_directories(cell_dir);

  struct Cell {
    int N;
    double n;
    int replicate;
    std::uint64_t seed;
    fs::path path;
  };
  std::vector<Cell> cells;
  std::size_t index = 0;
  for (int N : plan.n_grid) {
    for (double n : plan.n_noise) {
      for (int r = 0; r < plan.replications; ++r, ++index) {
        const std::uint64_t seed = plan.cell_seed(index);
        char name[160];
        std::snprintf(name, sizeof name, "cell_N%d_n%.6g_r%d_s%llu.json", N, n, r,
                      static_cast<unsigned long long>(seed));
        cells.push_back({N, n, r, seed, cell_dir / name});
      }
    }
  }

  SweepResult result;
  result.records.resize(cells.size());
  std::vector<char> fresh(cells.size(), 0);
  std::mutex appender;
  parallel_for(cells.size(), [&](std::size_t i) {
    const Cell& c = cells[i];
    if (fs::exists(c.path)) {
      std::ifstream is(c.path);
      try {
        SweepRecord cached = record_from_json(json::parse(is));
        if (cached.status == "ok" && cached.seed == c.seed) {
          result.records[i] = std::move(cached);
          return;
        }
      } catch (const std::exception&) {
        // unreadable cache entry; recompute
      }
    }
    SweepRecord rec = run_cell(plan, c.N, c.n, c.replicate, c.seed);
    {
      std::lock_guard<std::mutex> lock(appender);
      write_text(c.path, record_to_json(rec).dump(2) + "\n");
      std::ofstream timing(plan.output_dir / "timings.txt", std::ios::app);
      timing << c.path.filename().string() << ' ' << rec.wall_time << '\n';
    }
    result.records[i] = std::move(rec);
    fresh[i] = 1;
  });
  for (std::size_t i = 0; i < cells.size(); ++i) {
    result.computed_cells += fresh[i];
    result.failed_cells += result.records[i].status != "ok";
  }
  emit_report(result.records, plan.output_dir);
  return result;
}

// ---------------------------------------------------------------------------------------------
// Report

ReportFiles emit_report(const std::vector<SweepRecord>& records, const fs::path& dir) {
  if (records.empty()) throw std::invalid_argument("emit_report: no records");
  fs::create_directories(dir / "plots");
  ReportFiles files;
  files.csv = dir / "records.csv";
  files.json = dir / "records.json";
  write_text(files.csv, records_to_csv(records));

  json all = json::array();
  for (const auto& r : records) all.push_back(record_to_json(r));
  write_text(files.json, json{{"schema_version", kRecordSchemaVersion}, {"records", all}}.dump(2) + "\n");

  std::map<long, std::vector<const SweepRecord*>> by_d;
  for (const auto& r : records) {
    if (r.status == "ok") by_d[r.d].push_back(&r);
  }
  auto per_d_series = [&](const std::function<double(const SweepRecord&)>& y) {
    std::vector<svg::Series> out;
    for (const auto& [d, recs] : by_d) {
      svg::Series s;
      s.name = "d = " + std::to_string(d);
      std::vector<const SweepRecord*> sorted = recs;
      std::stable_sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->n < b->n; });
      for (const auto* r : sorted) s.points.emplace_back(r->n, y(*r));
      out.push_back(std::move(s));
    }
    return out;
  };

  std::vector<std::pair<std::string, svg::Plot>> plots;
  plots.push_back({"tv_vs_n.svg", {"TV distance vs n", "n", "TV estimate", true, true,
                                   per_d_series([](const SweepRecord& r) { return r.tv_estimate; })}});
  {
    svg::Series scatter{"cells", {}, false};
    for (const auto& r : records) {
      if (r.status == "ok") scatter.points.emplace_back(r.delta_n_paper, r.tv_estimate);
    }
    plots.push_back({"tv_vs_delta.svg", {"TV distance vs delta_n", "delta_n = n^-1/2 d^3 log d", "TV estimate", true,
                                         true, {scatter}}});
  }
  plots.push_back({"coverage_vs_n.svg", {"Credible-set coverage vs n", "n", "coverage", true, false,
                                         per_d_series([](const SweepRecord& r) { return r.coverage; })}});
  plots.push_back({"contraction_vs_n.svg", {"Posterior mass outside M eps_n", "n", "mass outside", true, false,
                                            per_d_series([](const SweepRecord& r) { return r.contraction_mass; })}});
  for (const auto& [name, plot] : plots) {
    const fs::path path = dir / "plots" / name;
    write_text(path, svg::render(plot));
    files.plots.push_back(path);
  }
  return files;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman: need two equal-length samples");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / rx.size();
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / ry.size();
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace bvmlab
