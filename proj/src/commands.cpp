#include "infotraj/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "infotraj/parallel.hpp"
#include "infotraj/persistence.hpp"
#include "infotraj/svg.hpp"
#include "infotraj/trajectories.hpp"

namespace infotraj::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

json state_json(const StateVector& x) {
  json a = json::array();
  for (Eigen::Index i = 0; i < x.size(); ++i) a.push_back(x[i]);
  return a;
}

json prior_json(const sensing::GaussianPrior& p) {
  json cov = json::array();
  for (Eigen::Index r = 0; r < p.cov.rows(); ++r) cov.push_back(state_json(p.cov.row(r).transpose()));
  return {{"mean", state_json(p.mean)}, {"cov", cov}};
}

std::string numbered(const char* stem, std::size_t i, const char* ext) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s_%03zu.%s", stem, i, ext);
  return buf;
}

/// Everything needed to rebuild the system a stored solution was computed for.
struct Context {
  scenario::Scenario config;
  std::shared_ptr<const dynamics::CascadeSystem> sys;
  matrixcore::LogDetMetric metric;
};

Context context_of(const scenario::Scenario& s) { return {s, scenario::build_system(s), {}}; }

}  // namespace

StateVector parse_state(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError("cannot parse state '" + text + "'");
    }
  }
  if (values.empty()) throw InputError("empty state");
  return Eigen::Map<const Eigen::VectorXd>(values.data(), Eigen::Index(values.size()));
}

// --- solve ------------------------------------------------------------------

hj::HybridSolution cmd_solve(const scenario::Scenario& s, const fs::path& out, int workers,
                             std::ostream& log) {
  const auto t0 = Clock::now();
  const auto ctx = context_of(s);
  hj::SolverConfig cfg = s.solver;
  cfg.workers = workers;
  const auto info = hj::precompute_info_field(*ctx.sys, s.grid, workers);
  const double t_info = seconds_since(t0);
  auto sol = hj::hybrid_solve(*ctx.sys, ctx.metric, s.grid, info, scenario::initial_information(s), cfg);
  const double t_solve = seconds_since(t0) - t_info;

  const json config = scenario::to_json(s);
  const std::string hash = io::fnv1a_hex(config.dump());
  sol.provenance = "config " + hash;
  io::save_solution(out, sol, {{"config", config}, {"config_hash", hash}});
  io::write_json(out / "timings.json", {{"information_field_seconds", t_info},
                                        {"solve_seconds", t_solve},
                                        {"total_seconds", seconds_since(t0)},
                                        {"steps", sol.steps},
                                        {"workers", resolve_workers(workers)}});
  log << "solved " << (s.name.empty() ? "scenario" : s.name) << ": " << sol.steps << " steps, "
      << s.grid.size() << " nodes, " << t_solve << " s\n";
  return sol;
}

// --- extract ----------------------------------------------------------------

json cmd_extract(const fs::path& solution, const std::vector<StateVector>& states,
                 const fs::path& out, int workers, std::ostream& log) {
  if (states.empty()) {
    log << "warning: no initial states given, nothing extracted\n";
    return json::object();
  }
  json extra;
  const auto sol = io::load_solution(solution, &extra);
  if (!extra.contains("config")) throw InputError(solution.string() + ": manifest lacks the scenario");
  const auto ctx = context_of(scenario::parse_scenario(extra.at("config")));
  const auto& sc = ctx.config;
  for (const auto& x : states) {
    if (x.size() != sol.grid.dims()) {
      throw InputError("initial states need " + std::to_string(sol.grid.dims()) + " components");
    }
    StateVector w = x;
    ctx.sys->wrap(w);
    if (!sol.grid.contains(w)) throw InputError("initial state outside the grid");
  }

  traj::ExtractOptions opts;
  opts.dt = sc.extraction.dt;
  const bool receding = sc.extraction.method == scenario::ExtractMethod::Receding;
  grid::VectorField info;
  if (receding) info = hj::precompute_info_field(*ctx.sys, sol.grid, workers);

  struct Result {
    dynamics::Trajectory traj;
    std::string error;
  };
  std::vector<Result> results(states.size());
  // Parallel over starts; each receding re-solve then runs single-threaded.
  parallel_for(states.size(), workers, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      try {
        if (receding) {
          hj::SolverConfig cfg = sol.config;
          cfg.workers = 1;
          results[i].traj = traj::extract_receding(*ctx.sys, ctx.metric, sol.grid, info, states[i],
                                                   sol.z0, cfg, sc.extraction.legs, opts);
        } else {
          results[i].traj = traj::extract_characteristic(sol, *ctx.sys, ctx.metric, states[i], opts);
        }
      } catch (const traj::BoundaryExitError& ex) {
        results[i].traj = ex.partial();
        results[i].error = ex.what();
      }
    }
  });

  fs::create_directories(out);
  json list = json::array();
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto& t = results[i].traj;
    const std::string file = numbered("traj", i, "csv");
    std::ofstream os(out / file, std::ios::trunc);
    if (!os) throw InputError("cannot write " + (out / file).string());
    dynamics::write_trajectory_csv(os, t, ctx.metric);

    json item = {{"file", file},
                 {"x0", state_json(states[i])},
                 {"cost", t.terminal_cost},
                 {"gain", t.terminal_cost - ctx.metric.value(sol.z0)},
                 {"switches", traj::switch_times(t).size()},
                 {"left_grid", !results[i].error.empty()}};
    if (!results[i].error.empty()) item["error"] = results[i].error;
    if (t.residuals) {
      const auto& r = *t.residuals;
      item["residuals"] = {{"terminal_costate", r.terminal_costate},
                           {"initial_costate", r.initial_costate},
                           {"lambda_mismatch", r.lambda_mismatch},
                           {"lambda_mismatch_rel", r.lambda_mismatch_rel},
                           {"value_gap", r.value_gap}};
    }
    if (sc.prior && t.samples.size() > 1) {
      const Eigen::Vector2d center(sc.prior->mean[0], sc.prior->mean[1]);
      item["radial_misalignment_deg"] = traj::radial_misalignment(t, center) * 180.0 / dynamics::kPi;
    }
    list.push_back(item);
    log << file << ": cost " << t.terminal_cost
        << (results[i].error.empty() ? "" : "  (left the grid)") << '\n';
  }
  json summary = {{"method", receding ? "receding" : "characteristic"},
                  {"legs", receding ? sc.extraction.legs : 1},
                  {"dt", sc.extraction.dt},
                  {"horizon", sol.final().time},
                  {"initial_cost", ctx.metric.value(sol.z0)},
                  {"config_hash", extra.value("config_hash", "")},
                  {"trajectories", list}};
  if (sc.prior) summary["prior"] = prior_json(*sc.prior);
  io::write_json(out / "summary.json", summary);
  return summary;
}

// --- plot -------------------------------------------------------------------

void cmd_plot(const fs::path& in, const fs::path& out,
              const std::optional<scenario::Scenario>& scenario) {
  if (!fs::is_directory(in)) throw InputError(in.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(in)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InputError("no trajectory CSVs in " + in.string());

  svg::Figure fig;
  for (const auto& f : files) {
    std::ifstream is(f);
    try {
      fig.paths.push_back(dynamics::read_trajectory_csv(is));
    } catch (const Error& e) {
      throw InputError(f.string() + ": " + e.what());
    }
  }
  if (scenario) {
    fig.prior = scenario->prior;
    fig.title = scenario->name;
  } else if (fs::exists(in / "summary.json")) {
    const json s = io::read_json(in / "summary.json");
    if (s.contains("prior")) {
      sensing::GaussianPrior p;
      const auto mean = s["prior"].at("mean").get<std::vector<double>>();
      const auto cov = s["prior"].at("cov").get<std::vector<std::vector<double>>>();
      p.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), Eigen::Index(mean.size()));
      p.cov.resize(Eigen::Index(cov.size()), Eigen::Index(cov.size()));
      for (std::size_t r = 0; r < cov.size(); ++r) {
        if (cov[r].size() != cov.size()) throw InputError("summary.json: malformed prior covariance");
        for (std::size_t c = 0; c < cov.size(); ++c) p.cov(Eigen::Index(r), Eigen::Index(c)) = cov[r][c];
      }
      fig.prior = p;
    }
  }
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream os(out, std::ios::trunc);
  if (!os) throw InputError("cannot write " + out.string());
  os << svg::render(fig);
}

// --- validate ---------------------------------------------------------------

namespace {

enum class Mutation { None, DissipationSum, PolicyFlip };

struct Suite {
  Mutation mutation = Mutation::None;
  validation::Thresholds th;
  std::optional<json> toy;
  json scenarios = json::array();
};

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& item : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return item.key() == k; })) {
      throw ConfigError(where + (where.empty() ? "" : ".") + item.key() + ": unknown field");
    }
  }
}

Suite parse_suite(const json& j) {
  reject_unknown(j, {"schema_version", "mutation", "thresholds", "toy", "scenarios"}, "");
  if (j.value("schema_version", 0) != 1) throw ConfigError("schema_version: expected 1");
  Suite s;
  const std::string m = j.value("mutation", "none");
  if (m == "none") s.mutation = Mutation::None;
  else if (m == "dissipation_form_sum") s.mutation = Mutation::DissipationSum;
  else if (m == "policy_sign_flip") s.mutation = Mutation::PolicyFlip;
  else throw ConfigError("mutation: unknown value '" + m + "'");

  if (j.contains("thresholds")) {
    const json& t = j["thresholds"];
    reject_unknown(t, {"terminal_costate_ratio", "lambda_rel", "value_gap", "oracle_gap_rel",
                       "monotonicity_eps", "z0_gradient_rel_tol", "z0_gradient_fraction",
                       "toy_max_error", "toy_ratio_min", "toy_ratio_max"},
                   "thresholds");
    auto& th = s.th;
    th.terminal_costate_ratio = t.value("terminal_costate_ratio", th.terminal_costate_ratio);
    th.lambda_rel = t.value("lambda_rel", th.lambda_rel);
    th.value_gap = t.value("value_gap", th.value_gap);
    th.oracle_gap_rel = t.value("oracle_gap_rel", th.oracle_gap_rel);
    th.monotonicity_eps = t.value("monotonicity_eps", th.monotonicity_eps);
    th.z0_gradient_rel_tol = t.value("z0_gradient_rel_tol", th.z0_gradient_rel_tol);
    th.z0_gradient_fraction = t.value("z0_gradient_fraction", th.z0_gradient_fraction);
    th.toy_max_error = t.value("toy_max_error", th.toy_max_error);
    th.toy_ratio_min = t.value("toy_ratio_min", th.toy_ratio_min);
    th.toy_ratio_max = t.value("toy_ratio_max", th.toy_ratio_max);
  }
  if (j.contains("toy")) {
    reject_unknown(j["toy"], {"dx", "refined_dx", "z0_gradient_dx", "residual_dx", "brute_force_segments"},
                   "toy");
    s.toy = j["toy"];
  }
  if (j.contains("scenarios")) {
    s.scenarios = j["scenarios"];
    if (!s.scenarios.is_array()) throw ConfigError("scenarios: expected an array");
    for (std::size_t i = 0; i < s.scenarios.size(); ++i) {
      reject_unknown(s.scenarios[i], {"path", "checks", "brute_force_segments", "z0_gradient_step"},
                     "scenarios[" + std::to_string(i) + "]");
    }
  }
  return s;
}

int nodes_for(double lo, double hi, double h) { return int(std::lround((hi - lo) / h)) + 1; }

void apply(Mutation m, hj::SolverConfig& cfg, traj::ExtractOptions& opts) {
  if (m == Mutation::DissipationSum) cfg.dissipation_form = hj::DissipationForm::Sum;
  if (m == Mutation::PolicyFlip) opts.policy_sign = -1.0;
}

void toy_checks(const json& toy, const Suite& suite, int workers, validation::ValidationReport& report,
                std::ostream& log) {
  const auto sys = dynamics::ScalarCascade::toy();
  const matrixcore::LogDetMetric metric;
  const InfoVector z0 = InfoVector::Constant(1, 1.0);
  const auto& th = suite.th;
  hj::SolverConfig base;
  base.horizon = 1.0;
  base.workers = workers;
  traj::ExtractOptions opts;
  opts.dt = 0.01;
  apply(suite.mutation, base, opts);

  // hybrid against the full-grid reference and the closed form
  validation::ToyOptions to;
  to.dx = toy.value("dx", 0.05);
  to.form = base.dissipation_form;
  to.workers = workers;
  const auto coarse = validation::compare_toy(to);
  to.dx = toy.value("refined_dx", to.dx / 2);
  const auto fine = validation::compare_toy(to);
  log << "toy comparison: " << coarse.vs_classic << " -> " << fine.vs_classic << '\n';
  validation::OracleOutputs o;
  o.toy_coarse = coarse;
  o.toy_fine = fine;

  // z0-gradient check on a domain wide enough to keep the boundary out of the interior
  const double t1dx = toy.value("z0_gradient_dx", 0.005);
  const grid::GridSpec t1grid({{-3.0, 3.0, nodes_for(-3.0, 3.0, t1dx), false}});
  const auto t1info = hj::precompute_info_field(*sys, t1grid, workers);
  o.z0_gradient = validation::z0_gradient_check(*sys, metric, t1grid, t1info, z0, base, 1e-3,
                                          th.z0_gradient_rel_tol, 2.0 / t1dx);
  log << "toy z0-gradient check: " << o.z0_gradient->fraction() << " of interior nodes agree\n";

  // characteristic residuals under refinement
  const auto dxs = toy.value("residual_dx", std::vector<double>{0.05, 0.025, 0.0125});
  const std::vector<double> starts{-1.0, -0.75, -0.5, -0.25, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> ratios;
  std::vector<dynamics::Trajectory> finest;
  std::optional<hj::HybridSolution> finest_sol;
  for (double dx : dxs) {
    const grid::GridSpec g({{-2.5, 2.5, nodes_for(-2.5, 2.5, dx), false}});
    const auto info = hj::precompute_info_field(*sys, g, workers);
    auto sol = hj::hybrid_solve(*sys, metric, g, info, z0, base);
    double p_end = 0.0, p_start = 0.0;
    std::vector<dynamics::Trajectory> trajs;
    for (double x : starts) {
      auto t = traj::extract_characteristic(sol, *sys, metric, StateVector::Constant(1, x), opts);
      p_end = std::max(p_end, t.residuals->terminal_costate);
      p_start = std::max(p_start, t.residuals->initial_costate);
      trajs.push_back(std::move(t));
    }
    ratios.push_back(p_end / std::max(p_start, 1e-300));
    finest = std::move(trajs);
    finest_sol = std::move(sol);
  }
  int increases = 0;
  for (std::size_t i = 1; i < ratios.size(); ++i) increases += ratios[i] >= ratios[i - 1];
  report.add("toy.costate_ratio_monotone", increases, 0, true,
             "refinement steps where ||p(t)|| / max ||p(0)|| did not decrease");
  report.details["toy_costate_ratios"] = ratios;

  double p0max = 0.0;
  for (const auto& t : finest) p0max = std::max(p0max, t.residuals->initial_costate);
  o.max_initial_costate = p0max;
  // worst start for each residual; the oracle gap is taken at x0 = 0.5
  const auto worst = [&](auto field) {
    return *std::max_element(finest.begin(), finest.end(), [&](const auto& a, const auto& b) {
      return field(*a.residuals) < field(*b.residuals);
    });
  };
  auto r = validation::validate(*finest_sol, worst([](const auto& r) { return r.terminal_costate; }),
                                metric, o, th, "toy");
  validation::merge(report, r, "");
  report.add("toy.lambda_mismatch_rel_max",
             worst([](const auto& r) { return r.lambda_mismatch_rel; }).residuals->lambda_mismatch_rel,
             th.lambda_rel, true);
  report.add("toy.value_gap_max", worst([](const auto& r) { return r.value_gap; }).residuals->value_gap,
             th.value_gap, true);

  const int segments = toy.value("brute_force_segments", 4);
  const StateVector x0 = StateVector::Constant(1, 0.5);
  const auto bf = traj::brute_force_value(*sys, metric, x0, z0, 1.0, segments, true, 0.01);
  const auto& t05 = finest[5];
  const double scale = std::max(std::abs(bf.cost - metric.value(z0)), 1e-12);
  report.add("toy.oracle_gap_rel", (t05.terminal_cost - bf.cost) / scale, th.oracle_gap_rel, true,
             "(extracted - brute force) / |brute force gain| at x0 = 0.5");
}

void scenario_checks(const json& item, const fs::path& base_dir, const Suite& suite, int workers,
                     validation::ValidationReport& report, std::ostream& log) {
  const fs::path path = base_dir / item.at("path").get<std::string>();
  const auto sc = scenario::load_scenario(path);
  const std::string label = sc.name.empty() ? path.stem().string() : sc.name;
  const auto checks = item.value("checks", std::vector<std::string>{"monotonicity", "oracle_gap"});
  const auto wants = [&](const char* c) { return std::find(checks.begin(), checks.end(), c) != checks.end(); };
  for (const auto& c : checks) {
    static const std::vector<std::string> known{"monotonicity", "oracle_gap", "residuals", "z0_gradient",
                                                "value_band"};
    if (std::find(known.begin(), known.end(), c) == known.end()) {
      throw ConfigError(path.string() + ": unknown check '" + c + "'");
    }
  }
  if (sc.initial_states.empty()) throw ConfigError(path.string() + ": validation needs an initial state");

  const auto ctx = context_of(sc);
  hj::SolverConfig cfg = sc.solver;
  cfg.workers = workers;
  traj::ExtractOptions opts;
  opts.dt = sc.extraction.dt;
  apply(suite.mutation, cfg, opts);
  const InfoVector z0 = scenario::initial_information(sc);
  const auto info = hj::precompute_info_field(*ctx.sys, sc.grid, workers);
  const auto t0 = Clock::now();
  hj::SolverConfig mono_cfg = cfg;
  if (wants("monotonicity") && mono_cfg.snapshot_stride == 0) mono_cfg.snapshot_stride = 1;
  const auto sol = hj::hybrid_solve(*ctx.sys, ctx.metric, sc.grid, info, z0, mono_cfg);
  log << label << ": solved in " << seconds_since(t0) << " s\n";

  const StateVector& x0 = sc.initial_states.front();
  dynamics::Trajectory path_out;
  if (sc.extraction.method == scenario::ExtractMethod::Receding) {
    path_out = traj::extract_receding(*ctx.sys, ctx.metric, sc.grid, info, x0, z0, cfg,
                                      sc.extraction.legs, opts);
  } else {
    path_out = traj::extract_characteristic(sol, *ctx.sys, ctx.metric, x0, opts);
  }
  if (!wants("residuals")) path_out.residuals.reset();

  validation::OracleOutputs o;
  const int segments = item.value("brute_force_segments", 6);
  std::optional<traj::BruteForceResult> bf;
  if (wants("oracle_gap") || wants("value_band")) {
    bf = traj::brute_force_value(*ctx.sys, ctx.metric, x0, z0, sc.solver.horizon, segments, true,
                                 sc.extraction.dt);
    if (wants("oracle_gap")) o.brute_force_cost = bf->cost;
    log << label << ": extracted " << path_out.terminal_cost << ", brute force " << bf->cost << '\n';
  }
  if (wants("monotonicity")) o.monotone = validation::monotonicity(sol, 2.0, suite.th.monotonicity_eps);
  if (wants("z0_gradient")) {
    const double step = item.value("z0_gradient_step", 1e-2 * z0.cwiseAbs().maxCoeff());
    o.z0_gradient = validation::z0_gradient_check(*ctx.sys, ctx.metric, sc.grid, info, z0, cfg, step,
                                            suite.th.z0_gradient_rel_tol, 2.0);
  }
  validation::merge(report, validation::validate(sol, path_out, ctx.metric, o, suite.th), label);

  if (wants("value_band")) {
    // grid-error band from one refinement: halve every spacing
    std::vector<grid::Axis> axes = sc.grid.axes();
    for (auto& a : axes) a.n = a.periodic ? 2 * a.n : 2 * a.n - 1;
    const grid::GridSpec fine_grid(axes);
    const auto fine_info = hj::precompute_info_field(*ctx.sys, fine_grid, workers);
    const auto fine = hj::hybrid_solve(*ctx.sys, ctx.metric, fine_grid, fine_info, z0, cfg);
    StateVector w = x0;
    ctx.sys->wrap(w);
    const double phi = grid::interpolate(sol.final().phi, w);
    const double phi_fine = grid::interpolate(fine.final().phi, w);
    const double band = std::max(2.0 * std::abs(phi - phi_fine), 1e-12);
    report.add(label + ".value_band_extracted", std::abs(phi - path_out.terminal_cost) / band, 1.0, true,
               "|phi(t, x0) - extracted cost| / grid-error band");
    report.add(label + ".value_band_brute_force", std::abs(phi - bf->cost) / band, 1.0, true,
               "|phi(t, x0) - brute force cost| / grid-error band");
    report.details[label + "_value_band"] = {{"phi", phi}, {"phi_refined", phi_fine}, {"band", band},
                                             {"extracted", path_out.terminal_cost}, {"brute_force", bf->cost}};
  }
}

}  // namespace

validation::ValidationReport cmd_validate(const fs::path& suite_path, int workers, std::ostream& log) {
  const json j = io::read_json(suite_path);
  Suite suite;
  try {
    suite = parse_suite(j);
  } catch (const ConfigError& e) {
    throw ConfigError(suite_path.string() + ": " + e.what());
  }
  validation::ValidationReport report;
  const auto t0 = Clock::now();
  if (suite.toy) toy_checks(*suite.toy, suite, workers, report, log);
  for (const auto& item : suite.scenarios) {
    scenario_checks(item, suite_path.parent_path(), suite, workers, report, log);
  }
  report.details["mutation"] = j.value("mutation", "none");
  report.details["seconds"] = seconds_since(t0);
  return report;
}

}  // namespace infotraj::cli
