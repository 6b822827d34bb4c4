#include "infotraj/persistence.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>

#include "infotraj/errors.hpp"

namespace infotraj::io {

namespace fs = std::filesystem;

json to_json(const grid::GridSpec& g) {
  json axes = json::array();
  for (const auto& a : g.axes()) {
    axes.push_back({{"min", a.min}, {"max", a.max}, {"n", a.n}, {"periodic", a.periodic}});
  }
  return axes;
}

grid::GridSpec grid_from_json(const json& j) {
  std::vector<grid::Axis> axes;
  for (const auto& a : j) {
    axes.push_back({a.at("min").get<double>(), a.at("max").get<double>(),
                    a.at("n").get<int>(), a.at("periodic").get<bool>()});
  }
  return grid::GridSpec(std::move(axes));
}

json to_json(const hj::SolverConfig& cfg) {
  return {{"horizon", cfg.horizon},
          {"cfl", cfg.cfl},
          {"integrator", cfg.integrator == hj::Integrator::Euler ? "euler" : "rk2"},
          {"dissipation", cfg.dissipation == hj::DissipationMode::Global ? "global" : "local"},
          {"dissipation_form",
           cfg.dissipation_form == hj::DissipationForm::Difference ? "difference" : "sum"},
          {"snapshot_stride", cfg.snapshot_stride}};
}

hj::SolverConfig solver_config_from_json(const json& j) {
  hj::SolverConfig cfg;
  cfg.horizon = j.at("horizon").get<double>();
  cfg.cfl = j.at("cfl").get<double>();
  cfg.integrator = j.at("integrator") == "euler" ? hj::Integrator::Euler : hj::Integrator::TvdRk2;
  cfg.dissipation = j.at("dissipation") == "global" ? hj::DissipationMode::Global
                                                    : hj::DissipationMode::Local;
  cfg.dissipation_form = j.at("dissipation_form") == "difference"
                             ? hj::DissipationForm::Difference
                             : hj::DissipationForm::Sum;
  cfg.snapshot_stride = j.at("snapshot_stride").get<int>();
  return cfg;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw InputError("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open " + path.string());
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

namespace {

std::string numbered(const char* stem, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%04zu.bin", stem, i);
  return buf;
}

}  // namespace

void save_solution(const fs::path& dir, const hj::HybridSolution& sol, const json& extra) {
  fs::create_directories(dir);
  json snaps = json::array();
  for (std::size_t i = 0; i < sol.snapshots.size(); ++i) {
    const auto& s = sol.snapshots[i];
    const std::string phi_file = numbered("phi", i), Phi_file = numbered("Phi", i);
    grid::write_binary(dir / phi_file, s.phi.values);
    grid::write_binary(dir / Phi_file, s.Phi.values);
    snaps.push_back({{"time", s.time}, {"phi", phi_file}, {"Phi", Phi_file}});
  }
  json z0 = json::array();
  for (Eigen::Index j = 0; j < sol.z0.size(); ++j) z0.push_back(sol.z0[j]);
  const json manifest = {
      {"format", "infotraj-solution"},
      {"version", 1},
      {"grid", to_json(sol.grid)},
      {"layout", "row-major, last axis fastest; Phi has m values per node, vec column-major"},
      {"encoding", "float64 little-endian"},
      {"m", sol.snapshots.empty() ? 0 : sol.snapshots.front().Phi.width},
      {"z0", z0},
      {"solver", to_json(sol.config)},
      {"steps", sol.steps},
      {"provenance", sol.provenance},
      {"snapshots", snaps},
      {"scenario", extra}};
  write_json(dir / "manifest.json", manifest);
}

hj::HybridSolution load_solution(const fs::path& dir, json* extra) {
  const json m = read_json(dir / "manifest.json");
  try {
    if (m.at("format") != "infotraj-solution") {
      throw InputError(dir.string() + " does not hold a solution manifest");
    }
    hj::HybridSolution sol;
    sol.grid = grid_from_json(m.at("grid"));
    sol.config = solver_config_from_json(m.at("solver"));
    sol.steps = m.at("steps").get<long>();
    sol.provenance = m.at("provenance").get<std::string>();
    const auto z0 = m.at("z0").get<std::vector<double>>();
    sol.z0 = Eigen::Map<const Eigen::VectorXd>(z0.data(), Eigen::Index(z0.size()));
    const int width = m.at("m").get<int>();
    for (const auto& s : m.at("snapshots")) {
      hj::Snapshot snap;
      snap.time = s.at("time").get<double>();
      snap.phi = grid::ScalarField(sol.grid, 0.0);
      snap.phi.values = grid::read_binary(dir / s.at("phi").get<std::string>(), sol.grid.size());
      snap.Phi = grid::VectorField(sol.grid, width, 0.0);
      snap.Phi.values = grid::read_binary(dir / s.at("Phi").get<std::string>(),
                                          sol.grid.size() * std::size_t(width));
      sol.snapshots.push_back(std::move(snap));
    }
    if (sol.snapshots.empty()) throw InputError("solution has no snapshots");
    if (extra) *extra = m.value("scenario", json::object());
    return sol;
  } catch (const json::exception& e) {
    throw InputError(dir.string() + "/manifest.json: " + e.what());
  }
}

}  // namespace infotraj::io
