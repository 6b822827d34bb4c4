#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "infotraj/dynamics.hpp"
#include "infotraj/grid.hpp"
#include "infotraj/hjsolver.hpp"
#include "infotraj/sensing.hpp"

namespace infotraj::scenario {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

enum class SystemKind { Dubins, ToyCascade };
enum class ExtractMethod { Characteristic, Receding };

struct VehicleConfig {
  SystemKind kind = SystemKind::Dubins;
  double speed = 5.0;       // m/s
  double omega_max = 0.05;  // rad/s
};

/// Starting poses X = const, psi = const, Y evenly spaced over [y_min, y_max].
struct FanConfig {
  double X = 0.0;
  double psi = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;
  int count = 1;

  std::vector<StateVector> states() const;
};

struct ExtractionConfig {
  ExtractMethod method = ExtractMethod::Characteristic;
  double dt = 0.1;  // s
  int legs = 6;     // receding re-solves
};

struct Scenario {
  int schema_version = kSchemaVersion;
  std::string name;
  VehicleConfig vehicle;
  std::optional<sensing::GaussianPrior> prior;         // Dubins only
  std::vector<sensing::DopplerSensor::Params> sensors;  // empty: no information
  /// Explicit z0 (vec, column-major). Defaults to the prior information.
  std::optional<InfoVector> initial_information;
  grid::GridSpec grid;
  hj::SolverConfig solver;
  std::vector<StateVector> initial_states;
  std::optional<FanConfig> fan;
  ExtractionConfig extraction;
  std::string output_dir;
  std::uint64_t seed = 20240601;
  json provenance = json::object();

  /// initial_states followed by the fan.
  std::vector<StateVector> all_initial_states() const;
};

/// Parses and validates; every error names the offending field path.
Scenario parse_scenario(const json& j);
/// Reads `path`; throws InputError on I/O or parse failure, ConfigError on
/// invalid content.
Scenario load_scenario(const std::filesystem::path& path);
json to_json(const Scenario& s);

std::shared_ptr<const dynamics::CascadeSystem> build_system(const Scenario& s);
InfoVector initial_information(const Scenario& s);

}  // namespace infotraj::scenario
