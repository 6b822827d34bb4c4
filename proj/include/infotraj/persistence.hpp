#pragma once

#include <filesystem>
#include <json.hpp>

#include "infotraj/grid.hpp"
#include "infotraj/hjsolver.hpp"

namespace infotraj::io {

using nlohmann::json;

json to_json(const grid::GridSpec& g);
grid::GridSpec grid_from_json(const json& j);

json to_json(const hj::SolverConfig& cfg);
hj::SolverConfig solver_config_from_json(const json& j);

/// FNV-1a 64 of a string, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& text);

/// Writes manifest.json plus phi_NNNN.bin / Phi_NNNN.bin per snapshot.
/// `extra` is stored verbatim under "scenario".
void save_solution(const std::filesystem::path& dir, const hj::HybridSolution& sol,
                   const json& extra = json::object());

/// Inverse of save_solution. If `extra` is given it receives the "scenario" entry.
hj::HybridSolution load_solution(const std::filesystem::path& dir, json* extra = nullptr);

/// Dumps with two-space indentation and a trailing newline.
void write_json(const std::filesystem::path& path, const json& j);
json read_json(const std::filesystem::path& path);

}  // namespace infotraj::io
