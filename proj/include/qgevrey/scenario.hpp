#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "qgevrey/problem_model.hpp"

namespace qgevrey {

struct Block {
  std::string name;
  nlohmann::json params;
};

struct Scenario {
  std::string name;
  ProblemSpec problem;
  NormParams norms;
  std::optional<RadiusSchedule> schedule;
  SectorGeometry geometry;
  std::vector<Block> run_plan;
  double angle_scale = 1.0;  // radians per configured angle unit
};

// Block names in execution order.
const std::vector<std::string>& block_order();

// Throws ValidationError naming the JSON location on schema violations.
Scenario parse_scenario(const nlohmann::json& j);
Scenario load_scenario(const std::filesystem::path& path);

struct Check {
  std::string block;
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string relation;  // how measured compares to tolerance, e.g. "<=", ">="
  bool pass = false;
};

struct RunOptions {
  std::filesystem::path out_dir;
  std::set<std::string> only;  // empty: every block in the plan
  int threads = 1;
  std::uint64_t seed = 20240601;
  std::filesystem::path cache_dir;  // empty: <out>/coefficients
};

struct RunResult {
  std::vector<Check> checks;
  std::vector<std::string> files;
  int exit_code = 0;
  std::string message;
};

RunResult run_scenario(const Scenario& sc, const RunOptions& opt);

}  // namespace qgevrey
