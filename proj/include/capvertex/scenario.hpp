#pragma once

// Scenario configuration files and their execution.
//
// A config is one JSON object with a "kind" key. Unknown keys, wrong types
// and out-of-range values raise ConfigError carrying the 1-based line of the
// offending value. The key schema is documented in the README.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "capvertex/analytic.hpp"
#include "capvertex/evolver.hpp"
#include "capvertex/graph_solver.hpp"

namespace capvertex {

enum class ScenarioKind { Classify, WedgeCap, TrihedralCap, CylinderCap, RectanglePDE, Evolve, Verify };

const char* to_string(ScenarioKind kind);

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::Classify;
  std::uint64_t seed = 0;

  // classify
  double alpha = 0.0;
  int grid = 181;
  double gamma_min = 0.0;
  double gamma_max = kPi;

  // caps and evolve
  std::optional<SupportConfig> support;
  std::optional<double> h;
  int refinement = -1;  // caps: no mesh when negative
  double target_volume = 1.0;
  double perturbation = 0.0;
  EvolveOptions evolve;

  // rectangle_pde
  RectangleProblem rectangle;
  double solve_tol = 1e-10;

  // verify
  std::string suite;
};

/// Parse config text. `source` prefixes error messages ("<source>:<line>: ").
ScenarioConfig parse_config(const std::string& text, const std::string& source = "config");
/// Throws ConfigError when the file cannot be read.
ScenarioConfig load_config(const std::string& path);

/// Subcommand that runs a kind: classify, cap, solve-graph, evolve, verify.
const char* subcommand_for(ScenarioKind kind);

struct Artifact {
  std::string name;
  std::string content;
};

struct RunResult {
  int exit_code = 0;  // 0 success or pass, 1 criterion fail
  std::vector<Artifact> artifacts;
  std::string summary;  // one line for the terminal
};

/// Runs the scenario entirely in memory. Errors propagate as exceptions.
RunResult run_scenario(const ScenarioConfig& config);

}  // namespace capvertex
