#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "torusflow/flow.hpp"
#include "torusflow/monitor.hpp"

namespace torusflow {

struct GridConfig {
  int points = 64;
  std::vector<double> periods; // one per real axis; empty means all 1.0
};

/// Named initial-data families. "perturbed" draws mode coefficients from a
/// seeded Mersenne generator in a documented order (see make_initial_state).
struct InitialConfig {
  std::string preset = "flat_fixed_point";
  std::uint64_t seed = 7;
  double amplitude = 1e-2;
  int max_mode = 2;
};

struct TimeConfig {
  double t_end = 1.0;
  double sample_dt = 0.02;
};

struct CeilingConfig {
  double factor = 1e6;
  std::optional<double> absolute;
};

struct AuditSection {
  bool enabled = true;
  int stride = 1;
};

struct MonitorSection {
  bool enabled = false;
  int stride = 1;
  bool calibrate = false;
  MonitorConfig params;
};

struct OutputSection {
  std::string dir = "runs/out";
  bool snapshots = true;
};

struct RunConfig {
  FlowParams flow; // carries the scenario
  bool generalized_kappa = false;
  bool check_cohomology = true; // potential scenarios check regardless
  GridConfig grid;
  InitialConfig initial;
  TimeConfig time;
  CeilingConfig ceiling;
  AuditSection audit;
  MonitorSection monitor;
  OutputSection output;
};

struct Diagnostic {
  std::string path;    // dotted config location, e.g. "flow.kappa"
  std::string message;
};

/// Command-line overrides folded in last (file < environment < flags).
struct ConfigOverrides {
  std::optional<std::string> preset;
  std::optional<std::uint64_t> seed;
  std::optional<double> until;
  std::optional<double> dt;
  std::optional<double> ceiling;
  std::optional<std::string> out;
};

struct ConfigLoad {
  RunConfig config;
  std::vector<Diagnostic> diagnostics;
};

/// Fully-defaulted config for a named preset; throws invalid_input for an
/// unknown name.
RunConfig preset_config(const std::string& name);

/// Parses JSON text, applies TORUSFLOW_-prefixed environment overrides
/// (double underscore nests sections, e.g. TORUSFLOW_FLOW__KAPPA) and flag
/// overrides, then validates. Every problem is reported; nothing fails fast.
ConfigLoad assemble_config(const std::optional<std::string>& json_text,
                           const std::map<std::string, std::string>& env,
                           const ConfigOverrides& flags);

/// All violated invariants of an already-typed config, one diagnostic each.
std::vector<Diagnostic> validate_config(const RunConfig& cfg);

/// Canonical JSON form: fixed key order, every field explicit. Feeding the
/// output back through assemble_config reproduces the same config.
std::string serialize_config(const RunConfig& cfg);

Grid config_grid(const RunConfig& cfg);
RunOptions config_run_options(const RunConfig& cfg);

struct InitialData {
  FlowState state;
  std::optional<PotentialBackground> background;
};

/// Realizes the preset initial data on the grid. Perturbation draws: modes
/// (kx, ky) with kx in [0, max_mode], ky in [-max_mode, max_mode], kept when
/// kx > 0 or (kx == 0 and ky > 0), in lexicographic order; for each mode two
/// unit doubles u = 2*(word >> 11)/2^53 - 1 are taken from mt19937_64(seed),
/// scaling cos and sin parts.
InitialData make_initial_state(const RunConfig& cfg, const SpectralOps& ops);

} // namespace torusflow
