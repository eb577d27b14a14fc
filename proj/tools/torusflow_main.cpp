#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "torusflow/audit.hpp"
#include "torusflow/config.hpp"
#include "torusflow/errors.hpp"
#include "torusflow/flow.hpp"
#include "torusflow/monitor.hpp"
#include "torusflow/runio.hpp"

extern char** environ;

namespace {

using namespace torusflow;
namespace fs = std::filesystem;

constexpr const char* kFooter =
    "Configuration precedence: preset defaults < --config file < "
    "TORUSFLOW_* environment < flags.\n"
    "Environment keys nest with double underscores, values are parsed as "
    "JSON with a plain-string fallback (TORUSFLOW_FLOW__KAPPA=0.5, "
    "TORUSFLOW_INITIAL__PRESET=perturbed).\n"
    "\n"
    "Exit codes:\n"
    "  0   finished (run reached its end time)\n"
    "  2   invalid configuration or request\n"
    "  3   missing or unreadable run data\n"
    "  10  metric positivity lost\n"
    "  11  curvature ceiling exceeded\n"
    "  12  non-finite field data\n";

std::map<std::string, std::string> collect_env() {
  std::map<std::string, std::string> env;
  for (char** e = environ; e && *e; ++e) {
    std::string entry(*e);
    std::size_t eq = entry.find('=');
    if (eq == std::string::npos) continue;
    std::string key = entry.substr(0, eq);
    if (key.rfind("TORUSFLOW_", 0) == 0) env[key] = entry.substr(eq + 1);
  }
  return env;
}

int error_exit_code(ErrorCode c) {
  return (c == ErrorCode::missing_run || c == ErrorCode::io_error) ? 3 : 2;
}

struct CommonFlags {
  std::string config_path;
  ConfigOverrides overrides;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path,
                  "JSON configuration file (single structured document)");
  cmd->add_option("--preset", f.overrides.preset,
                  "initial-data preset: flat_fixed_point, exponential, "
                  "frozen_heat, perturbed");
  cmd->add_option("--out", f.overrides.out, "output directory for artifacts");
  cmd->add_option("--seed", f.overrides.seed, "perturbation seed");
  cmd->add_option("--until", f.overrides.until, "end time of the run");
  cmd->add_option("--dt", f.overrides.dt, "requested step size");
  cmd->add_option("--ceiling", f.overrides.ceiling,
                  "absolute curvature ceiling");
}

/// Assembles and validates; prints diagnostics and returns nonzero on
/// failure.
int load_config(const CommonFlags& flags, RunConfig& cfg) {
  std::optional<std::string> text;
  if (!flags.config_path.empty()) {
    std::ifstream in(flags.config_path, std::ios::binary);
    if (!in) {
      std::cerr << "cannot read config file " << flags.config_path << "\n";
      return 3;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }
  ConfigLoad load = assemble_config(text, collect_env(), flags.overrides);
  if (!load.diagnostics.empty()) {
    for (const Diagnostic& d : load.diagnostics)
      std::cerr << (d.path.empty() ? std::string("config") : d.path) << ": "
                << d.message << "\n";
    return 2;
  }
  cfg = load.config;
  return 0;
}

struct Session {
  RunConfig cfg;
  Grid grid;
  SpectralOps ops;
  FlowEngine engine;
  FlowState state;

  explicit Session(const RunConfig& c)
      : cfg(c), grid(config_grid(c)), ops(grid), engine(ops, c.flow) {
    InitialData init = make_initial_state(cfg, ops);
    state = std::move(init.state);
    if (init.background) engine.set_background(std::move(*init.background));
  }
};

std::vector<Snapshot> stride_snapshots(const std::vector<Snapshot>& snaps,
                                       int stride) {
  if (stride <= 1) return snaps;
  std::vector<Snapshot> out;
  for (std::size_t i = 0; i < snaps.size(); i += static_cast<std::size_t>(stride))
    out.push_back(snaps[i]);
  return out;
}

void print_termination(const RunResult& result) {
  std::printf("terminated: %s at t=%.6g (steps=%ld rejections=%ld)\n",
              termination_cause_name(result.cause), result.t_final,
              result.total_steps, result.total_rejections);
  if (!result.detail.empty()) std::printf("  %s\n", result.detail.c_str());
}

int cmd_validate(const CommonFlags& flags) {
  RunConfig cfg;
  int rc = load_config(flags, cfg);
  if (rc != 0) return rc;
  std::cout << serialize_config(cfg);
  return 0;
}

int run_audit_stage(const Session& s, const RunResult& result,
                    const fs::path& dir) {
  AuditOutput audit =
      audit_run(s.ops, s.engine, result.snapshots, s.cfg.audit.stride);
  write_audit_output(dir, audit);
  std::printf("audit: %d rows, worst identity residual %.3e\n",
              audit.summary.rows,
              std::max({audit.summary.volume.linf, audit.summary.scalar.linf,
                        audit.summary.ricci.linf,
                        audit.summary.form_heat.linf,
                        audit.summary.potential_metric.linf,
                        audit.summary.potential_heat.linf}));
  return 0;
}

int run_monitor_stage(const Session& s, const RunResult& result,
                      const fs::path& dir) {
  std::vector<Snapshot> snaps =
      stride_snapshots(result.snapshots, s.cfg.monitor.stride);
  MonitorConfig mc = s.cfg.monitor.params;
  if (s.cfg.monitor.calibrate) {
    mc.C = calibrate_constant(s.ops, s.engine, snaps, {mc});
    write_calibration(dir, mc.C);
    std::printf("calibrated C = %.17g\n", mc.C);
  }
  MonitorOutput mon = monitor_run(s.ops, s.engine, snaps, mc);
  write_monitor_output(dir, mon);
  std::printf("monitor: %d samples, margin fraction %.4f, min margin %.3e, "
              "lp bound %s\n",
              mon.summary.samples, mon.summary.frac_margin_diff_nonneg,
              mon.summary.margin_diff_min,
              mon.summary.all_lp_ok ? "held" : "VIOLATED");
  return 0;
}

int cmd_run(const CommonFlags& flags) {
  RunConfig cfg;
  int rc = load_config(flags, cfg);
  if (rc != 0) return rc;

  Session s(cfg);
  RunResult result = s.engine.run(s.state, config_run_options(cfg));

  fs::path dir(cfg.output.dir);
  write_run_dir(dir, cfg, result);
  if (cfg.audit.enabled && result.snapshots.size() >= 3)
    run_audit_stage(s, result, dir);
  if (cfg.monitor.enabled && result.snapshots.size() >= 3)
    run_monitor_stage(s, result, dir);

  print_termination(result);
  std::printf("artifacts in %s\n", dir.string().c_str());
  return termination_exit_code(result.cause);
}

int cmd_audit(const std::string& run_dir, int stride) {
  StoredRun run = read_run_dir(run_dir);
  if (run.result.snapshots.size() < 3)
    throw TfError(ErrorCode::insufficient_samples,
                  "stored run has fewer than three snapshots");
  run.config.audit.stride = stride > 0 ? stride : run.config.audit.stride;
  Session s(run.config);
  return run_audit_stage(s, run.result, run_dir);
}

int cmd_monitor(const std::string& run_dir, const MonitorSection& override_mon,
                bool have_params) {
  StoredRun run = read_run_dir(run_dir);
  if (have_params) run.config.monitor.params = override_mon.params;
  run.config.monitor.calibrate = override_mon.calibrate;
  if (override_mon.stride > 0) run.config.monitor.stride = override_mon.stride;
  Session s(run.config);
  return run_monitor_stage(s, run.result, run_dir);
}

int cmd_calibrate(const CommonFlags& flags) {
  RunConfig cfg;
  int rc = load_config(flags, cfg);
  if (rc != 0) return rc;

  Session s(cfg);
  RunResult result = s.engine.run(s.state, config_run_options(cfg));
  if (result.cause != TerminationCause::reached_t_end) {
    print_termination(result);
    std::cerr << "calibration run did not reach its end time\n";
    return termination_exit_code(result.cause);
  }
  fs::path dir(cfg.output.dir);
  write_run_dir(dir, cfg, result);

  std::vector<Snapshot> snaps =
      stride_snapshots(result.snapshots, cfg.monitor.stride);
  std::vector<MonitorConfig> cfgs;
  for (int p : {3, 4})
    for (double theta : {1.0, 2.0}) {
      MonitorConfig mc = cfg.monitor.params;
      mc.p = p;
      mc.theta = theta;
      cfgs.push_back(mc);
    }
  double C = calibrate_constant(s.ops, s.engine, snaps, cfgs);
  write_calibration(dir, C);
  std::printf("calibrated C = %.17g over p in {3,4}, theta in {1,2}\n", C);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"coupled metric and 2-form flow on flat tori, with built-in "
               "identity audits and local curvature-estimate monitoring"};
  app.footer(kFooter);
  app.require_subcommand(1);

  CommonFlags validate_flags, run_flags, calibrate_flags;
  CLI::App* validate =
      app.add_subcommand("validate", "check a configuration and print the "
                                     "fully resolved form");
  add_common_flags(validate, validate_flags);

  CLI::App* run = app.add_subcommand(
      "run", "integrate the flow and write run artifacts");
  add_common_flags(run, run_flags);

  std::string audit_dir;
  int audit_stride = 0;
  CLI::App* audit = app.add_subcommand(
      "audit", "recompute the identity audit of a stored run");
  audit->add_option("run_dir", audit_dir, "run directory")->required();
  audit->add_option("--stride", audit_stride,
                    "snapshot stride of the centered differences");

  std::string monitor_dir;
  MonitorSection monitor_override;
  monitor_override.stride = 0;
  bool mon_have = false;
  CLI::App* monitor = app.add_subcommand(
      "monitor", "recompute the local-estimate monitor of a stored run");
  monitor->add_option("run_dir", monitor_dir, "run directory")->required();
  auto mark = [&mon_have](auto) { mon_have = true; };
  monitor->add_option("--p", monitor_override.params.p, "integral exponent")
      ->each(mark);
  monitor->add_option("--theta", monitor_override.params.theta,
                      "cutoff slope")->each(mark);
  monitor->add_option("--tau", monitor_override.params.tau,
                      "inner-ball shrink factor")->each(mark);
  monitor->add_option("--radius", monitor_override.params.ball_radius,
                      "initial-metric ball radius")->each(mark);
  monitor->add_option("--constant", monitor_override.params.C,
                      "universal constant C")->each(mark);
  monitor->add_option("--stride", monitor_override.stride, "snapshot stride");
  monitor->add_flag("--calibrate", monitor_override.calibrate,
                    "calibrate C before monitoring");

  std::string plot_run_dir, plot_out_dir;
  CLI::App* plot = app.add_subcommand(
      "plot-data", "emit per-series CSV files from a stored run");
  plot->add_option("run_dir", plot_run_dir, "run directory")->required();
  plot->add_option("--out", plot_out_dir,
                   "CSV directory (default <run_dir>/plot)");

  CLI::App* calibrate = app.add_subcommand(
      "calibrate", "run a configuration and fit the smallest workable "
                   "universal constant");
  add_common_flags(calibrate, calibrate_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(validate)) return cmd_validate(validate_flags);
    if (app.got_subcommand(run)) return cmd_run(run_flags);
    if (app.got_subcommand(audit)) return cmd_audit(audit_dir, audit_stride);
    if (app.got_subcommand(monitor))
      return cmd_monitor(monitor_dir, monitor_override, mon_have);
    if (app.got_subcommand(plot)) {
      emit_plot_data(plot_run_dir, plot_out_dir.empty()
                                       ? fs::path(plot_run_dir) / "plot"
                                       : fs::path(plot_out_dir));
      return 0;
    }
    if (app.got_subcommand(calibrate)) return cmd_calibrate(calibrate_flags);
  } catch (const TfError& e) {
    std::cerr << error_code_name(e.code()) << ": " << e.what() << "\n";
    return error_exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
