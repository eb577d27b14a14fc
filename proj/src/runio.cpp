#include "torusflow/runio.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "torusflow/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "snapshot files are written in host byte order and declared "
              "little-endian in their sidecars");

namespace torusflow {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TfError(ErrorCode::io_error, "cannot write " + path.string());
  out << text;
  if (!out) throw TfError(ErrorCode::io_error, "short write to " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TfError(ErrorCode::io_error, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json parse_file(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const TfError&) {
    throw;
  } catch (const std::exception& e) {
    throw TfError(ErrorCode::io_error,
                  path.string() + ": " + e.what());
  }
}

std::vector<std::string> snapshot_field_names(Scenario s) {
  if (s == Scenario::form_level_n1) return {"g_coeff", "a_coeff"};
  return {"phi", "f"};
}

json record_row(const SampleRow& r) {
  json j;
  j["t"] = r.t;
  j["sup_rm"] = r.sup_rm;
  j["sup_ric"] = r.sup_ric;
  j["sup_alpha"] = r.sup_alpha;
  j["min_eig"] = r.min_eig;
  j["area"] = r.area;
  j["alpha_integral"] = r.alpha_integral;
  j["dt_effective"] = r.dt_effective;
  j["steps"] = r.steps;
  j["rejections"] = r.rejections;
  return j;
}

json norms_json(const ResidualNorms& n) {
  return json{{"linf", n.linf}, {"l2", n.l2}};
}

json audit_row_json(const AuditRow& r) {
  json j;
  j["t"] = r.t;
  j["ds"] = r.ds;
  j["volume"] = norms_json(r.volume);
  j["scalar"] = norms_json(r.scalar);
  j["ricci"] = norms_json(r.ricci);
  j["form_heat"] = norms_json(r.form_heat);
  j["potential_metric"] = norms_json(r.potential_metric);
  j["potential_heat"] = norms_json(r.potential_heat);
  j["cfit_alpha_sq"] = r.cfit_alpha_sq;
  j["cfit_rm_bochner"] = r.cfit_rm_bochner;
  j["cfit_grad_rm"] = r.cfit_grad_rm;
  j["cfit_rm_cube"] = r.cfit_rm_cube;
  j["cfit_rm_evolution"] = r.cfit_rm_evolution;
  j["cfit_alpha_bochner"] = r.cfit_alpha_bochner;
  j["cfit_volume_growth"] = r.cfit_volume_growth;
  j["cfit_joint"] = r.cfit_joint;
  return j;
}

json monitor_row_json(const MonitorRow& r, const MonitorConstants& c) {
  json j;
  j["t"] = r.t;
  j["s"] = r.s;
  j["A1"] = r.a_terms[0];
  j["A2"] = r.a_terms[1];
  j["A3"] = r.a_terms[2];
  j["A4"] = r.a_terms[3];
  j["B1"] = r.b_terms[0];
  j["B2"] = r.b_terms[1];
  j["B3"] = r.b_terms[2];
  j["B4"] = r.b_terms[3];
  j["B5"] = r.b_terms[4];
  j["U"] = r.u;
  j["a1"] = c.a1;
  j["a2"] = c.a2;
  j["a3"] = c.a3;
  j["K_prime"] = c.K_prime;
  j["A_const"] = c.A;
  j["B_const"] = c.B;
  j["dU_dt_measured"] = r.du_ds;
  j["gronwall_margin"] = r.margin_diff;
  j["gronwall_margin_integral"] = r.margin_int;
  j["metric_equiv_ok"] = r.metric_equiv_ok;
  j["grad_bound_ok"] = r.grad_bound_ok;
  j["trace_ineq_ok"] = r.trace_ineq_ok;
  j["cutoff_ineq_ok"] = r.cutoff_ineq_ok;
  j["lp_ball_integral"] = r.lp_lhs;
  j["lp_bound_log"] = r.lp_rhs_log;
  j["lp_normalized"] = r.lp_normalized;
  j["lp_ok"] = r.lp_ok;
  j["vol_ball"] = r.vol_ball;
  j["vol_inner"] = r.vol_inner;
  j["dual_dev"] = r.dual_dev;
  return j;
}

int snapshot_axes(Scenario s) {
  return s == Scenario::potential_torus_n2 ? 4 : 2;
}

TerminationCause cause_from_name(const std::string& name) {
  for (TerminationCause c :
       {TerminationCause::reached_t_end, TerminationCause::positivity_lost,
        TerminationCause::blowup_threshold, TerminationCause::nan_detected})
    if (name == termination_cause_name(c)) return c;
  throw TfError(ErrorCode::io_error, "unknown termination cause: " + name);
}

std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_series_csv(const fs::path& path, const char* value_name,
                      const std::vector<std::pair<double, double>>& rows) {
  std::string text = std::string("t,") + value_name + "\n";
  for (const auto& [t, v] : rows)
    text += csv_number(t) + "," + csv_number(v) + "\n";
  write_text(path, text);
}

} // namespace

void write_run_dir(const fs::path& dir, const RunConfig& cfg,
                   const RunResult& result) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw TfError(ErrorCode::io_error,
                  "cannot create " + dir.string() + ": " + ec.message());

  write_text(dir / "config.normalized.json", serialize_config(cfg));

  std::string record;
  for (const SampleRow& r : result.rows) record += record_row(r).dump() + "\n";
  write_text(dir / "record.jsonl", record);

  json term;
  term["cause"] = termination_cause_name(result.cause);
  term["exit_code"] = termination_exit_code(result.cause);
  term["t_final"] = result.t_final;
  term["detail"] = result.detail;
  term["ceiling"] = result.ceiling;
  term["total_steps"] = result.total_steps;
  term["total_rejections"] = result.total_rejections;
  term["samples"] = result.rows.size();
  term["snapshots"] = cfg.output.snapshots ? result.snapshots.size() : 0;
  write_text(dir / "termination.json", term.dump(2) + "\n");

  if (!cfg.output.snapshots) return;
  fs::create_directories(dir / "snapshots", ec);
  if (ec)
    throw TfError(ErrorCode::io_error, "cannot create snapshot directory");

  auto names = snapshot_field_names(cfg.flow.scenario);
  int axes = snapshot_axes(cfg.flow.scenario);
  for (std::size_t i = 0; i < result.snapshots.size(); ++i) {
    const Snapshot& snap = result.snapshots[i];
    char stem[16];
    std::snprintf(stem, sizeof(stem), "%06zu", i);

    json side;
    side["t"] = snap.t;
    side["shape"] = std::vector<int>(static_cast<std::size_t>(axes),
                                     cfg.grid.points);
    side["dtype"] = "float64";
    side["endianness"] = "little";
    side["order"] = "row-major";
    side["fields"] = names;
    write_text(dir / "snapshots" / (std::string(stem) + ".json"),
               side.dump(2) + "\n");

    std::ofstream bin(dir / "snapshots" / (std::string(stem) + ".bin"),
                      std::ios::binary);
    if (!bin) throw TfError(ErrorCode::io_error, "cannot write snapshot");
    for (const RField& f : snap.fields)
      bin.write(reinterpret_cast<const char*>(f.data()),
                static_cast<std::streamsize>(f.size() * sizeof(double)));
    if (!bin) throw TfError(ErrorCode::io_error, "short snapshot write");
  }
}

void write_audit_output(const fs::path& dir, const AuditOutput& out) {
  std::string rows;
  for (const AuditRow& r : out.rows) rows += audit_row_json(r).dump() + "\n";
  write_text(dir / "audit.jsonl", rows);

  const AuditSummary& s = out.summary;
  json j;
  j["rows"] = s.rows;
  j["ric_bound"] = s.ric_bound;
  j["alpha_bound"] = s.alpha_bound;
  j["volume"] = norms_json(s.volume);
  j["scalar"] = norms_json(s.scalar);
  j["ricci"] = norms_json(s.ricci);
  j["form_heat"] = norms_json(s.form_heat);
  j["potential_metric"] = norms_json(s.potential_metric);
  j["potential_heat"] = norms_json(s.potential_heat);
  j["cfit_alpha_sq"] = s.cfit_alpha_sq;
  j["cfit_rm_bochner"] = s.cfit_rm_bochner;
  j["cfit_grad_rm"] = s.cfit_grad_rm;
  j["cfit_rm_cube"] = s.cfit_rm_cube;
  j["cfit_rm_evolution"] = s.cfit_rm_evolution;
  j["cfit_alpha_bochner"] = s.cfit_alpha_bochner;
  j["cfit_volume_growth"] = s.cfit_volume_growth;
  j["cfit_joint"] = s.cfit_joint;
  write_text(dir / "audit_summary.json", j.dump(2) + "\n");
}

void write_monitor_output(const fs::path& dir, const MonitorOutput& out) {
  std::string rows;
  for (const MonitorRow& r : out.rows)
    rows += monitor_row_json(r, out.summary.constants).dump() + "\n";
  write_text(dir / "monitor.jsonl", rows);

  const MonitorSummary& s = out.summary;
  json j;
  j["p"] = s.p;
  j["theta"] = s.theta;
  j["tau"] = s.tau;
  j["ball_radius"] = s.ball_radius;
  j["C"] = s.C;
  j["centre"] = {s.centre[0], s.centre[1]};
  j["samples"] = s.samples;
  json c;
  c["K"] = s.constants.K;
  c["L"] = s.constants.L;
  c["rho"] = s.constants.rho;
  c["a1"] = s.constants.a1;
  c["a2"] = s.constants.a2;
  c["a3"] = s.constants.a3;
  c["K_prime"] = s.constants.K_prime;
  c["A_const"] = s.constants.A;
  c["B_const"] = s.constants.B;
  c["T_estimate"] = s.constants.T;
  c["coef_a"] = s.constants.coef_a;
  c["coef_b"] = s.constants.coef_b;
  j["constants"] = std::move(c);
  j["all_metric_equiv"] = s.all_metric_equiv;
  j["all_grad_bound"] = s.all_grad_bound;
  j["all_trace_ineq"] = s.all_trace_ineq;
  j["all_cutoff_ineq"] = s.all_cutoff_ineq;
  j["all_integral_ok"] = s.all_integral_ok;
  j["all_lp_ok"] = s.all_lp_ok;
  j["margin_diff_min"] = s.margin_diff_min;
  j["margin_int_min"] = s.margin_int_min;
  j["frac_margin_diff_nonneg"] = s.frac_margin_diff_nonneg;
  j["dual_dev_max"] = s.dual_dev_max;
  j["init_lp_outer"] = s.init_lp_outer;
  write_text(dir / "monitor_summary.json", j.dump(2) + "\n");
}

void write_calibration(const fs::path& dir, double C) {
  json j;
  j["C"] = C;
  write_text(dir / "calibration.json", j.dump(2) + "\n");
}

StoredRun read_run_dir(const fs::path& dir) {
  if (!fs::exists(dir / "record.jsonl"))
    throw TfError(ErrorCode::missing_run,
                  "no run record at " + dir.string());

  StoredRun out;
  std::string cfg_text = read_text(dir / "config.normalized.json");
  ConfigLoad load = assemble_config(cfg_text, {}, {});
  if (!load.diagnostics.empty())
    throw TfError(ErrorCode::io_error,
                  "stored config is invalid: " + load.diagnostics[0].path +
                      ": " + load.diagnostics[0].message);
  out.config = load.config;

  std::istringstream record(read_text(dir / "record.jsonl"));
  std::string line;
  while (std::getline(record, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const std::exception& e) {
      throw TfError(ErrorCode::io_error, std::string("bad record row: ") +
                                             e.what());
    }
    SampleRow r;
    r.t = j.at("t").get<double>();
    r.sup_rm = j.at("sup_rm").get<double>();
    r.sup_ric = j.at("sup_ric").get<double>();
    r.sup_alpha = j.at("sup_alpha").get<double>();
    r.min_eig = j.at("min_eig").get<double>();
    r.area = j.at("area").get<double>();
    r.alpha_integral = j.at("alpha_integral").get<double>();
    r.dt_effective = j.at("dt_effective").get<double>();
    r.steps = j.at("steps").get<long>();
    r.rejections = j.at("rejections").get<long>();
    out.result.rows.push_back(r);
  }

  json term = parse_file(dir / "termination.json");
  out.result.cause = cause_from_name(term.at("cause").get<std::string>());
  out.result.t_final = term.at("t_final").get<double>();
  out.result.detail = term.at("detail").get<std::string>();
  out.result.ceiling = term.at("ceiling").get<double>();
  out.result.total_steps = term.at("total_steps").get<long>();
  out.result.total_rejections = term.at("total_rejections").get<long>();

  fs::path snapdir = dir / "snapshots";
  if (!fs::exists(snapdir)) return out;

  std::size_t m = config_grid(out.config).size();
  for (std::size_t i = 0;; ++i) {
    char stem[16];
    std::snprintf(stem, sizeof(stem), "%06zu", i);
    fs::path side_path = snapdir / (std::string(stem) + ".json");
    if (!fs::exists(side_path)) break;
    json side = parse_file(side_path);

    Snapshot snap;
    snap.t = side.at("t").get<double>();
    auto fields = side.at("fields").get<std::vector<std::string>>();

    std::ifstream bin(snapdir / (std::string(stem) + ".bin"),
                      std::ios::binary);
    if (!bin)
      throw TfError(ErrorCode::io_error, "missing snapshot body " +
                                             std::string(stem));
    for (std::size_t f = 0; f < fields.size(); ++f) {
      RField field(m);
      bin.read(reinterpret_cast<char*>(field.data()),
               static_cast<std::streamsize>(m * sizeof(double)));
      if (bin.gcount() != static_cast<std::streamsize>(m * sizeof(double)))
        throw TfError(ErrorCode::io_error, "truncated snapshot " +
                                               std::string(stem));
      snap.fields.push_back(std::move(field));
    }
    out.result.snapshots.push_back(std::move(snap));
  }
  return out;
}

void emit_plot_data(const fs::path& run_dir, const fs::path& out_dir) {
  if (!fs::exists(run_dir / "record.jsonl"))
    throw TfError(ErrorCode::missing_run,
                  "no run record at " + run_dir.string());
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw TfError(ErrorCode::io_error, "cannot create " + out_dir.string());

  StoredRun run = read_run_dir(run_dir);
  std::vector<std::pair<double, double>> sup_rm, sup_ric, sup_alpha, area;
  for (const SampleRow& r : run.result.rows) {
    sup_rm.emplace_back(r.t, r.sup_rm);
    sup_ric.emplace_back(r.t, r.sup_ric);
    sup_alpha.emplace_back(r.t, r.sup_alpha);
    area.emplace_back(r.t, r.area);
  }
  write_series_csv(out_dir / "sup_rm.csv", "sup_rm", sup_rm);
  write_series_csv(out_dir / "sup_ric.csv", "sup_ric", sup_ric);
  write_series_csv(out_dir / "sup_alpha.csv", "sup_alpha", sup_alpha);
  write_series_csv(out_dir / "area.csv", "area", area);

  std::vector<std::pair<double, double>> u, mdiff, mint;
  if (fs::exists(run_dir / "monitor.jsonl")) {
    std::istringstream rows(read_text(run_dir / "monitor.jsonl"));
    std::string line;
    while (std::getline(rows, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      double t = j.at("t").get<double>();
      u.emplace_back(t, j.at("U").get<double>());
      mdiff.emplace_back(t, j.at("gronwall_margin").get<double>());
      mint.emplace_back(t, j.at("gronwall_margin_integral").get<double>());
    }
  }
  write_series_csv(out_dir / "u.csv", "u", u);
  write_series_csv(out_dir / "margin_differential.csv", "margin_differential",
                   mdiff);
  write_series_csv(out_dir / "margin_integral.csv", "margin_integral", mint);
}

} // namespace torusflow
