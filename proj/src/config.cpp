#include "torusflow/config.hpp"

#include <cmath>
#include <random>

#include "json.hpp"
#include "torusflow/errors.hpp"

namespace torusflow {

using json = nlohmann::ordered_json;

namespace {

const char* scheme_name(Scheme s) {
  return s == Scheme::rk4 ? "rk4" : "imex1";
}

bool parse_scenario(const std::string& s, Scenario& out) {
  if (s == "form_level_n1") out = Scenario::form_level_n1;
  else if (s == "potential_torus_n1") out = Scenario::potential_torus_n1;
  else if (s == "potential_torus_n2") out = Scenario::potential_torus_n2;
  else return false;
  return true;
}

bool parse_scheme(const std::string& s, Scheme& out) {
  if (s == "rk4") out = Scheme::rk4;
  else if (s == "imex1") out = Scheme::imex1;
  else return false;
  return true;
}

bool known_preset(const std::string& name) {
  return name == "flat_fixed_point" || name == "exponential" ||
         name == "frozen_heat" || name == "perturbed";
}

/// Mean of the form coefficient each preset constructs (the metric mean is 1
/// for all of them), used for the load-time class compatibility check.
double preset_form_mean(const std::string& preset, double lambda) {
  if (preset == "exponential" || preset == "frozen_heat") return 0.0;
  return -lambda;
}

struct Reader {
  std::vector<Diagnostic>& diags;

  void flag(const std::string& path, const std::string& msg) {
    diags.push_back({path, msg});
  }

  void check_keys(const json& obj, const std::string& prefix,
                  std::initializer_list<const char*> known) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool ok = false;
      for (const char* k : known)
        if (it.key() == k) ok = true;
      if (!ok)
        flag(prefix.empty() ? it.key() : prefix + "." + it.key(),
             "unknown key");
    }
  }

  template <typename T>
  void number(const json& obj, const char* key, const std::string& prefix,
              T& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (v.is_number()) out = v.get<T>();
    else flag(prefix + "." + key, "expected a number");
  }

  void boolean(const json& obj, const char* key, const std::string& prefix,
               bool& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (v.is_boolean()) out = v.get<bool>();
    else flag(prefix + "." + key, "expected a boolean");
  }

  void text(const json& obj, const char* key, const std::string& prefix,
            std::string& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (v.is_string()) out = v.get<std::string>();
    else flag(prefix + "." + key, "expected a string");
  }
};

void read_config(const json& doc, RunConfig& cfg,
                 std::vector<Diagnostic>& diags) {
  Reader r{diags};
  if (!doc.is_object()) {
    r.flag("", "config root must be an object");
    return;
  }
  r.check_keys(doc, "",
               {"scenario", "grid", "flow", "initial", "time", "ceiling",
                "audit", "monitor", "output"});

  if (doc.contains("scenario")) {
    std::string s;
    if (doc.at("scenario").is_string()) {
      s = doc.at("scenario").get<std::string>();
      if (!parse_scenario(s, cfg.flow.scenario))
        r.flag("scenario", "must be one of form_level_n1, potential_torus_n1, "
                           "potential_torus_n2");
    } else {
      r.flag("scenario", "expected a string");
    }
  }

  if (doc.contains("grid") && doc.at("grid").is_object()) {
    const json& g = doc.at("grid");
    r.check_keys(g, "grid", {"points", "periods"});
    r.number(g, "points", "grid", cfg.grid.points);
    if (g.contains("periods")) {
      const json& p = g.at("periods");
      if (p.is_array()) {
        cfg.grid.periods.clear();
        for (const auto& v : p) {
          if (v.is_number()) cfg.grid.periods.push_back(v.get<double>());
          else r.flag("grid.periods", "expected numbers");
        }
      } else if (!p.is_null()) {
        r.flag("grid.periods", "expected an array");
      }
    }
  } else if (doc.contains("grid")) {
    r.flag("grid", "expected an object");
  }

  if (doc.contains("flow") && doc.at("flow").is_object()) {
    const json& f = doc.at("flow");
    r.check_keys(f, "flow",
                 {"kappa", "lambda", "freeze_metric", "scheme", "dt", "c_cfl",
                  "dt_min", "positivity_rtol", "generalized_kappa",
                  "check_cohomology"});
    r.number(f, "kappa", "flow", cfg.flow.kappa);
    r.number(f, "lambda", "flow", cfg.flow.lambda);
    r.boolean(f, "freeze_metric", "flow", cfg.flow.freeze_metric);
    r.number(f, "dt", "flow", cfg.flow.dt_request);
    r.number(f, "c_cfl", "flow", cfg.flow.c_cfl);
    r.number(f, "dt_min", "flow", cfg.flow.dt_min);
    r.number(f, "positivity_rtol", "flow", cfg.flow.positivity_rtol);
    r.boolean(f, "generalized_kappa", "flow", cfg.generalized_kappa);
    r.boolean(f, "check_cohomology", "flow", cfg.check_cohomology);
    std::string scheme;
    r.text(f, "scheme", "flow", scheme);
    if (!scheme.empty() && !parse_scheme(scheme, cfg.flow.scheme))
      r.flag("flow.scheme", "must be rk4 or imex1");
  } else if (doc.contains("flow")) {
    r.flag("flow", "expected an object");
  }

  if (doc.contains("initial") && doc.at("initial").is_object()) {
    const json& i = doc.at("initial");
    r.check_keys(i, "initial", {"preset", "seed", "amplitude", "max_mode"});
    r.text(i, "preset", "initial", cfg.initial.preset);
    r.number(i, "seed", "initial", cfg.initial.seed);
    r.number(i, "amplitude", "initial", cfg.initial.amplitude);
    r.number(i, "max_mode", "initial", cfg.initial.max_mode);
  } else if (doc.contains("initial")) {
    r.flag("initial", "expected an object");
  }

  if (doc.contains("time") && doc.at("time").is_object()) {
    const json& t = doc.at("time");
    r.check_keys(t, "time", {"t_end", "sample_dt"});
    r.number(t, "t_end", "time", cfg.time.t_end);
    r.number(t, "sample_dt", "time", cfg.time.sample_dt);
  } else if (doc.contains("time")) {
    r.flag("time", "expected an object");
  }

  if (doc.contains("ceiling") && doc.at("ceiling").is_object()) {
    const json& c = doc.at("ceiling");
    r.check_keys(c, "ceiling", {"factor", "absolute"});
    r.number(c, "factor", "ceiling", cfg.ceiling.factor);
    if (c.contains("absolute")) {
      const json& a = c.at("absolute");
      if (a.is_number()) cfg.ceiling.absolute = a.get<double>();
      else if (a.is_null()) cfg.ceiling.absolute.reset();
      else r.flag("ceiling.absolute", "expected a number or null");
    }
  } else if (doc.contains("ceiling")) {
    r.flag("ceiling", "expected an object");
  }

  if (doc.contains("audit") && doc.at("audit").is_object()) {
    const json& a = doc.at("audit");
    r.check_keys(a, "audit", {"enabled", "stride"});
    r.boolean(a, "enabled", "audit", cfg.audit.enabled);
    r.number(a, "stride", "audit", cfg.audit.stride);
  } else if (doc.contains("audit")) {
    r.flag("audit", "expected an object");
  }

  if (doc.contains("monitor") && doc.at("monitor").is_object()) {
    const json& m = doc.at("monitor");
    r.check_keys(m, "monitor",
                 {"enabled", "stride", "calibrate", "p", "theta", "tau",
                  "ball_radius", "centre", "C", "k_override", "l_override"});
    r.boolean(m, "enabled", "monitor", cfg.monitor.enabled);
    r.number(m, "stride", "monitor", cfg.monitor.stride);
    r.boolean(m, "calibrate", "monitor", cfg.monitor.calibrate);
    r.number(m, "p", "monitor", cfg.monitor.params.p);
    r.number(m, "theta", "monitor", cfg.monitor.params.theta);
    r.number(m, "tau", "monitor", cfg.monitor.params.tau);
    r.number(m, "ball_radius", "monitor", cfg.monitor.params.ball_radius);
    r.number(m, "C", "monitor", cfg.monitor.params.C);
    if (m.contains("centre")) {
      const json& c = m.at("centre");
      if (c.is_array() && c.size() == 2 && c[0].is_number() &&
          c[1].is_number()) {
        cfg.monitor.params.centre = {{c[0].get<long>(), c[1].get<long>()}};
      } else if (c.is_null()) {
        cfg.monitor.params.centre.reset();
      } else {
        r.flag("monitor.centre", "expected [i, j] or null");
      }
    }
    for (const char* key : {"k_override", "l_override"}) {
      if (!m.contains(key)) continue;
      const json& v = m.at(key);
      auto& slot = key[0] == 'k' ? cfg.monitor.params.K_override
                                 : cfg.monitor.params.L_override;
      if (v.is_number()) slot = v.get<double>();
      else if (v.is_null()) slot.reset();
      else r.flag(std::string("monitor.") + key, "expected a number or null");
    }
  } else if (doc.contains("monitor")) {
    r.flag("monitor", "expected an object");
  }

  if (doc.contains("output") && doc.at("output").is_object()) {
    const json& o = doc.at("output");
    r.check_keys(o, "output", {"dir", "snapshots"});
    r.text(o, "dir", "output", cfg.output.dir);
    r.boolean(o, "snapshots", "output", cfg.output.snapshots);
  } else if (doc.contains("output")) {
    r.flag("output", "expected an object");
  }
}

json config_json(const RunConfig& cfg) {
  json doc;
  doc["scenario"] = scenario_name(cfg.flow.scenario);
  json grid;
  grid["points"] = cfg.grid.points;
  grid["periods"] = cfg.grid.periods.empty()
                        ? json(nullptr)
                        : json(cfg.grid.periods);
  doc["grid"] = std::move(grid);
  json flow;
  flow["kappa"] = cfg.flow.kappa;
  flow["lambda"] = cfg.flow.lambda;
  flow["freeze_metric"] = cfg.flow.freeze_metric;
  flow["scheme"] = scheme_name(cfg.flow.scheme);
  flow["dt"] = cfg.flow.dt_request;
  flow["c_cfl"] = cfg.flow.c_cfl;
  flow["dt_min"] = cfg.flow.dt_min;
  flow["positivity_rtol"] = cfg.flow.positivity_rtol;
  flow["generalized_kappa"] = cfg.generalized_kappa;
  flow["check_cohomology"] = cfg.check_cohomology;
  doc["flow"] = std::move(flow);
  json initial;
  initial["preset"] = cfg.initial.preset;
  initial["seed"] = cfg.initial.seed;
  initial["amplitude"] = cfg.initial.amplitude;
  initial["max_mode"] = cfg.initial.max_mode;
  doc["initial"] = std::move(initial);
  json time;
  time["t_end"] = cfg.time.t_end;
  time["sample_dt"] = cfg.time.sample_dt;
  doc["time"] = std::move(time);
  json ceiling;
  ceiling["factor"] = cfg.ceiling.factor;
  ceiling["absolute"] =
      cfg.ceiling.absolute ? json(*cfg.ceiling.absolute) : json(nullptr);
  doc["ceiling"] = std::move(ceiling);
  json audit;
  audit["enabled"] = cfg.audit.enabled;
  audit["stride"] = cfg.audit.stride;
  doc["audit"] = std::move(audit);
  json monitor;
  monitor["enabled"] = cfg.monitor.enabled;
  monitor["stride"] = cfg.monitor.stride;
  monitor["calibrate"] = cfg.monitor.calibrate;
  monitor["p"] = cfg.monitor.params.p;
  monitor["theta"] = cfg.monitor.params.theta;
  monitor["tau"] = cfg.monitor.params.tau;
  monitor["ball_radius"] = cfg.monitor.params.ball_radius;
  monitor["centre"] =
      cfg.monitor.params.centre
          ? json({(*cfg.monitor.params.centre)[0],
                  (*cfg.monitor.params.centre)[1]})
          : json(nullptr);
  monitor["C"] = cfg.monitor.params.C;
  monitor["k_override"] = cfg.monitor.params.K_override
                              ? json(*cfg.monitor.params.K_override)
                              : json(nullptr);
  monitor["l_override"] = cfg.monitor.params.L_override
                              ? json(*cfg.monitor.params.L_override)
                              : json(nullptr);
  doc["monitor"] = std::move(monitor);
  json output;
  output["dir"] = cfg.output.dir;
  output["snapshots"] = cfg.output.snapshots;
  doc["output"] = std::move(output);
  return doc;
}

void set_by_path(json& doc, const std::string& dotted, json value) {
  std::size_t dot = dotted.find('.');
  if (dot == std::string::npos) {
    doc[dotted] = std::move(value);
    return;
  }
  std::string head = dotted.substr(0, dot);
  if (!doc.contains(head) || !doc[head].is_object()) doc[head] = json::object();
  set_by_path(doc[head], dotted.substr(dot + 1), std::move(value));
}

} // namespace

RunConfig preset_config(const std::string& name) {
  if (!known_preset(name))
    throw TfError(ErrorCode::invalid_input, "unknown preset: " + name);
  RunConfig cfg;
  cfg.initial.preset = name;
  if (name == "flat_fixed_point") {
    cfg.flow.kappa = 1.0;
    cfg.flow.lambda = -1.0;
    cfg.flow.c_cfl = 1e9; // constant fields carry no parabolic restriction
  } else if (name == "exponential") {
    cfg.flow.kappa = 1.0;
    cfg.flow.lambda = 0.5;
    cfg.flow.c_cfl = 1e9;
    cfg.check_cohomology = false; // deliberately unbalanced class
  } else if (name == "frozen_heat") {
    cfg.flow.kappa = 1.0;
    cfg.flow.lambda = 0.0;
    cfg.flow.freeze_metric = true;
    cfg.time.t_end = 0.1;
  } else { // perturbed
    cfg.flow.kappa = 0.25;
    cfg.flow.lambda = 0.1;
    cfg.time.t_end = 0.5;
  }
  return cfg;
}

ConfigLoad assemble_config(const std::optional<std::string>& json_text,
                           const std::map<std::string, std::string>& env,
                           const ConfigOverrides& flags) {
  ConfigLoad out;
  json user = json::object();
  if (json_text) {
    try {
      user = json::parse(*json_text);
    } catch (const std::exception& e) {
      out.diagnostics.push_back({"", std::string("config parse error: ") +
                                         e.what()});
      user = json::object();
    }
  }

  const std::string prefix = "TORUSFLOW_";
  for (const auto& [key, value] : env) {
    if (key.rfind(prefix, 0) != 0) continue;
    std::string path = key.substr(prefix.size());
    for (auto& ch : path) ch = static_cast<char>(std::tolower(ch));
    std::size_t sep;
    while ((sep = path.find("__")) != std::string::npos)
      path.replace(sep, 2, ".");
    json parsed;
    try {
      parsed = json::parse(value);
    } catch (const std::exception&) {
      parsed = value; // bare strings stay strings
    }
    set_by_path(user, path, std::move(parsed));
  }

  if (flags.preset) set_by_path(user, "initial.preset", json(*flags.preset));
  if (flags.seed) set_by_path(user, "initial.seed", json(*flags.seed));
  if (flags.until) set_by_path(user, "time.t_end", json(*flags.until));
  if (flags.dt) set_by_path(user, "flow.dt", json(*flags.dt));
  if (flags.ceiling) set_by_path(user, "ceiling.absolute", json(*flags.ceiling));
  if (flags.out) set_by_path(user, "output.dir", json(*flags.out));

  // The preset and scenario decide the defaults the user layer lands on.
  std::string preset = "flat_fixed_point";
  if (user.contains("initial") && user["initial"].is_object() &&
      user["initial"].contains("preset") &&
      user["initial"]["preset"].is_string())
    preset = user["initial"]["preset"].get<std::string>();
  RunConfig base;
  if (known_preset(preset)) {
    base = preset_config(preset);
    Scenario sc = Scenario::form_level_n1;
    if (user.contains("scenario") && user["scenario"].is_string() &&
        parse_scenario(user["scenario"].get<std::string>(), sc) &&
        sc != Scenario::form_level_n1) {
      base.flow.scenario = sc;
      base.flow.kappa = 1.0;
      base.flow.lambda = -1.0;
    }
  }

  json merged = config_json(base);
  merged.update(user, true);
  read_config(merged, out.config, out.diagnostics);

  auto more = validate_config(out.config);
  out.diagnostics.insert(out.diagnostics.end(), more.begin(), more.end());
  return out;
}

std::vector<Diagnostic> validate_config(const RunConfig& cfg) {
  std::vector<Diagnostic> d;
  auto bad = [&](const char* path, const std::string& msg) {
    d.push_back({path, msg});
  };

  bool potential = cfg.flow.scenario != Scenario::form_level_n1;
  if (potential && cfg.flow.lambda != -1.0)
    bad("flow.lambda", "potential formulation requires the (1,-1) point; "
                       "lambda must be -1");
  if (potential && cfg.flow.kappa != 1.0 && !cfg.generalized_kappa)
    bad("flow.kappa", "formulation requires (1,-1); set "
                      "flow.generalized_kappa to vary kappa");
  if (!(cfg.flow.kappa >= 0.0) || !std::isfinite(cfg.flow.kappa))
    bad("flow.kappa", "must be a finite nonnegative number");
  if (!std::isfinite(cfg.flow.lambda)) bad("flow.lambda", "must be finite");
  if (!(cfg.flow.dt_request > 0.0)) bad("flow.dt", "must be positive");
  if (!(cfg.flow.dt_min > 0.0) || cfg.flow.dt_min > cfg.flow.dt_request)
    bad("flow.dt_min", "must be positive and at most flow.dt");
  if (!(cfg.flow.c_cfl > 0.0)) bad("flow.c_cfl", "must be positive");
  if (!(cfg.flow.positivity_rtol >= 0.0) || cfg.flow.positivity_rtol >= 1.0)
    bad("flow.positivity_rtol", "must lie in [0, 1)");

  if (cfg.grid.points < 8 || cfg.grid.points % 2 != 0)
    bad("grid.points", "must be an even number of at least 8");
  int raxes = 2 * (cfg.flow.scenario == Scenario::potential_torus_n2 ? 2 : 1);
  if (!cfg.grid.periods.empty() &&
      cfg.grid.periods.size() != static_cast<std::size_t>(raxes))
    bad("grid.periods", "needs one entry per real axis (" +
                            std::to_string(raxes) + ")");
  for (double p : cfg.grid.periods)
    if (!(p > 0.0) || !std::isfinite(p)) {
      bad("grid.periods", "entries must be positive");
      break;
    }

  if (!known_preset(cfg.initial.preset))
    bad("initial.preset", "unknown preset: " + cfg.initial.preset);
  if ((cfg.initial.preset == "exponential" ||
       cfg.initial.preset == "frozen_heat") &&
      potential)
    bad("initial.preset",
        cfg.initial.preset + " initial data exists only at form level");
  if (!(cfg.initial.amplitude >= 0.0) || !std::isfinite(cfg.initial.amplitude))
    bad("initial.amplitude", "must be a finite nonnegative number");
  if (cfg.initial.max_mode < 1 || cfg.initial.max_mode > cfg.grid.points / 4)
    bad("initial.max_mode", "must lie in [1, points/4]");

  if (!(cfg.time.t_end > 0.0)) bad("time.t_end", "must be positive");
  if (!(cfg.time.sample_dt > 0.0) || cfg.time.sample_dt > cfg.time.t_end)
    bad("time.sample_dt", "must be positive and at most t_end");

  if (!(cfg.ceiling.factor > 0.0)) bad("ceiling.factor", "must be positive");
  if (cfg.ceiling.absolute && !(*cfg.ceiling.absolute > 0.0))
    bad("ceiling.absolute", "must be positive");

  if (cfg.audit.stride < 1) bad("audit.stride", "must be at least 1");
  if (cfg.monitor.stride < 1) bad("monitor.stride", "must be at least 1");
  const MonitorConfig& m = cfg.monitor.params;
  if (m.p < 3) bad("monitor.p", "must be at least 3");
  if (!(m.theta >= 1.0)) bad("monitor.theta", "must be at least 1");
  if (!(m.tau > 1.0)) bad("monitor.tau", "must exceed 1");
  if (!(m.ball_radius > 0.0)) bad("monitor.ball_radius", "must be positive");
  if (!(m.C >= 1.0)) bad("monitor.C", "must be at least 1");
  if (m.centre) {
    for (long c : *m.centre)
      if (c < 0 || c >= cfg.grid.points) {
        bad("monitor.centre", "indices must lie inside the grid");
        break;
      }
  }
  for (const auto& [name, ov] :
       {std::pair<const char*, const std::optional<double>&>{"monitor.k_override",
                                                             m.K_override},
        {"monitor.l_override", m.L_override}})
    if (ov && !(*ov > 0.0)) bad(name, "must be positive when given");

  if (cfg.output.dir.empty()) bad("output.dir", "must not be empty");

  if (known_preset(cfg.initial.preset)) {
    bool check = cfg.check_cohomology || potential;
    double mean_a = preset_form_mean(cfg.initial.preset, cfg.flow.lambda);
    double want = -cfg.flow.lambda; // metric mean is 1 in every preset
    if (check && std::abs(mean_a - want) > 1e-12)
      bad("initial.preset",
          "CohomologyMismatch: the form mean is " + std::to_string(mean_a) +
              " but the class condition needs -lambda = " +
              std::to_string(want) +
              " (set flow.check_cohomology false to run anyway)");
  }
  return d;
}

std::string serialize_config(const RunConfig& cfg) {
  return config_json(cfg).dump(2) + "\n";
}

Grid config_grid(const RunConfig& cfg) {
  int n = cfg.flow.n_complex();
  std::vector<double> periods = cfg.grid.periods;
  if (periods.empty()) periods.assign(static_cast<std::size_t>(2 * n), 1.0);
  return make_grid(n, cfg.grid.points, periods);
}

RunOptions config_run_options(const RunConfig& cfg) {
  RunOptions opt;
  opt.t_end = cfg.time.t_end;
  opt.sample_dt = cfg.time.sample_dt;
  opt.ceiling_factor = cfg.ceiling.factor;
  opt.ceiling_absolute = cfg.ceiling.absolute;
  return opt;
}

InitialData make_initial_state(const RunConfig& cfg, const SpectralOps& ops) {
  const Grid& grid = ops.grid();
  std::size_t m = grid.size();
  int n = cfg.flow.n_complex();
  double lambda = cfg.flow.lambda;
  constexpr double kTau = 6.28318530717958647692; // full turn

  std::mt19937_64 rng(cfg.initial.seed);
  auto unit = [&rng]() {
    return 2.0 * (static_cast<double>(rng() >> 11) *
                  (1.0 / 9007199254740992.0)) -
           1.0;
  };

  // Mode sum over axes (ax0, ax1) with freshly drawn coefficients, in the
  // documented lexicographic order.
  auto perturbation = [&](int ax0, int ax1) {
    RField f(m, 0.0);
    for (int kx = 0; kx <= cfg.initial.max_mode; ++kx)
      for (int ky = -cfg.initial.max_mode; ky <= cfg.initial.max_mode; ++ky) {
        if (!(kx > 0 || (kx == 0 && ky > 0))) continue;
        double u1 = unit(), u2 = unit();
        for (std::size_t p = 0; p < m; ++p) {
          auto c = grid.unflatten(p);
          double ang = kTau * (kx * static_cast<double>(c[ax0]) /
                                   grid.npts[ax0] +
                               ky * static_cast<double>(c[ax1]) /
                                   grid.npts[ax1]);
          f[p] += cfg.initial.amplitude *
                  (u1 * std::cos(ang) + u2 * std::sin(ang));
        }
      }
    return f;
  };

  auto trig_cocktail = [&]() {
    RField f(m);
    for (std::size_t p = 0; p < m; ++p) {
      auto c = grid.unflatten(p);
      double x = static_cast<double>(c[0]) / grid.npts[0];
      double y = static_cast<double>(c[1]) / grid.npts[1];
      f[p] = std::cos(kTau * x) + 0.5 * std::cos(2 * kTau * y) +
             0.25 * std::cos(kTau * (x + y));
    }
    return f;
  };

  InitialData out;
  out.state.t = 0.0;
  const std::string& preset = cfg.initial.preset;

  if (cfg.flow.scenario == Scenario::form_level_n1) {
    out.state.g_coeff = RField(m, 1.0);
    if (preset == "flat_fixed_point") {
      out.state.a_coeff = RField(m, -lambda);
    } else if (preset == "exponential") {
      out.state.a_coeff = RField(m, 0.0);
    } else if (preset == "frozen_heat") {
      out.state.a_coeff = trig_cocktail();
    } else if (preset == "perturbed") {
      out.state.a_coeff = perturbation(0, 1);
      for (std::size_t p = 0; p < m; ++p) out.state.a_coeff[p] += -lambda;
    } else {
      throw TfError(ErrorCode::invalid_input, "unknown preset: " + preset);
    }
    return out;
  }

  if (preset != "flat_fixed_point" && preset != "perturbed")
    throw TfError(ErrorCode::invalid_input,
                  preset + " initial data exists only at form level");

  HermitianField omega = make_constant_hermitian(n, m, 1.0);
  HermitianField alpha = make_constant_hermitian(n, m, -lambda);
  if (preset == "perturbed") {
    for (int j = 0; j < n; ++j) {
      RField bump = perturbation(2 * j, 2 * j + 1);
      for (std::size_t p = 0; p < m; ++p) alpha.at(j, j)[p] += bump[p];
    }
  }
  out.background = make_background(ops, omega, alpha);
  out.state.phi = RField(m, 0.0);
  out.state.f = RField(m, 0.0);
  return out;
}

} // namespace torusflow
