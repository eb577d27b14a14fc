#include "torusflow/flow.hpp"

#include <algorithm>
#include <cmath>

#include "torusflow/errors.hpp"

namespace torusflow {

const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::form_level_n1: return "form_level_n1";
    case Scenario::potential_torus_n1: return "potential_torus_n1";
    case Scenario::potential_torus_n2: return "potential_torus_n2";
  }
  return "unknown";
}

const char* termination_cause_name(TerminationCause c) {
  switch (c) {
    case TerminationCause::reached_t_end: return "reached_t_end";
    case TerminationCause::positivity_lost: return "positivity_lost";
    case TerminationCause::blowup_threshold: return "blowup_threshold";
    case TerminationCause::nan_detected: return "nan_detected";
  }
  return "unknown";
}

int termination_exit_code(TerminationCause c) {
  switch (c) {
    case TerminationCause::reached_t_end: return 0;
    case TerminationCause::positivity_lost: return 10;
    case TerminationCause::blowup_threshold: return 11;
    case TerminationCause::nan_detected: return 12;
  }
  return 1;
}

std::pair<RField, RField> rhs_form_level_n1(const SpectralOps& ops,
                                            const RField& g, const RField& a,
                                            double kappa, double lambda,
                                            bool freeze_metric) {
  std::size_t m = g.size();
  RField dg(m, 0.0);
  if (!freeze_metric) {
    RField logg(m);
    for (std::size_t p = 0; p < m; ++p) {
      if (!(g[p] > 0.0))
        throw TfError(ErrorCode::invalid_input, "metric coefficient not positive");
      logg[p] = std::log(g[p]);
    }
    dg = ops.laplace_flat(logg);
    for (std::size_t p = 0; p < m; ++p)
      dg[p] = 0.25 * dg[p] + lambda * g[p] + a[p];
  }
  RField ratio(m);
  for (std::size_t p = 0; p < m; ++p) {
    if (!(g[p] > 0.0))
      throw TfError(ErrorCode::invalid_input, "metric coefficient not positive");
    ratio[p] = a[p] / g[p];
  }
  RField da = ops.laplace_flat(ratio);
  for (std::size_t p = 0; p < m; ++p) da[p] *= kappa;
  return {std::move(dg), std::move(da)};
}

RField solve_background_volume(const SpectralOps& ops,
                               const HermitianField& omega,
                               const HermitianField& alpha) {
  int n = omega.n;
  std::size_t m = omega.comp[0].size();
  std::vector<CField> rhs(static_cast<std::size_t>(n) * n, CField(m));
  double scale = 0.0;
  for (int c = 0; c < n * n; ++c)
    for (std::size_t p = 0; p < m; ++p) {
      rhs[c][p] = omega.comp[c][p] - alpha.comp[c][p];
      scale = std::max(scale, std::abs(rhs[c][p]));
    }
  auto solve = ops.solve_dzdzbar(rhs);
  if (solve.residual > 1e-8 * (1.0 + scale))
    throw TfError(ErrorCode::cohomology_mismatch,
                  "background volume potential does not exist: defect " +
                      std::to_string(solve.residual) +
                      " (mean of alpha must equal mean of the metric form)");
  return solve.F;
}

PotentialBackground make_background(const SpectralOps& ops,
                                    const HermitianField& omega,
                                    const HermitianField& alpha) {
  PotentialBackground bg;
  bg.omega_bg = omega;
  bg.alpha_bg = alpha;
  bg.log_volume = solve_background_volume(ops, omega, alpha);
  RField det = hermitian_det(omega);
  bg.log_det_bg.resize(det.size());
  for (std::size_t p = 0; p < det.size(); ++p) {
    if (!(det[p] > 0.0))
      throw TfError(ErrorCode::invalid_input, "background metric not positive");
    bg.log_det_bg[p] = std::log(det[p]);
  }
  return bg;
}

std::pair<RField, RField> rhs_potential(const SpectralOps& ops,
                                        const PotentialBackground& bg,
                                        const RField& phi, const RField& f,
                                        double kappa) {
  int n = bg.omega_bg.n;
  std::size_t m = phi.size();

  HermitianField g = metric_from_potential(ops, bg.omega_bg, phi);
  RField mineig = hermitian_min_eig(g);
  if (!(min_value(mineig) > 0.0))
    throw TfError(ErrorCode::invalid_input, "potential metric not positive");
  RField det = hermitian_det(g);
  HermitianField ginv = hermitian_inverse(g);
  HermitianField alpha_t = metric_from_potential(ops, bg.alpha_bg, f);

  RField dphi(m);
  for (std::size_t p = 0; p < m; ++p)
    dphi[p] = std::log(det[p]) - bg.log_det_bg[p] - bg.log_volume[p] - phi[p] +
              f[p];

  RField tr = trace_form(ginv, alpha_t);
  RField df(m);
  for (std::size_t p = 0; p < m; ++p) df[p] = kappa * (tr[p] - n);
  return {std::move(dphi), std::move(df)};
}

FlowEngine::FlowEngine(const SpectralOps& ops, const FlowParams& params)
    : ops_(ops), params_(params) {
  if (ops.grid().n_complex != params.n_complex())
    throw TfError(ErrorCode::invalid_input, "grid dimension does not match scenario");
  if (params.scenario != Scenario::form_level_n1 && params.lambda != -1.0)
    throw TfError(ErrorCode::invalid_input,
                  "potential formulation requires lambda = -1");
}

void FlowEngine::set_background(PotentialBackground bg) { bg_ = std::move(bg); }

const PotentialBackground& FlowEngine::background() const {
  if (!bg_)
    throw TfError(ErrorCode::invalid_input, "potential background not set");
  return *bg_;
}

std::vector<RField*> FlowEngine::model_fields(FlowState& state) const {
  if (params_.scenario == Scenario::form_level_n1)
    return {&state.g_coeff, &state.a_coeff};
  return {&state.phi, &state.f};
}

std::vector<const RField*> FlowEngine::model_fields(const FlowState& state) const {
  if (params_.scenario == Scenario::form_level_n1)
    return {&state.g_coeff, &state.a_coeff};
  return {&state.phi, &state.f};
}

std::vector<std::string> FlowEngine::field_names() const {
  if (params_.scenario == Scenario::form_level_n1) return {"g_coeff", "a_coeff"};
  return {"phi", "f"};
}

FlowState snapshot_state(const FlowParams& params, const Snapshot& snap) {
  if (snap.fields.size() != 2)
    throw TfError(ErrorCode::invalid_input, "snapshot must carry two fields");
  FlowState st;
  st.t = snap.t;
  if (params.scenario == Scenario::form_level_n1) {
    st.g_coeff = snap.fields[0];
    st.a_coeff = snap.fields[1];
  } else {
    st.phi = snap.fields[0];
    st.f = snap.fields[1];
  }
  return st;
}

std::vector<RField> FlowEngine::rhs(const FlowState& state) const {
  if (params_.scenario == Scenario::form_level_n1) {
    auto [dg, da] = rhs_form_level_n1(ops_, state.g_coeff, state.a_coeff,
                                      params_.kappa, params_.lambda,
                                      params_.freeze_metric);
    return {std::move(dg), std::move(da)};
  }
  auto [dphi, df] =
      rhs_potential(ops_, background(), state.phi, state.f, params_.kappa);
  return {std::move(dphi), std::move(df)};
}

void FlowEngine::realize(const FlowState& state, HermitianField& metric,
                         HermitianField& alpha) const {
  if (params_.scenario == Scenario::form_level_n1) {
    std::size_t m = state.g_coeff.size();
    metric = make_hermitian(1, m);
    alpha = make_hermitian(1, m);
    for (std::size_t p = 0; p < m; ++p) {
      metric.at(0, 0)[p] = state.g_coeff[p];
      alpha.at(0, 0)[p] = state.a_coeff[p];
    }
    return;
  }
  metric = metric_from_potential(ops_, background().omega_bg, state.phi);
  alpha = metric_from_potential(ops_, background().alpha_bg, state.f);
}

double FlowEngine::cfl_dt(const FlowState& state) const {
  double sup_inv = 0.0;
  if (params_.scenario == Scenario::form_level_n1) {
    double mn = min_value(state.g_coeff);
    if (!(mn > 0.0)) return params_.dt_min;
    sup_inv = 1.0 / mn;
  } else {
    HermitianField g, a;
    realize(state, g, a);
    RField mineig = hermitian_min_eig(g);
    double mn = min_value(mineig);
    if (!(mn > 0.0)) return params_.dt_min;
    sup_inv = 1.0 / mn;
  }
  const Grid& gr = ops_.grid();
  double hmin = gr.h(0);
  for (int a = 1; a < gr.raxes(); ++a) hmin = std::min(hmin, gr.h(a));
  return params_.c_cfl * hmin * hmin / (4.0 * sup_inv);
}

FlowEngine::StepOutcome FlowEngine::state_health(const FlowState& state) const {
  for (const RField* f : model_fields(state))
    if (!all_finite(*f)) return StepOutcome::bad_nan;
  if (params_.scenario == Scenario::form_level_n1) {
    const RField& g = state.g_coeff;
    double mean = sum_naive(g) / static_cast<double>(g.size());
    if (!(min_value(g) > params_.positivity_rtol * mean))
      return StepOutcome::bad_positivity;
  } else {
    HermitianField g, a;
    try {
      realize(state, g, a);
    } catch (const TfError&) {
      return StepOutcome::bad_positivity;
    }
    RField eig = hermitian_min_eig(g);
    double mean = sum_naive(eig) / static_cast<double>(eig.size());
    if (!(min_value(eig) > params_.positivity_rtol * mean))
      return StepOutcome::bad_positivity;
  }
  return StepOutcome::ok;
}

std::vector<double> FlowEngine::imex_diffusivities(const FlowState& state) const {
  double sup_inv;
  if (params_.scenario == Scenario::form_level_n1) {
    sup_inv = 1.0 / min_value(state.g_coeff);
    return {params_.freeze_metric ? 0.0 : 0.25 * sup_inv,
            params_.kappa * sup_inv};
  }
  HermitianField g, a;
  realize(state, g, a);
  sup_inv = 1.0 / min_value(hermitian_min_eig(g));
  return {0.25 * sup_inv, 0.25 * params_.kappa * sup_inv};
}

FlowEngine::StepOutcome FlowEngine::try_step(FlowState& state, double dt) const {
  FlowState work = state;
  auto fields = model_fields(work);
  std::vector<RField> y0(fields.size());
  for (std::size_t i = 0; i < fields.size(); ++i) y0[i] = *fields[i];

  try {
    if (params_.scheme == Scheme::rk4) {
      std::vector<RField> k1 = rhs(work);
      for (std::size_t i = 0; i < fields.size(); ++i)
        for (std::size_t p = 0; p < y0[i].size(); ++p)
          (*fields[i])[p] = y0[i][p] + 0.5 * dt * k1[i][p];
      std::vector<RField> k2 = rhs(work);
      for (std::size_t i = 0; i < fields.size(); ++i)
        for (std::size_t p = 0; p < y0[i].size(); ++p)
          (*fields[i])[p] = y0[i][p] + 0.5 * dt * k2[i][p];
      std::vector<RField> k3 = rhs(work);
      for (std::size_t i = 0; i < fields.size(); ++i)
        for (std::size_t p = 0; p < y0[i].size(); ++p)
          (*fields[i])[p] = y0[i][p] + dt * k3[i][p];
      std::vector<RField> k4 = rhs(work);
      for (std::size_t i = 0; i < fields.size(); ++i)
        for (std::size_t p = 0; p < y0[i].size(); ++p)
          (*fields[i])[p] =
              y0[i][p] + dt / 6.0 *
                             (k1[i][p] + 2.0 * k2[i][p] + 2.0 * k3[i][p] +
                              k4[i][p]);
    } else {
      // First-order IMEX: treat a constant-coefficient flat Laplacian with
      // the worst-case diffusivity implicitly, the remainder explicitly.
      std::vector<double> nu = imex_diffusivities(state);
      std::vector<RField> k = rhs(work);
      for (std::size_t i = 0; i < fields.size(); ++i) {
        RField lap = ops_.laplace_flat(y0[i]);
        RField expl(y0[i].size());
        for (std::size_t p = 0; p < expl.size(); ++p)
          expl[p] = y0[i][p] + dt * (k[i][p] - nu[i] * lap[p]);
        CField spec = ops_.forward(to_complex(expl));
        const Grid& gr = ops_.grid();
        for (std::size_t idx = 0; idx < spec.size(); ++idx) {
          auto cidx = gr.unflatten(idx);
          double xi2 = 0.0;
          for (int ax = 0; ax < gr.raxes(); ++ax) {
            double x = ops_.xi(ax, cidx[ax], false);
            xi2 += x * x;
          }
          spec[idx] /= (1.0 + dt * nu[i] * xi2);
        }
        *fields[i] = real_part(ops_.inverse(spec));
      }
    }
  } catch (const TfError&) {
    return StepOutcome::bad_positivity;
  }

  StepOutcome health = state_health(work);
  if (health != StepOutcome::ok) return health;
  work.t = state.t + dt;
  state = std::move(work);
  return StepOutcome::ok;
}

SampleRow FlowEngine::sample(const FlowState& state) const {
  HermitianField metric, alpha;
  realize(state, metric, alpha);
  SampleRow row;
  row.t = state.t;
  RField eig = hermitian_min_eig(metric);
  row.min_eig = min_value(eig);
  RField det = hermitian_det(metric);
  row.area = ops_.integral(det);
  RField diag(det.size(), 0.0);
  for (int i = 0; i < metric.n; ++i)
    for (std::size_t p = 0; p < diag.size(); ++p)
      diag[p] += alpha.at(i, i)[p].real();
  row.alpha_integral = ops_.integral(diag);

  CurvatureBundle bundle = make_curvature_bundle(ops_, metric);
  PointwiseNorms norms = pointwise_norms(bundle, alpha);
  row.sup_rm = max_abs(norms.norm_rm);
  row.sup_ric = max_abs(norms.norm_ric);
  row.sup_alpha = max_abs(norms.norm_alpha);
  return row;
}

RunResult FlowEngine::run(FlowState state, const RunOptions& opt) const {
  if (!(opt.t_end > 0.0) || !(opt.sample_dt > 0.0))
    throw TfError(ErrorCode::invalid_input, "t_end and sample_dt must be positive");

  RunResult res;
  auto snapshot_of = [&](const FlowState& st) {
    Snapshot s;
    s.t = st.t;
    for (const RField* f : model_fields(st)) s.fields.push_back(*f);
    return s;
  };

  auto record_sample = [&](const FlowState& st, double dt_eff, long steps,
                           long rejections) {
    SampleRow row = sample(st);
    row.dt_effective = dt_eff;
    row.steps = steps;
    row.rejections = rejections;
    res.rows.push_back(row);
    res.snapshots.push_back(snapshot_of(st));
    return row;
  };

  SampleRow first = record_sample(state, 0.0, 0, 0);
  res.ceiling = opt.ceiling_factor * (first.sup_rm + 1.0);
  if (opt.ceiling_absolute)
    res.ceiling = std::min(res.ceiling, *opt.ceiling_absolute);
  if (first.sup_rm > res.ceiling) {
    res.cause = TerminationCause::blowup_threshold;
    res.t_final = state.t;
    res.detail = "initial sup|Rm| exceeds ceiling";
    return res;
  }

  long ksample = 1;
  while (state.t < opt.t_end - 1e-12 * opt.t_end) {
    double t_target = std::min(ksample * opt.sample_dt, opt.t_end);
    ++ksample;
    long steps = 0, rejections = 0;
    double dt_last = 0.0;
    while (state.t < t_target - 1e-12 * std::max(1.0, t_target)) {
      double dt = std::min({params_.dt_request, cfl_dt(state),
                            t_target - state.t});
      StepOutcome out = try_step(state, dt);
      while (out != StepOutcome::ok && dt > params_.dt_min) {
        ++rejections;
        dt *= 0.5;
        out = try_step(state, dt);
      }
      if (out != StepOutcome::ok) {
        ++rejections;
        res.cause = out == StepOutcome::bad_nan
                        ? TerminationCause::nan_detected
                        : TerminationCause::positivity_lost;
        res.t_final = state.t;
        res.detail = "step rejected down to dt_min";
        res.total_steps += steps;
        res.total_rejections += rejections;
        return res;
      }
      ++steps;
      dt_last = dt;
    }
    state.t = t_target;
    res.total_steps += steps;
    res.total_rejections += rejections;
    SampleRow row = record_sample(state, dt_last, steps, rejections);
    if (!std::isfinite(row.sup_rm) || !std::isfinite(row.area)) {
      res.cause = TerminationCause::nan_detected;
      res.t_final = state.t;
      res.detail = "non-finite sample";
      return res;
    }
    if (row.sup_rm > res.ceiling) {
      res.cause = TerminationCause::blowup_threshold;
      res.t_final = state.t;
      res.detail = "sup|Rm| exceeded ceiling";
      return res;
    }
  }
  res.cause = TerminationCause::reached_t_end;
  res.t_final = state.t;
  res.detail = "";
  return res;
}

} // namespace torusflow
