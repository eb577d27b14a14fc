#pragma once

#include <optional>
#include <string>
#include <vector>

#include "torusflow/geometry.hpp"
#include "torusflow/spectral.hpp"

namespace torusflow {

enum class Scenario { form_level_n1, potential_torus_n1, potential_torus_n2 };

enum class Scheme { rk4, imex1 };

enum class TerminationCause {
  reached_t_end,
  positivity_lost,
  blowup_threshold,
  nan_detected,
};

const char* scenario_name(Scenario s);
const char* termination_cause_name(TerminationCause c);
int termination_exit_code(TerminationCause c);

struct FlowParams {
  Scenario scenario = Scenario::form_level_n1;
  double kappa = 1.0;
  double lambda = -1.0;
  bool freeze_metric = false;
  Scheme scheme = Scheme::rk4;
  double dt_request = 1e-3;
  double c_cfl = 0.2;
  double dt_min = 1e-12;
  double positivity_rtol = 1e-8;

  int n_complex() const {
    return scenario == Scenario::potential_torus_n2 ? 2 : 1;
  }
};

/// Model fields. Form-level runs evolve (g_coeff, a_coeff); potential runs
/// evolve (phi, f) against the fixed PotentialBackground.
struct FlowState {
  double t = 0.0;
  RField g_coeff, a_coeff; // form-level
  RField phi, f;           // potential
};

struct PotentialBackground {
  HermitianField omega_bg;
  HermitianField alpha_bg;
  RField log_volume; // mean-zero F with d_i d_jbar F = (omega - alpha)_{i jbar}
  RField log_det_bg;
};

struct SampleRow {
  double t = 0.0;
  double sup_rm = 0.0;    // complex-convention norms (see geometry.hpp)
  double sup_ric = 0.0;
  double sup_alpha = 0.0;
  double min_eig = 0.0;
  double area = 0.0;           // integral of det(metric)
  double alpha_integral = 0.0; // integral of the diagonal alpha trace
  double dt_effective = 0.0;
  long steps = 0;
  long rejections = 0;
};

struct Snapshot {
  double t = 0.0;
  std::vector<RField> fields; // order matches field_names() for the scenario
};

/// Rebuilds a FlowState from a stored snapshot (inverse of the snapshot
/// writer inside FlowEngine::run).
FlowState snapshot_state(const FlowParams& params, const Snapshot& snap);

struct RunOptions {
  double t_end = 1.0;
  double sample_dt = 0.02;
  double ceiling_factor = 1e6;
  std::optional<double> ceiling_absolute;
};

struct RunResult {
  TerminationCause cause = TerminationCause::reached_t_end;
  double t_final = 0.0;
  std::string detail;
  double ceiling = 0.0;
  std::vector<SampleRow> rows;
  std::vector<Snapshot> snapshots;
  long total_steps = 0;
  long total_rejections = 0;
};

/// Right side of the coupled flow in coefficient form (one complex
/// dimension): dg/dt = (1/4) lap_flat(log g) + lambda*g + a,
/// da/dt = kappa * lap_flat(a/g). The alpha equation is the doubled Hodge
/// heat action, normalized so a frozen flat metric gives exactly the scalar
/// heat equation da/dt = kappa * lap_flat(a).
std::pair<RField, RField> rhs_form_level_n1(const SpectralOps& ops,
                                            const RField& g, const RField& a,
                                            double kappa, double lambda,
                                            bool freeze_metric);

/// Mean-zero F with d_i d_jbar F = (omega - alpha)_{i jbar}; throws
/// cohomology_mismatch when the data are not compatible (the defect of the
/// least-squares solve exceeds tolerance, which happens exactly when the
/// mean condition mean(alpha) = mean(omega-part) fails or the right side is
/// not a d dbar-potential).
RField solve_background_volume(const SpectralOps& ops,
                               const HermitianField& omega,
                               const HermitianField& alpha);

/// Assembles the fixed background data of a potential run (volume potential
/// and log-determinant); throws cohomology_mismatch on incompatible pairs.
PotentialBackground make_background(const SpectralOps& ops,
                                    const HermitianField& omega,
                                    const HermitianField& alpha);

/// Potential-form right sides:
///   dphi/dt = log det(bg + ddbar phi) - log det bg - F - phi + f
///   df/dt   = kappa * (tr_{g_phi} alpha(t) - n),  alpha(t) = alpha_bg + ddbar f
/// (the -n term and the mean-zero normalization of F are the documented
/// gauge; both vanish under d dbar so the induced form-level flow is exact).
/// Requires lambda = -1; enforced by config validation upstream.
std::pair<RField, RField> rhs_potential(const SpectralOps& ops,
                                        const PotentialBackground& bg,
                                        const RField& phi, const RField& f,
                                        double kappa);

class FlowEngine {
public:
  FlowEngine(const SpectralOps& ops, const FlowParams& params);

  void set_background(PotentialBackground bg);
  const PotentialBackground& background() const;

  const FlowParams& params() const { return params_; }

  std::vector<RField> rhs(const FlowState& state) const;

  /// Current metric and 2-form coefficient as Hermitian fields.
  void realize(const FlowState& state, HermitianField& metric,
               HermitianField& alpha) const;

  double cfl_dt(const FlowState& state) const;

  enum class StepOutcome { ok, bad_positivity, bad_nan };
  StepOutcome try_step(FlowState& state, double dt) const;

  SampleRow sample(const FlowState& state) const;

  RunResult run(FlowState state, const RunOptions& opt) const;

  std::vector<std::string> field_names() const;

private:
  const SpectralOps& ops_;
  FlowParams params_;
  std::optional<PotentialBackground> bg_;

  std::vector<RField*> model_fields(FlowState& state) const;
  std::vector<const RField*> model_fields(const FlowState& state) const;
  StepOutcome state_health(const FlowState& state) const;
  std::vector<double> imex_diffusivities(const FlowState& state) const;
};

} // namespace torusflow
