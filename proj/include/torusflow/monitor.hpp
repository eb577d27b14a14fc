#pragma once

#include <array>
#include <optional>
#include <vector>

#include "torusflow/flow.hpp"

namespace torusflow {

/// Localization parameters. The ball is specified by its physical initial
/// radius r0 = ball_radius measured in the initial metric; the scale rho of
/// the written estimates is recovered as r0 * sqrt(K) once the curvature
/// bound K has been measured, so the monitored region does not move when K
/// does. K and L default to the measured running sups of |Ric| and |alpha|
/// (floored at 1e-6 so the reciprocal-L^2 weights stay finite).
struct MonitorConfig {
  int p = 3;          // integral exponent, >= 3
  double theta = 1.0; // cutoff slope, >= 1
  double tau = 2.0;   // inner-ball shrink factor, > 1
  double ball_radius = 0.35;
  std::optional<std::array<long, 2>> centre; // grid indices, default middle
  double C = 1.0;                            // universal constant
  std::optional<double> K_override;
  std::optional<double> L_override;
};

struct MonitorConstants {
  double K = 0.0, L = 0.0;
  double rho = 0.0;     // r0 * sqrt(K)
  double a1 = 0.0, a2 = 0.0, a3 = 0.0;
  double K_prime = 0.0; // K + |a| + |b| L
  double A = 0.0, B = 0.0;
  double T = 0.0; // run horizon in estimate time (half simulation time)
  double coef_a = 0.0, coef_b = 0.0;
};

/// The explicit constant pack of the local estimate chain.
MonitorConstants gronwall_constants(const MonitorConfig& cfg, double coef_a,
                                    double coef_b, double K, double L,
                                    double T_estimate);

struct CutoffField {
  RField phi;       // max(0, (r0 - d0)/(theta r0)), peak 1/theta
  RField d0;        // initial-metric distance to the centre
  double r0 = 0.0;
  double theta = 1.0;
  double g0 = 0.0;  // constant initial metric coefficient
};

/// Linear cone cutoff supported in the initial-metric ball of radius r0;
/// throws ball_too_large when the ball does not embed in the torus.
CutoffField cutoff_field(const Grid& grid, double g0_const,
                         const MonitorConfig& cfg);

struct MonitorRow {
  double t = 0.0; // simulation time
  double s = 0.0; // estimate time t/2
  double a_terms[4] = {0, 0, 0, 0}; // localized curvature integrals
  double b_terms[5] = {0, 0, 0, 0, 0}; // derivative-weighted integrals
  double u = 0.0;          // five-term energy
  double vol_ball = 0.0;   // evolving volume of the outer ball
  double vol_inner = 0.0;  // evolving volume of the shrunk ball
  double dual_dev = 0.0;   // worst disagreement between summation paths
  double du_ds = 0.0;      // differenced energy slope (one-sided at ends)
  double margin_diff = 0.0;
  double margin_int = 0.0;
  bool metric_equiv_ok = false;
  bool grad_bound_ok = false;
  bool trace_ineq_ok = false;  // |grad tr alpha|^2 term vs. twice its source
  bool cutoff_ineq_ok = false; // A2 <= A4/theta <= A4
  double lp_lhs = 0.0;
  double lp_rhs_log = 0.0; // the bound is astronomically large; kept in logs
  double lp_normalized = 0.0; // inner average of |Rm|^p
  bool lp_ok = false;
};

struct MonitorSummary {
  MonitorConstants constants;
  int p = 0;
  double theta = 0.0, tau = 0.0, ball_radius = 0.0, C = 1.0;
  long centre[2] = {0, 0};
  int samples = 0;
  bool all_metric_equiv = false;
  bool all_grad_bound = false;
  bool all_trace_ineq = false;
  bool all_cutoff_ineq = false;
  bool all_integral_ok = false;
  bool all_lp_ok = false;
  double margin_diff_min = 0.0;
  double margin_int_min = 0.0;
  double frac_margin_diff_nonneg = 0.0;
  double dual_dev_max = 0.0;
  double init_lp_outer = 0.0; // curvature integral of the initial data
};

struct MonitorOutput {
  std::vector<MonitorRow> rows;
  MonitorSummary summary;
};

/// Evaluates the full localization battery along a stored run for each
/// configuration (the realized per-sample geometry is shared). Requires a
/// spatially constant initial metric and at least three samples.
std::vector<MonitorOutput> monitor_run(const SpectralOps& ops,
                                       const FlowEngine& engine,
                                       const std::vector<Snapshot>& snaps,
                                       const std::vector<MonitorConfig>& cfgs);

MonitorOutput monitor_run(const SpectralOps& ops, const FlowEngine& engine,
                          const std::vector<Snapshot>& snaps,
                          const MonitorConfig& cfg);

/// Smallest power-of-two C >= 1 making the differential margin nonnegative
/// at every sample for every given configuration.
double calibrate_constant(const SpectralOps& ops, const FlowEngine& engine,
                          const std::vector<Snapshot>& snaps,
                          std::vector<MonitorConfig> cfgs);

} // namespace torusflow
