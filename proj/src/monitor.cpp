#include "torusflow/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "torusflow/audit.hpp"
#include "torusflow/errors.hpp"
#include "torusflow/real2d.hpp"

namespace torusflow {

namespace {

constexpr double kBoundFloor = 1e-6;
constexpr double kEquivSlack = 1e-6;

double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

void validate_config(const MonitorConfig& cfg) {
  if (cfg.p < 3)
    throw TfError(ErrorCode::invalid_input, "monitor exponent p must be >= 3");
  if (!(cfg.theta >= 1.0))
    throw TfError(ErrorCode::invalid_input, "cutoff slope theta must be >= 1");
  if (!(cfg.tau > 1.0))
    throw TfError(ErrorCode::invalid_input, "shrink factor tau must be > 1");
  if (!(cfg.ball_radius > 0.0))
    throw TfError(ErrorCode::invalid_input, "ball radius must be positive");
  if (!(cfg.C >= 1.0))
    throw TfError(ErrorCode::invalid_input, "universal constant C must be >= 1");
}

struct RealizedState {
  double t = 0.0;
  RField gc, ac;
};

RealizedState realize_n1(const FlowEngine& engine, const FlowState& st) {
  HermitianField metric, alpha;
  engine.realize(st, metric, alpha);
  RealizedState out;
  out.t = st.t;
  out.gc = real_part(metric.at(0, 0));
  out.ac = real_part(alpha.at(0, 0));
  return out;
}

// Sups of |Ric| and |alpha| in the realized real geometry.
void accumulate_bounds(const SpectralOps& ops, const RealizedState& rs,
                       double& sup_ric, double& sup_alpha) {
  std::size_t m = rs.gc.size();
  RField logg(m);
  for (std::size_t p = 0; p < m; ++p) logg[p] = std::log(rs.gc[p]);
  RField lap = ops.laplace_flat(logg);
  for (std::size_t p = 0; p < m; ++p) {
    double k = -0.25 * lap[p] / rs.gc[p];
    sup_ric = std::max(sup_ric, std::sqrt(2.0) * std::abs(k));
    sup_alpha =
        std::max(sup_alpha, std::sqrt(2.0) * std::abs(rs.ac[p] / rs.gc[p]));
  }
}

// Pointwise material of one sample shared by every monitor configuration.
struct SampleCache {
  double t = 0.0;
  RField gc, dv;
  RField norm_rm;       // |Rm| = 2|K|
  RField ric_sq;        // |Ric|^2
  RField alpha_sq;      // |alpha|^2
  RField grad_ric_sq;   // |nabla Ric|^2
  RField grad_rm_sq;    // |nabla Rm|^2
  RField grad_alpha_sq; // |nabla alpha|^2
  RField grad_tral_sq;  // |nabla tr alpha|^2
};

SampleCache build_cache(const SpectralOps& ops, const RealizedState& rs) {
  RealGeometry geom = make_real_geometry(ops, rs.gc, rs.ac);
  std::size_t m = rs.gc.size();
  SampleCache c;
  c.t = rs.t;
  c.gc = rs.gc;
  c.dv = geom.dv;
  c.norm_rm.resize(m);
  c.ric_sq.resize(m);
  c.alpha_sq.resize(m);
  for (std::size_t p = 0; p < m; ++p) {
    c.norm_rm[p] = 2.0 * std::abs(geom.K[p]);
    c.ric_sq[p] = 2.0 * geom.K[p] * geom.K[p];
    c.alpha_sq[p] = 2.0 * geom.s[p] * geom.s[p];
  }
  c.grad_ric_sq = norm_sq(geom, covd(geom, geom.ric));
  c.grad_rm_sq = norm_sq(geom, covd(geom, riemann4(geom)));
  c.grad_alpha_sq = norm_sq(geom, covd(geom, geom.alpha));
  c.grad_tral_sq = grad_norm_sq(geom, trace2(geom, geom.alpha));
  return c;
}

// One integral through both accumulation routes.
struct DualValue {
  double primary = 0.0;
  double alt = 0.0;
};

double rel_dev(const DualValue& v) {
  double scale = std::max({1.0, std::abs(v.primary), std::abs(v.alt)});
  return std::abs(v.primary - v.alt) / scale;
}

// Per-configuration fixed data: cutoff, masks, constants.
struct ConfigContext {
  MonitorConfig cfg;
  MonitorConstants constants;
  CutoffField cut;
  RField phi_2p, phi_2pm1, phi_2pm2;
  std::vector<char> outer_mask, inner_mask;
  double init_lp_outer = 0.0; // integral of |Rm(0)|^p over the outer ball
  std::vector<MonitorRow> rows;
};

class Integrator {
public:
  Integrator(std::size_t m, double cellvol) : w_(m), cell_(cellvol) {}

  // Integrand entries are zeroed where `mask` is 0 when a mask is given.
  template <typename F>
  DualValue run(double& dev_acc, const F& entry) {
    for (std::size_t p = 0; p < w_.size(); ++p) w_[p] = entry(p);
    DualValue v;
    v.primary = sum_naive(w_) * cell_;
    v.alt = sum_compensated_reversed(w_) * cell_;
    dev_acc = std::max(dev_acc, rel_dev(v));
    return v;
  }

private:
  RField w_;
  double cell_;
};

} // namespace

MonitorConstants gronwall_constants(const MonitorConfig& cfg, double coef_a,
                                    double coef_b, double K, double L,
                                    double T_estimate) {
  validate_config(cfg);
  MonitorConstants mc;
  mc.K = std::max(K, kBoundFloor);
  mc.L = std::max(L, kBoundFloor);
  mc.T = T_estimate;
  mc.coef_a = coef_a;
  mc.coef_b = coef_b;
  mc.rho = cfg.ball_radius * std::sqrt(mc.K);
  int p = cfg.p;
  double p4 = ipow(double(p), 4);
  mc.a1 = 1.0 + mc.K + mc.L + mc.K / (p4 * mc.L * mc.L);
  mc.a2 = ipow(mc.L, p - 1) / std::pow(mc.K, 0.5 * (p - 3));
  double inv_pm2 = 1.0 / double(p - 2);
  mc.a3 = (1.0 + mc.K + mc.L) *
          std::pow(std::max(mc.L, 1.0), double(p + 2) + inv_pm2) /
          std::pow(std::min(mc.K, 1.0), 0.5 * (double(p - 2) + inv_pm2));
  mc.K_prime = mc.K + std::abs(coef_a) + std::abs(coef_b) * mc.L;
  double ksq = mc.K * mc.K + mc.L * mc.L;
  double p6 = ipow(double(p), 6);
  mc.A = cfg.C * p6 * (1.0 + ksq / mc.K) * mc.a1;
  double cbig = std::pow(cfg.C, 0.5 * (p + 3));
  double p2p = ipow(double(p), 2 * p);
  double theta2p = ipow(cfg.theta, 2 * p);
  double bracket = mc.a1 * ipow(mc.K_prime, p) * ipow(1.0 / mc.rho, 2 * p) *
                       std::exp(2.0 * mc.K_prime * p * T_estimate) +
                   ipow(std::max(mc.a2, 1.0), 2) + mc.a3;
  mc.B = cbig * p2p * ksq / (theta2p * mc.K) * bracket;
  if (!std::isfinite(mc.A) || !std::isfinite(mc.B))
    throw TfError(ErrorCode::invalid_input,
                  "estimate constants overflow at the measured bounds");
  return mc;
}

CutoffField cutoff_field(const Grid& grid, double g0_const,
                         const MonitorConfig& cfg) {
  validate_config(cfg);
  if (grid.n_complex != 1)
    throw TfError(ErrorCode::invalid_input,
                  "cutoff construction needs one complex dimension");
  if (!(g0_const > 0.0))
    throw TfError(ErrorCode::invalid_input,
                  "initial metric coefficient must be positive");
  double scale = std::sqrt(2.0 * g0_const); // coordinate length -> distance
  double min_period = std::min(grid.period[0], grid.period[1]) * scale;
  if (cfg.ball_radius > 0.5 * min_period)
    throw TfError(ErrorCode::ball_too_large,
                  "cutoff ball of radius " + std::to_string(cfg.ball_radius) +
                      " does not embed in a torus of minimal period " +
                      std::to_string(min_period));
  long cx = grid.npts[0] / 2, cy = grid.npts[1] / 2;
  if (cfg.centre) {
    cx = (*cfg.centre)[0];
    cy = (*cfg.centre)[1];
    if (cx < 0 || cy < 0 || cx >= grid.npts[0] || cy >= grid.npts[1])
      throw TfError(ErrorCode::invalid_input, "ball centre is off the grid");
  }
  std::size_t m = grid.size();
  CutoffField out;
  out.r0 = cfg.ball_radius;
  out.theta = cfg.theta;
  out.g0 = g0_const;
  out.d0.resize(m);
  out.phi.resize(m);
  double x0 = cx * grid.h(0), y0 = cy * grid.h(1);
  for (std::size_t p = 0; p < m; ++p) {
    auto c = grid.unflatten(p);
    double dx = std::remainder(c[0] * grid.h(0) - x0, grid.period[0]);
    double dy = std::remainder(c[1] * grid.h(1) - y0, grid.period[1]);
    out.d0[p] = scale * std::hypot(dx, dy);
    out.phi[p] =
        std::max(0.0, (out.r0 - out.d0[p]) / (cfg.theta * out.r0));
  }
  return out;
}

std::vector<MonitorOutput> monitor_run(const SpectralOps& ops,
                                       const FlowEngine& engine,
                                       const std::vector<Snapshot>& snaps,
                                       const std::vector<MonitorConfig>& cfgs) {
  if (cfgs.empty())
    throw TfError(ErrorCode::invalid_input, "no monitor configurations given");
  for (const auto& c : cfgs) validate_config(c);
  if (snaps.size() < 3)
    throw TfError(ErrorCode::insufficient_samples,
                  "monitoring needs at least three samples");
  for (std::size_t j = 1; j < snaps.size(); ++j)
    if (!(snaps[j].t > snaps[j - 1].t))
      throw TfError(ErrorCode::invalid_input,
                    "sample times must be strictly increasing");
  const FlowParams& params = engine.params();
  if (params.n_complex() != 1)
    throw TfError(ErrorCode::invalid_input,
                  "the estimate monitor needs one complex dimension");
  const Grid& grid = ops.grid();
  std::size_t m = grid.size();

  RealizedState first = realize_n1(engine, snapshot_state(params, snaps[0]));
  double g0_min = min_value(first.gc), g0_max = max_value(first.gc);
  double g0 = 0.5 * (g0_min + g0_max);
  if (!(g0 > 0.0) || (g0_max - g0_min) > 1e-9 * g0)
    throw TfError(ErrorCode::invalid_input,
                  "monitored runs need a spatially constant initial metric");

  AuditOptions dict = audit_dictionary(params);
  double sup_ric = 0.0, sup_alpha = 0.0;
  std::vector<RealizedState> realized;
  realized.reserve(snaps.size());
  for (const auto& sn : snaps) {
    realized.push_back(realize_n1(engine, snapshot_state(params, sn)));
    accumulate_bounds(ops, realized.back(), sup_ric, sup_alpha);
  }
  double T_est = 0.5 * snaps.back().t;

  std::vector<ConfigContext> ctxs;
  ctxs.reserve(cfgs.size());
  for (const auto& cfg : cfgs) {
    ConfigContext cx;
    cx.cfg = cfg;
    double K = cfg.K_override.value_or(sup_ric);
    double L = cfg.L_override.value_or(sup_alpha);
    cx.constants = gronwall_constants(cfg, dict.a, dict.b, K, L, T_est);
    cx.cut = cutoff_field(grid, g0, cfg);
    double scale = std::sqrt(2.0 * g0);
    double cell_diag = scale * std::hypot(grid.h(0), grid.h(1));
    if (cfg.ball_radius / cfg.tau <= cell_diag)
      throw TfError(ErrorCode::invalid_input,
                    "inner ball is not resolvable on this grid");
    int p2 = 2 * cfg.p;
    cx.phi_2p.resize(m);
    cx.phi_2pm1.resize(m);
    cx.phi_2pm2.resize(m);
    cx.outer_mask.resize(m);
    cx.inner_mask.resize(m);
    for (std::size_t q = 0; q < m; ++q) {
      cx.phi_2pm2[q] = ipow(cx.cut.phi[q], p2 - 2);
      cx.phi_2pm1[q] = cx.phi_2pm2[q] * cx.cut.phi[q];
      cx.phi_2p[q] = cx.phi_2pm1[q] * cx.cut.phi[q];
      cx.outer_mask[q] = cx.cut.d0[q] < cfg.ball_radius ? 1 : 0;
      cx.inner_mask[q] = cx.cut.d0[q] < cfg.ball_radius / cfg.tau ? 1 : 0;
    }
    cx.rows.resize(snaps.size());
    ctxs.push_back(std::move(cx));
  }

  Integrator integ(m, grid.cell_volume());
  for (std::size_t j = 0; j < snaps.size(); ++j) {
    SampleCache cache = build_cache(ops, realized[j]);
    double s_time = 0.5 * cache.t;
    for (auto& cx : ctxs) {
      const MonitorConstants& mc = cx.constants;
      const MonitorConfig& cfg = cx.cfg;
      int p = cfg.p;
      MonitorRow& row = cx.rows[j];
      row.t = cache.t;
      row.s = s_time;

      // |grad phi|^2 in g(t): the cone is linear with unit-speed profile in
      // the initial metric, so a.e. on the ball the gradient square is the
      // slope squared times the metric ratio.
      RField gphi2(m, 0.0);
      double slope_sq =
          1.0 / (cfg.theta * cfg.theta * cx.cut.r0 * cx.cut.r0);
      for (std::size_t q = 0; q < m; ++q)
        if (cx.cut.d0[q] > 0.0 && cx.cut.d0[q] < cx.cut.r0)
          gphi2[q] = slope_sq * g0 / cache.gc[q];

      double dev = 0.0;
      auto rmp = [&](std::size_t q, int e) { return ipow(cache.norm_rm[q], e); };

      DualValue A1 = integ.run(dev, [&](std::size_t q) {
        return rmp(q, p) * cx.phi_2p[q] * cache.dv[q];
      });
      DualValue A2 = integ.run(dev, [&](std::size_t q) {
        return rmp(q, p - 1) * gphi2[q] * cx.phi_2pm1[q] * cache.dv[q];
      });
      DualValue A3 = integ.run(dev, [&](std::size_t q) {
        return rmp(q, p - 1) * cx.phi_2p[q] * cache.dv[q];
      });
      DualValue A4 = integ.run(dev, [&](std::size_t q) {
        return rmp(q, p - 1) * gphi2[q] * cx.phi_2pm2[q] * cache.dv[q];
      });
      DualValue B1 = integ.run(dev, [&](std::size_t q) {
        return cache.grad_ric_sq[q] * rmp(q, p - 1) * cx.phi_2p[q] * cache.dv[q];
      });
      DualValue B2 = integ.run(dev, [&](std::size_t q) {
        return cache.grad_rm_sq[q] * rmp(q, p - 3) * cx.phi_2p[q] * cache.dv[q];
      });
      DualValue B3 = integ.run(dev, [&](std::size_t q) {
        return cache.grad_alpha_sq[q] * rmp(q, p - 1) * cx.phi_2p[q] *
               cache.dv[q];
      });
      DualValue B4 = integ.run(dev, [&](std::size_t q) {
        return cache.grad_tral_sq[q] * rmp(q, p - 1) * cx.phi_2p[q] *
               cache.dv[q];
      });
      DualValue B5 = integ.run(dev, [&](std::size_t q) {
        return cache.grad_alpha_sq[q] * rmp(q, p - 3) * cx.phi_2p[q] *
               cache.dv[q];
      });
      DualValue ric_int = integ.run(dev, [&](std::size_t q) {
        return cache.ric_sq[q] * rmp(q, p - 1) * cx.phi_2p[q] * cache.dv[q];
      });
      DualValue al_rm_int = integ.run(dev, [&](std::size_t q) {
        return cache.alpha_sq[q] * rmp(q, p - 1) * cx.phi_2p[q] * cache.dv[q];
      });
      DualValue al_int = integ.run(dev, [&](std::size_t q) {
        return cache.alpha_sq[q] * cx.phi_2p[q] * cache.dv[q];
      });
      DualValue vol_outer = integ.run(dev, [&](std::size_t q) {
        return cx.outer_mask[q] ? cache.dv[q] : 0.0;
      });
      DualValue vol_inner = integ.run(dev, [&](std::size_t q) {
        return cx.inner_mask[q] ? cache.dv[q] : 0.0;
      });
      DualValue lp_inner = integ.run(dev, [&](std::size_t q) {
        return cx.inner_mask[q] ? rmp(q, p) * cache.dv[q] : 0.0;
      });

      row.a_terms[0] = A1.primary;
      row.a_terms[1] = A2.primary;
      row.a_terms[2] = A3.primary;
      row.a_terms[3] = A4.primary;
      row.b_terms[0] = B1.primary / mc.K;
      row.b_terms[1] = B2.primary;
      row.b_terms[2] = B3.primary / mc.K;
      row.b_terms[3] = B4.primary / mc.K;
      row.b_terms[4] = B5.primary;

      double ksq = mc.K * mc.K + mc.L * mc.L;
      double p6 = ipow(double(p), 6);
      double c3 = cfg.C * p6 * ksq / (mc.K * (p - 1));
      double c4 = cfg.C * ipow(double(p), 2) * ksq / (mc.K * mc.L * mc.L);
      double c5 = std::pow(cfg.C, 0.5 * (p + 3)) * ipow(double(p), 2 * p) *
                  ksq / (mc.K * mc.L * mc.L);
      double u_primary = A1.primary + ric_int.primary / (2.0 * mc.K) +
                         c3 * A3.primary + c4 * al_rm_int.primary +
                         c5 * al_int.primary;
      double u_alt = A1.alt + ric_int.alt / (2.0 * mc.K) + c3 * A3.alt +
                     c4 * al_rm_int.alt + c5 * al_int.alt;
      row.u = u_primary;
      dev = std::max(dev, rel_dev(DualValue{u_primary, u_alt}));
      row.dual_dev = dev;
      row.vol_ball = vol_outer.primary;
      row.vol_inner = vol_inner.primary;

      // Structural inequalities of the cutoff and the trace term.
      row.trace_ineq_ok =
          row.b_terms[3] <= 2.0 * (1.0 + 1e-12) * row.b_terms[2];
      double a4_over_theta = row.a_terms[3] / cfg.theta;
      row.cutoff_ineq_ok =
          row.a_terms[1] <= a4_over_theta * (1.0 + 1e-12) &&
          a4_over_theta <= row.a_terms[3] * (1.0 + 1e-12);

      // Metric equivalence and the induced cutoff-gradient bound.
      double lo = std::exp(-2.0 * mc.K_prime * s_time) * (1.0 - kEquivSlack);
      double hi = std::exp(2.0 * mc.K_prime * s_time) * (1.0 + kEquivSlack);
      bool equiv = true;
      double grad_sup = 0.0;
      for (std::size_t q = 0; q < m; ++q) {
        double ratio = cache.gc[q] / g0;
        if (ratio < lo || ratio > hi) equiv = false;
        grad_sup = std::max(grad_sup, gphi2[q]);
      }
      row.metric_equiv_ok = equiv;
      double grad_bound = std::exp(mc.K_prime * s_time) /
                          (cfg.theta * cx.cut.r0) * (1.0 + kEquivSlack);
      row.grad_bound_ok = std::sqrt(grad_sup) <= grad_bound;

      row.lp_lhs = lp_inner.primary;
      if (j == 0) {
        double dev0 = 0.0;
        DualValue outer_lp = integ.run(dev0, [&](std::size_t q) {
          return cx.outer_mask[q] ? rmp(q, p) * cache.dv[q] : 0.0;
        });
        cx.init_lp_outer = outer_lp.primary;
        row.dual_dev = std::max(row.dual_dev, dev0);
      }
    }
  }

  std::vector<MonitorOutput> outs;
  outs.reserve(ctxs.size());
  for (auto& cx : ctxs) {
    const MonitorConstants& mc = cx.constants;
    const MonitorConfig& cfg = cx.cfg;
    std::size_t n = cx.rows.size();

    for (std::size_t j = 0; j < n; ++j) {
      std::size_t jl = j == 0 ? 0 : j - 1;
      std::size_t jr = j + 1 == n ? j : j + 1;
      double ds = cx.rows[jr].s - cx.rows[jl].s;
      cx.rows[j].du_ds = (cx.rows[jr].u - cx.rows[jl].u) / ds;
      cx.rows[j].margin_diff =
          mc.A * cx.rows[j].u + mc.B * cx.rows[j].vol_ball - cx.rows[j].du_ds;
    }

    // Integrated form: exp(-A s) U(s) <= U(0) + int_0^s B exp(-A sig) Vol.
    double u0 = cx.rows[0].u;
    double acc = 0.0;
    auto decayed_vol = [&](const MonitorRow& r) {
      return mc.B * std::exp(-mc.A * r.s) * r.vol_ball;
    };
    for (std::size_t j = 0; j < n; ++j) {
      if (j > 0)
        acc += 0.5 * (cx.rows[j].s - cx.rows[j - 1].s) *
               (decayed_vol(cx.rows[j]) + decayed_vol(cx.rows[j - 1]));
      cx.rows[j].margin_int =
          u0 + acc - std::exp(-mc.A * cx.rows[j].s) * cx.rows[j].u;
    }

    // Local bound on the shrunk ball; the right side is kept in logs since
    // exp(A T) overflows a double at realistic measured constants.
    int p = cfg.p;
    double ksq = mc.K * mc.K + mc.L * mc.L;
    double theta2p = ipow(cfg.theta, 2 * p);
    double c_init = cfg.C * ipow(double(p), 6) / theta2p *
                    (1.0 + ksq / mc.K) * mc.a1;
    double c_vol = mc.B / mc.A + std::pow(cfg.C, 0.5 * (p + 3)) *
                                     ipow(double(p), 2 * p) / theta2p * ksq /
                                     mc.K;
    double vol_final = cx.rows[n - 1].vol_ball;
    double bracket = c_init * cx.init_lp_outer +
                     c_vol * std::exp(8.0 * mc.K_prime * mc.T) * vol_final;
    double rhs_log = 2.0 * p * std::log(cfg.tau * cfg.theta / (cfg.tau - 1.0)) +
                     mc.A * mc.T + std::log(bracket);
    for (auto& r : cx.rows) {
      r.lp_rhs_log = rhs_log;
      r.lp_normalized = r.vol_inner > 0.0 ? r.lp_lhs / r.vol_inner : 0.0;
      r.lp_ok = r.lp_lhs <= 0.0 || std::log(r.lp_lhs) <= rhs_log;
    }

    MonitorOutput out;
    out.summary.constants = mc;
    out.summary.p = cfg.p;
    out.summary.theta = cfg.theta;
    out.summary.tau = cfg.tau;
    out.summary.ball_radius = cfg.ball_radius;
    out.summary.C = cfg.C;
    long ccx = cfg.centre ? (*cfg.centre)[0] : ops.grid().npts[0] / 2;
    long ccy = cfg.centre ? (*cfg.centre)[1] : ops.grid().npts[1] / 2;
    out.summary.centre[0] = ccx;
    out.summary.centre[1] = ccy;
    out.summary.samples = static_cast<int>(n);
    out.summary.init_lp_outer = cx.init_lp_outer;
    out.summary.all_metric_equiv = true;
    out.summary.all_grad_bound = true;
    out.summary.all_trace_ineq = true;
    out.summary.all_cutoff_ineq = true;
    out.summary.all_integral_ok = true;
    out.summary.all_lp_ok = true;
    out.summary.margin_diff_min = cx.rows[0].margin_diff;
    out.summary.margin_int_min = cx.rows[0].margin_int;
    long nonneg = 0;
    for (const auto& r : cx.rows) {
      out.summary.all_metric_equiv &= r.metric_equiv_ok;
      out.summary.all_grad_bound &= r.grad_bound_ok;
      out.summary.all_trace_ineq &= r.trace_ineq_ok;
      out.summary.all_cutoff_ineq &= r.cutoff_ineq_ok;
      out.summary.all_integral_ok &= r.margin_int >= 0.0;
      out.summary.all_lp_ok &= r.lp_ok;
      out.summary.margin_diff_min =
          std::min(out.summary.margin_diff_min, r.margin_diff);
      out.summary.margin_int_min =
          std::min(out.summary.margin_int_min, r.margin_int);
      out.summary.dual_dev_max = std::max(out.summary.dual_dev_max, r.dual_dev);
      if (r.margin_diff >= 0.0) ++nonneg;
    }
    out.summary.frac_margin_diff_nonneg = double(nonneg) / double(n);
    out.rows = std::move(cx.rows);
    outs.push_back(std::move(out));
  }
  return outs;
}

MonitorOutput monitor_run(const SpectralOps& ops, const FlowEngine& engine,
                          const std::vector<Snapshot>& snaps,
                          const MonitorConfig& cfg) {
  auto outs = monitor_run(ops, engine, snaps, std::vector<MonitorConfig>{cfg});
  return std::move(outs.front());
}

double calibrate_constant(const SpectralOps& ops, const FlowEngine& engine,
                          const std::vector<Snapshot>& snaps,
                          std::vector<MonitorConfig> cfgs) {
  for (int k = 0; k <= 40; ++k) {
    double C = std::ldexp(1.0, k);
    for (auto& c : cfgs) c.C = C;
    auto outs = monitor_run(ops, engine, snaps, cfgs);
    bool ok = true;
    for (const auto& o : outs)
      for (const auto& r : o.rows) ok &= r.margin_diff >= 0.0;
    if (ok) return C;
  }
  throw TfError(ErrorCode::invalid_input,
                "no power-of-two constant up to 2^40 closes the margin");
}

} // namespace torusflow
