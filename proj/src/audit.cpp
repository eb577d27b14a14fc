#include "torusflow/audit.hpp"

#include <algorithm>
#include <cmath>

#include "torusflow/errors.hpp"
#include "torusflow/real2d.hpp"

namespace torusflow {

namespace {

constexpr double kBoundFloor = 1e-6;

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

ResidualNorms norms_of(const RField& resid, const RField& dv) {
  ResidualNorms n;
  double wsum = 0.0, rsum = 0.0;
  for (std::size_t p = 0; p < resid.size(); ++p) {
    double r = std::abs(resid[p]);
    n.linf = std::max(n.linf, r);
    rsum += r * r * dv[p];
    wsum += dv[p];
  }
  n.l2 = wsum > 0.0 ? std::sqrt(rsum / wsum) : 0.0;
  return n;
}

ResidualNorms norms_flat(const RField& resid) {
  ResidualNorms n;
  double rsum = 0.0;
  for (double v : resid) {
    n.linf = std::max(n.linf, std::abs(v));
    rsum += v * v;
  }
  n.l2 = resid.empty() ? 0.0 : std::sqrt(rsum / double(resid.size()));
  return n;
}

ResidualNorms norms_tensor(const RealGeometry& geom, const RTensor& resid) {
  RField mag = norm_sq(geom, resid);
  for (double& v : mag) v = std::sqrt(std::max(v, 0.0));
  return norms_of(mag, geom.dv);
}

double fit_constant(const RField& lhs, const RField& majorant, double mask_rel,
                    bool one_sided) {
  double mmax = 0.0;
  for (double v : majorant) mmax = std::max(mmax, v);
  if (!(mmax > 0.0)) return 0.0;
  double floor = mask_rel * mmax;
  double c = 0.0;
  for (std::size_t p = 0; p < lhs.size(); ++p) {
    if (majorant[p] < floor) continue;
    double v = one_sided ? std::max(lhs[p], 0.0) : std::abs(lhs[p]);
    c = std::max(c, v / majorant[p]);
  }
  return c;
}

// M_{ij} = g^{bk} T_{bijk}: contracts the outer derivative slot of a second
// covariant derivative against its innermost index.
RTensor contract_outer_last(const RealGeometry& geom, const RTensor& t4) {
  std::size_t m = geom.gc.size();
  RTensor out = make_rtensor(2, m);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int b = 0; b < 2; ++b)
        for (int k = 0; k < 2; ++k) {
          const RField& src = t4.c[std::size_t(((b * 2 + i) * 2 + j) * 2 + k)];
          const RField& w = geom.ginv.c[std::size_t(b * 2 + k)];
          RField& dst = out.c[std::size_t(i * 2 + j)];
          for (std::size_t p = 0; p < m; ++p) dst[p] += w[p] * src[p];
        }
  return out;
}

void take_max(ResidualNorms& acc, const ResidualNorms& r) {
  acc.linf = std::max(acc.linf, r.linf);
  acc.l2 = std::max(acc.l2, r.l2);
}

AuditSummary summarize(const std::vector<AuditRow>& rows, double ric_bound,
                       double alpha_bound) {
  AuditSummary s;
  s.rows = int(rows.size());
  s.ric_bound = ric_bound;
  s.alpha_bound = alpha_bound;
  for (const AuditRow& r : rows) {
    take_max(s.volume, r.volume);
    take_max(s.scalar, r.scalar);
    take_max(s.ricci, r.ricci);
    take_max(s.form_heat, r.form_heat);
    take_max(s.potential_metric, r.potential_metric);
    take_max(s.potential_heat, r.potential_heat);
    s.cfit_alpha_sq = std::max(s.cfit_alpha_sq, r.cfit_alpha_sq);
    s.cfit_rm_bochner = std::max(s.cfit_rm_bochner, r.cfit_rm_bochner);
    s.cfit_grad_rm = std::max(s.cfit_grad_rm, r.cfit_grad_rm);
    s.cfit_rm_cube = std::max(s.cfit_rm_cube, r.cfit_rm_cube);
    s.cfit_rm_evolution = std::max(s.cfit_rm_evolution, r.cfit_rm_evolution);
    s.cfit_alpha_bochner = std::max(s.cfit_alpha_bochner, r.cfit_alpha_bochner);
    s.cfit_volume_growth = std::max(s.cfit_volume_growth, r.cfit_volume_growth);
    s.cfit_joint = std::max(s.cfit_joint, r.cfit_joint);
  }
  return s;
}

// Sup of |Ric| and |alpha| in the realized real geometry, without building
// the full covariant toolkit: |Ric| = sqrt(2)|K|, |alpha| = sqrt(2)|s|.
void accumulate_bounds(const SpectralOps& ops, const RealizedState& rs,
                       double& sup_ric, double& sup_alpha) {
  std::size_t m = rs.gc.size();
  RField logg(m);
  for (std::size_t p = 0; p < m; ++p) logg[p] = std::log(rs.gc[p]);
  RField lap = ops.laplace_flat(logg);
  for (std::size_t p = 0; p < m; ++p) {
    double k = -0.25 * lap[p] / rs.gc[p];
    sup_ric = std::max(sup_ric, std::sqrt(2.0) * std::abs(k));
    sup_alpha = std::max(sup_alpha, std::sqrt(2.0) * std::abs(rs.ac[p] / rs.gc[p]));
  }
}

} // namespace

AuditOptions audit_dictionary(const FlowParams& params) {
  AuditOptions opt;
  if (params.scenario == Scenario::form_level_n1) {
    opt.kappa_eff = 4.0 * params.kappa;
    if (!params.freeze_metric) {
      opt.a = 2.0 * params.lambda;
      opt.b = 2.0;
    }
  } else {
    opt.kappa_eff = params.kappa;
    opt.a = 2.0 * params.lambda;
    opt.b = 2.0;
  }
  return opt;
}

AuditRow audit_triple(const SpectralOps& ops, const FlowEngine& engine,
                      const FlowState& before, const FlowState& centre,
                      const FlowState& after, const SchematicBounds& bounds) {
  const FlowParams& params = engine.params();
  double dt = centre.t - before.t;
  if (!(dt > 0.0) ||
      std::abs((after.t - centre.t) - dt) > 1e-9 * (1.0 + std::abs(dt)))
    throw TfError(ErrorCode::invalid_input,
                  "audit triple must be uniformly spaced in time");

  AuditRow row;
  row.t = centre.t;
  row.ds = 0.5 * dt; // audit time runs at half simulation time

  if (params.scenario != Scenario::form_level_n1) {
    // Exact residuals of the potential equations along the trajectory.
    std::vector<RField> rhs = engine.rhs(centre);
    std::size_t m = centre.phi.size();
    RField rphi(m), rf(m);
    for (std::size_t p = 0; p < m; ++p) {
      rphi[p] = (after.phi[p] - before.phi[p]) / (2.0 * dt) - rhs[0][p];
      rf[p] = (after.f[p] - before.f[p]) / (2.0 * dt) - rhs[1][p];
    }
    row.potential_metric = norms_flat(rphi);
    row.potential_heat = norms_flat(rf);
    if (params.scenario == Scenario::potential_torus_n2)
      return row; // the tensor battery is one-complex-dimensional
  }

  AuditOptions opt = audit_dictionary(params);
  double kb = std::max(bounds.ric_bound, kBoundFloor);
  double lb = std::max(bounds.alpha_bound, kBoundFloor);

  RealizedState sm = realize_n1(engine, before);
  RealizedState s0 = realize_n1(engine, centre);
  RealizedState sp = realize_n1(engine, after);
  RealGeometry gm = make_real_geometry(ops, sm.gc, sm.ac);
  RealGeometry g0 = make_real_geometry(ops, s0.gc, s0.ac);
  RealGeometry gp = make_real_geometry(ops, sp.gc, sp.ac);
  std::size_t m = s0.gc.size();

  // Centre-snapshot geometry.
  RField lap_r = lap_scalar(g0, g0.scalar);
  RField ric_sq = norm_sq(g0, g0.ric);
  RField ric_dot_alpha = inner(g0, g0.ric, g0.alpha);
  RField tral = trace2(g0, g0.alpha);
  RField lap_tral = lap_scalar(g0, tral);
  RField ddal = div_div(g0, g0.alpha);
  RTensor lap_ric = lap_rough(g0, g0.ric);
  RTensor ric_ric = mat_mul_up(g0, g0.ric, g0.ric);
  RTensor rm4 = riemann4(g0);
  RTensor rm_ric = contract4_22(g0, rm4, g0.ric);
  RTensor dalpha = covd(g0, g0.alpha);
  RTensor ddalpha = covd(g0, dalpha);
  RTensor mixed = contract_outer_last(g0, ddalpha);
  RTensor lap_alpha = lap_rough(g0, g0.alpha);
  RTensor hess_tral = hessian(g0, tral);
  RTensor ddric = covd(g0, covd(g0, g0.ric));
  RField grad_rm_sq = norm_sq(g0, covd(g0, rm4));
  RField grad_alpha_sq = norm_sq(g0, dalpha);
  RField rm_sq = norm_sq(g0, rm4);
  RField alpha_sq = norm_sq(g0, g0.alpha);
  RField lap_rm_sq = lap_scalar(g0, rm_sq);
  RField lap_alpha_sq = lap_scalar(g0, alpha_sq);
  RField laps = lap_scalar(g0, g0.s);

  RField norm_rm(m), norm_ric(m), norm_alpha(m);
  RField norm_ddalpha = norm_sq(g0, ddalpha);
  RField norm_ddric = norm_sq(g0, ddric);
  RField norm_hess_tral = norm_sq(g0, hess_tral);
  for (std::size_t p = 0; p < m; ++p) {
    norm_rm[p] = std::sqrt(std::max(rm_sq[p], 0.0));
    norm_ric[p] = std::sqrt(std::max(ric_sq[p], 0.0));
    norm_alpha[p] = std::sqrt(std::max(alpha_sq[p], 0.0));
    norm_ddalpha[p] = std::sqrt(std::max(norm_ddalpha[p], 0.0));
    norm_ddric[p] = std::sqrt(std::max(norm_ddric[p], 0.0));
    norm_hess_tral[p] = std::sqrt(std::max(norm_hess_tral[p], 0.0));
  }

  // Outer-snapshot scalars for the centred audit-time derivatives
  // (d/ds = (F_plus - F_minus) / dt at audit-time spacing dt/2).
  RField rm_sq_m = norm_sq(gm, riemann4(gm));
  RField rm_sq_p = norm_sq(gp, riemann4(gp));
  RField alpha_sq_m = norm_sq(gm, gm.alpha);
  RField alpha_sq_p = norm_sq(gp, gp.alpha);

  RField fd_dens(m), fd_r(m), fd_rm_sq(m), fd_alpha_sq(m);
  for (std::size_t p = 0; p < m; ++p) {
    fd_dens[p] = (gp.dv[p] - gm.dv[p]) / dt;
    fd_r[p] = (gp.scalar[p] - gm.scalar[p]) / dt;
    fd_rm_sq[p] = (rm_sq_p[p] - rm_sq_m[p]) / dt;
    fd_alpha_sq[p] = (alpha_sq_p[p] - alpha_sq_m[p]) / dt;
  }

  // Volume density motion: d/ds dens = (-R + a n/2 + (b/2) tr alpha) dens.
  {
    RField r(m);
    for (std::size_t p = 0; p < m; ++p)
      r[p] = fd_dens[p] -
             (-g0.scalar[p] + opt.a + 0.5 * opt.b * tral[p]) * g0.dv[p];
    row.volume = norms_of(r, g0.dv);
  }

  // Scalar curvature: d/ds R = lap R + 2|Ric|^2 - aR - b<Ric,alpha>
  //                          - b lap tr(alpha) + b divdiv(alpha).
  {
    RField r(m);
    for (std::size_t p = 0; p < m; ++p)
      r[p] = fd_r[p] - lap_r[p] - 2.0 * ric_sq[p] + opt.a * g0.scalar[p] +
             opt.b * ric_dot_alpha[p] + opt.b * lap_tral[p] - opt.b * ddal[p];
    row.scalar = norms_of(r, g0.dv);
  }

  // Componentwise Ricci: d/ds Ric = lap_rough Ric - 2 Ric.Ric + 2 Rm:Ric
  //   + (b/2)(-lap_rough alpha + sym second derivatives - hess tr alpha).
  {
    RTensor r = make_rtensor(2, m);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        std::size_t cij = std::size_t(i * 2 + j);
        std::size_t cji = std::size_t(j * 2 + i);
        for (std::size_t p = 0; p < m; ++p) {
          double fd = (gp.ric.c[cij][p] - gm.ric.c[cij][p]) / dt;
          double bblock = -lap_alpha.c[cij][p] + mixed.c[cij][p] +
                          mixed.c[cji][p] - hess_tral.c[cij][p];
          r.c[cij][p] = fd - lap_ric.c[cij][p] + 2.0 * ric_ric.c[cij][p] -
                        2.0 * rm_ric.c[cij][p] - 0.5 * opt.b * bblock;
        }
      }
    row.ricci = norms_tensor(g0, r);
  }

  // Realized 2-form heat: d/ds alpha = kappa_eff (lap s) g.
  {
    RTensor r = make_rtensor(2, m);
    for (int comp = 0; comp < 4; ++comp) {
      std::size_t c = std::size_t(comp);
      for (std::size_t p = 0; p < m; ++p) {
        double fd = (gp.alpha.c[c][p] - gm.alpha.c[c][p]) / dt;
        r.c[c][p] = fd - opt.kappa_eff * laps[p] * g0.g.c[c][p];
      }
    }
    row.form_heat = norms_tensor(g0, r);
  }

  double mask = opt.majorant_mask_rel;

  // |alpha|^2 evolution vs. the cubic contraction majorant.
  {
    RField lhs(m), maj(m);
    for (std::size_t p = 0; p < m; ++p) {
      lhs[p] = fd_alpha_sq[p] - opt.kappa_eff * lap_alpha_sq[p] +
               2.0 * opt.kappa_eff * grad_alpha_sq[p] + 2.0 * opt.a * alpha_sq[p];
      maj[p] = norm_rm[p] * alpha_sq[p] + norm_ric[p] * alpha_sq[p] +
               norm_alpha[p] * norm_alpha[p] * norm_alpha[p];
    }
    row.cfit_alpha_sq = fit_constant(lhs, maj, mask, false);
  }

  // Bochner-type control of |Rm|^2 and its two cubic variants.
  RField d2(m);
  for (std::size_t p = 0; p < m; ++p)
    d2[p] = grad_rm_sq[p] + 0.5 * (fd_rm_sq[p] - lap_rm_sq[p]);
  {
    RField maj(m);
    for (std::size_t p = 0; p < m; ++p)
      maj[p] = norm_rm[p] * rm_sq[p] + rm_sq[p] + rm_sq[p] * norm_alpha[p] +
               norm_rm[p] * norm_ddalpha[p];
    row.cfit_rm_bochner = fit_constant(d2, maj, mask, true);
  }
  {
    RField lhs(m), maj(m);
    for (std::size_t p = 0; p < m; ++p) {
      lhs[p] = 0.5 * d2[p];
      maj[p] = kb * kb * norm_rm[p] + kb * kb * lb +
               norm_ric[p] * norm_ddalpha[p] +
               norm_ric[p] * norm_hess_tral[p];
    }
    row.cfit_grad_rm = fit_constant(lhs, maj, mask, true);
  }
  {
    RField maj(m);
    for (std::size_t p = 0; p < m; ++p)
      maj[p] = norm_rm[p] * rm_sq[p] + (1.0 + lb) * rm_sq[p] +
               norm_rm[p] * norm_ddalpha[p];
    row.cfit_rm_cube = fit_constant(d2, maj, mask, true);
  }

  // Raw |Rm|^2 time derivative, two-sided.
  {
    RField maj(m);
    for (std::size_t p = 0; p < m; ++p)
      maj[p] = norm_ddric[p] * norm_rm[p] + norm_ric[p] * rm_sq[p] + rm_sq[p] +
               norm_rm[p] * norm_ddalpha[p] + rm_sq[p] * norm_alpha[p];
    row.cfit_rm_evolution = fit_constant(fd_rm_sq, maj, mask, false);
  }

  // Form Bochner inequality.
  {
    RField lhs(m), maj(m);
    for (std::size_t p = 0; p < m; ++p) {
      lhs[p] = opt.kappa_eff * grad_alpha_sq[p] +
               0.5 * (fd_alpha_sq[p] - opt.kappa_eff * lap_alpha_sq[p]);
      maj[p] = lb * lb * norm_rm[p] + lb * lb * (1.0 + kb + lb);
    }
    row.cfit_alpha_bochner = fit_constant(lhs, maj, mask, true);
  }

  // Measure growth rate.
  {
    RField maj(m);
    for (std::size_t p = 0; p < m; ++p)
      maj[p] = (1.0 + kb + lb) * g0.dv[p];
    row.cfit_volume_growth = fit_constant(fd_dens, maj, mask, true);
  }

  // Coupled reaction-diffusion envelope on u = |Rm|^2 + |alpha|^2 with the
  // weight f = 1 + L + L^2 + |Rm|.
  {
    RField lhs(m), maj(m);
    for (std::size_t p = 0; p < m; ++p) {
      lhs[p] = (fd_rm_sq[p] - lap_rm_sq[p]) +
               (fd_alpha_sq[p] - opt.kappa_eff * lap_alpha_sq[p]);
      double f = 1.0 + lb + lb * lb + norm_rm[p];
      maj[p] = f * (rm_sq[p] + alpha_sq[p]);
    }
    row.cfit_joint = fit_constant(lhs, maj, mask, true);
  }

  return row;
}

AuditOutput audit_run(const SpectralOps& ops, const FlowEngine& engine,
                      const std::vector<Snapshot>& snaps, int stride) {
  if (stride < 1)
    throw TfError(ErrorCode::invalid_input, "audit stride must be >= 1");
  if (snaps.size() < std::size_t(2 * stride + 1))
    throw TfError(ErrorCode::insufficient_samples,
                  "need at least 2*stride+1 snapshots to audit");
  const FlowParams& params = engine.params();

  SchematicBounds bounds{kBoundFloor, kBoundFloor};
  if (params.scenario != Scenario::potential_torus_n2) {
    for (const Snapshot& s : snaps) {
      RealizedState rs = realize_n1(engine, snapshot_state(params, s));
      accumulate_bounds(ops, rs, bounds.ric_bound, bounds.alpha_bound);
    }
  }

  double spacing = snaps[1].t - snaps[0].t;
  AuditOutput out;
  for (std::size_t k = std::size_t(stride); k + std::size_t(stride) < snaps.size();
       k += std::size_t(stride)) {
    const Snapshot& sm = snaps[k - std::size_t(stride)];
    const Snapshot& s0 = snaps[k];
    const Snapshot& sp = snaps[k + std::size_t(stride)];
    double want = spacing * stride;
    if (std::abs((s0.t - sm.t) - want) > 1e-9 * (1.0 + want) ||
        std::abs((sp.t - s0.t) - want) > 1e-9 * (1.0 + want))
      continue; // trailing clipped sample
    out.rows.push_back(audit_triple(ops, engine,
                                    snapshot_state(params, sm),
                                    snapshot_state(params, s0),
                                    snapshot_state(params, sp), bounds));
  }
  if (out.rows.empty())
    throw TfError(ErrorCode::insufficient_samples,
                  "no uniformly spaced audit triples available");
  out.summary = summarize(out.rows, bounds.ric_bound, bounds.alpha_bound);
  return out;
}

namespace {

std::optional<double> fit_order(const std::vector<AuditLadderRung>& rungs,
                                const std::vector<double>& residuals) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < rungs.size(); ++i)
    if (residuals[i] > 1e-14)
      pts.emplace_back(std::log(rungs[i].ds), std::log(residuals[i]));
  if (pts.size() < 3) return std::nullopt;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto& [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double n = double(pts.size());
  double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-30) return std::nullopt;
  return (n * sxy - sx * sy) / denom;
}

} // namespace

AuditLadder audit_ladder(const SpectralOps& ops, const FlowEngine& engine,
                         const std::vector<Snapshot>& snaps,
                         const std::vector<int>& strides) {
  if (strides.empty())
    throw TfError(ErrorCode::invalid_input, "audit ladder needs strides");
  int smax = *std::max_element(strides.begin(), strides.end());
  if (*std::min_element(strides.begin(), strides.end()) < 1)
    throw TfError(ErrorCode::invalid_input, "audit strides must be >= 1");
  if (snaps.size() < std::size_t(2 * smax + 1))
    throw TfError(ErrorCode::insufficient_samples,
                  "run too short for the requested audit ladder");

  const FlowParams& params = engine.params();
  SchematicBounds bounds{kBoundFloor, kBoundFloor};
  if (params.scenario != Scenario::potential_torus_n2) {
    for (const Snapshot& s : snaps) {
      RealizedState rs = realize_n1(engine, snapshot_state(params, s));
      accumulate_bounds(ops, rs, bounds.ric_bound, bounds.alpha_bound);
    }
  }

  double spacing = snaps[1].t - snaps[0].t;
  AuditLadder ladder;
  for (int st : strides) {
    std::vector<AuditRow> rows;
    // Common centres at multiples of the largest stride, so every rung
    // differences around identical states.
    for (std::size_t k = std::size_t(smax); k + std::size_t(smax) < snaps.size();
         k += std::size_t(smax)) {
      const Snapshot& sm = snaps[k - std::size_t(st)];
      const Snapshot& s0 = snaps[k];
      const Snapshot& sp = snaps[k + std::size_t(st)];
      double want = spacing * st;
      if (std::abs((s0.t - sm.t) - want) > 1e-9 * (1.0 + want) ||
          std::abs((sp.t - s0.t) - want) > 1e-9 * (1.0 + want))
        continue;
      rows.push_back(audit_triple(ops, engine,
                                  snapshot_state(params, sm),
                                  snapshot_state(params, s0),
                                  snapshot_state(params, sp), bounds));
    }
    if (rows.empty())
      throw TfError(ErrorCode::insufficient_samples,
                    "no audit triples at requested stride");
    AuditLadderRung rung;
    rung.ds = rows.front().ds;
    rung.summary = summarize(rows, bounds.ric_bound, bounds.alpha_bound);
    ladder.rungs.push_back(std::move(rung));
  }

  auto collect = [&](ResidualNorms AuditSummary::*field) {
    std::vector<double> v;
    for (const auto& r : ladder.rungs) v.push_back((r.summary.*field).linf);
    return v;
  };
  ladder.order_volume = fit_order(ladder.rungs, collect(&AuditSummary::volume));
  ladder.order_scalar = fit_order(ladder.rungs, collect(&AuditSummary::scalar));
  ladder.order_ricci = fit_order(ladder.rungs, collect(&AuditSummary::ricci));
  ladder.order_form_heat =
      fit_order(ladder.rungs, collect(&AuditSummary::form_heat));
  return ladder;
}

} // namespace torusflow
