/// Curvature operators against independent oracles: closed forms, an
/// FFT-free high-order finite-difference route, product metrics, and
/// spectral self-convergence.

#include <cmath>
#include <functional>

#include "harness.hpp"
#include "torusflow/geometry.hpp"

using namespace torusflow;

namespace {

constexpr double kPi = 3.14159265358979323846;

RField sample_2d(const Grid& g, const std::function<double(double, double)>& fn) {
  RField f(g.size());
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    auto c = g.unflatten(idx);
    f[idx] = fn(c[0] * g.h(0), c[1] * g.h(1));
  }
  return f;
}

HermitianField conformal_metric(const RField& gc) {
  HermitianField h = make_hermitian(1, gc.size());
  for (std::size_t p = 0; p < gc.size(); ++p) h.at(0, 0)[p] = gc[p];
  return h;
}

double max_diff(const RField& a, const RField& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
  return e;
}

/// Periodic 8th-order central second difference along one axis; the
/// finite-difference oracle route shares no code with the spectral path.
RField fd8_d2(const Grid& g, const RField& f, int axis) {
  static const double w[4] = {8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0};
  const double c0 = -205.0 / 72.0;
  RField out(g.size());
  double h2 = g.h(axis) * g.h(axis);
  int n = g.npts[axis];
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    auto c = g.unflatten(idx);
    double acc = c0 * f[idx];
    for (int o = 1; o <= 4; ++o) {
      auto cp = c, cm = c;
      cp[axis] = (c[axis] + o) % n;
      cm[axis] = (c[axis] - o + n) % n;
      acc += w[o - 1] * (f[g.flatten(cp)] + f[g.flatten(cm)]);
    }
    out[idx] = acc / h2;
  }
  return out;
}

} // namespace

int main() {
  // --- potential to metric, closed form ---
  {
    Grid g = make_grid(1, 64, {1.0, 1.0});
    SpectralOps ops(g);
    double eps = 0.02;
    RField phi = sample_2d(g, [&](double x, double) { return eps * std::cos(2 * kPi * x); });
    HermitianField bg = make_constant_hermitian(1, g.size(), 1.0);
    HermitianField metric = metric_from_potential(ops, bg, phi);
    RField want = sample_2d(g, [&](double x, double) {
      return 1.0 - eps * kPi * kPi * std::cos(2 * kPi * x);
    });
    RField got(g.size());
    for (std::size_t p = 0; p < g.size(); ++p) got[p] = metric.at(0, 0)[p].real();
    harness::record("metric from potential closed form", max_diff(got, want) < 1e-12);
  }

  // --- Ricci form against the finite-difference oracle ---
  {
    Grid g = make_grid(1, 128, {1.0, 1.0});
    SpectralOps ops(g);
    double eps = 0.01;
    RField gc = sample_2d(g, [&](double x, double) {
      return 1.0 - eps * kPi * kPi * std::cos(2 * kPi * x);
    });
    HermitianField ric = ricci_form(ops, conformal_metric(gc));
    RField got(g.size());
    for (std::size_t p = 0; p < g.size(); ++p) got[p] = ric.at(0, 0)[p].real();

    RField loggc(g.size());
    for (std::size_t p = 0; p < g.size(); ++p) loggc[p] = std::log(gc[p]);
    RField d2x = fd8_d2(g, loggc, 0);
    RField d2y = fd8_d2(g, loggc, 1);
    RField want(g.size());
    for (std::size_t p = 0; p < g.size(); ++p)
      want[p] = -0.25 * (d2x[p] + d2y[p]);
    double e = max_diff(got, want);
    harness::record("Ricci form vs finite-difference oracle", e < 1e-8,
                    harness::fmt("err=%.3g", e));
  }

  // --- n=1 Riemann component identities ---
  {
    Grid g = make_grid(1, 64, {1.0, 1.0});
    SpectralOps ops(g);
    RField gc = sample_2d(g, [](double x, double y) {
      return 1.0 + 0.1 * std::cos(2 * kPi * x) + 0.05 * std::sin(2 * kPi * y);
    });
    CurvatureBundle b = make_curvature_bundle(ops, conformal_metric(gc));

    // R_{1 1bar 1 1bar} = g * ric (both are spectral routes; agreement is at
    // the level of the analytic tail of log g).
    RField r1111(g.size()), want(g.size());
    for (std::size_t p = 0; p < g.size(); ++p) {
      r1111[p] = b.riemann[0][p].real();
      want[p] = gc[p] * b.ricci.at(0, 0)[p].real();
    }
    double e1 = max_diff(r1111, want);
    harness::record("n=1 Riemann equals g * Ricci", e1 < 1e-10,
                    harness::fmt("err=%.3g", e1));

    // Contraction of Riemann reproduces the Ricci form.
    RField contracted(g.size());
    for (std::size_t p = 0; p < g.size(); ++p)
      contracted[p] = (b.inverse.at(0, 0)[p] * b.riemann[0][p]).real();
    RField ric(g.size());
    for (std::size_t p = 0; p < g.size(); ++p) ric[p] = b.ricci.at(0, 0)[p].real();
    double e2 = max_diff(contracted, ric);
    harness::record("Riemann contracts to Ricci", e2 < 1e-10,
                    harness::fmt("err=%.3g", e2));

    // Recorded norms use the one-component identities exactly.
    PointwiseNorms norms = pointwise_norms(b, conformal_metric(gc));
    bool exact = true;
    for (std::size_t p = 0; p < g.size(); ++p) {
      exact = exact && (norms.norm_rm[p] == std::abs(b.scalar[p]));
      exact = exact && (norms.norm_ric[p] == std::abs(b.scalar[p]));
    }
    harness::record("n=1 norm identities exact in floating point", exact);

    // Four-index contraction route agrees with scalar^2.
    RField rm2 = riemann_norm_sq_contracted(b);
    RField want_rm2(g.size());
    for (std::size_t p = 0; p < g.size(); ++p) want_rm2[p] = b.scalar[p] * b.scalar[p];
    double e3 = max_diff(rm2, want_rm2);
    harness::record("four-index |Rm|^2 matches scalar^2 (n=1)", e3 < 1e-9,
                    harness::fmt("err=%.3g", e3));

    RField ric2 = form_norm_sq(b.inverse, b.ricci);
    double e4 = max_diff(ric2, want_rm2);
    harness::record("|Ric|^2 matches scalar^2 (n=1)", e4 < 1e-9,
                    harness::fmt("err=%.3g", e4));
  }

  // --- complex Laplacian and traces on the flat metric ---
  {
    Grid g = make_grid(1, 64, {1.0, 1.0});
    SpectralOps ops(g);
    HermitianField flat = make_constant_hermitian(1, g.size(), 1.0);
    HermitianField inv = hermitian_inverse(flat);
    RField u = sample_2d(g, [](double x, double) { return std::sin(2 * kPi * x); });
    RField lap = laplacian(ops, inv, u);
    RField want = sample_2d(g, [](double x, double) {
      return -kPi * kPi * std::sin(2 * kPi * x);
    });
    harness::record("complex Laplacian is quarter flat Laplacian",
                    max_diff(lap, want) < 1e-11);

    RField tr = trace_form(inv, flat);
    bool ok = true;
    for (double v : tr) ok = ok && std::abs(v - 1.0) < 1e-15;
    harness::record("trace of metric against itself is n (n=1)", ok);

    CurvatureBundle b = make_curvature_bundle(ops, flat);
    PointwiseNorms norms = pointwise_norms(b, flat);
    bool okn = true;
    for (double v : norms.norm_alpha) okn = okn && std::abs(v - 1.0) < 1e-14;
    harness::record("|alpha| = sqrt(n) for alpha = metric (n=1)", okn);
    harness::record("flat metric has zero curvature norms",
                    max_abs(norms.norm_rm) == 0.0 && max_abs(norms.scalar) == 0.0);
  }

  // --- covariant derivative norms on the flat metric ---
  {
    Grid g = make_grid(1, 64, {1.0, 1.0});
    SpectralOps ops(g);
    HermitianField flat = make_constant_hermitian(1, g.size(), 1.0);
    CurvatureBundle b = make_curvature_bundle(ops, flat);
    RField f = sample_2d(g, [](double x, double) { return std::cos(2 * kPi * x); });
    HermitianField alpha = conformal_metric(f);
    CovariantDerivativeNorms cd = covariant_derivative_norms(ops, b, alpha);
    RField want = sample_2d(g, [](double x, double) {
      double s = std::sin(2 * kPi * x);
      return 2 * kPi * kPi * s * s;
    });
    harness::record("flat |grad alpha|^2 closed form",
                    max_diff(cd.grad_form_sq, want) < 1e-11);
    RField want_tr = sample_2d(g, [](double x, double) {
      double s = std::sin(2 * kPi * x);
      return kPi * kPi * s * s;
    });
    harness::record("flat |grad tr alpha|^2 closed form",
                    max_diff(cd.grad_trace_sq, want_tr) < 1e-11);
  }

  // --- n=2 product metric against two n=1 computations ---
  {
    int n1 = 12;
    Grid g2 = make_grid(2, n1, {1.0, 1.0, 1.0, 1.0});
    SpectralOps ops2(g2);
    Grid ga = make_grid(1, n1, {1.0, 1.0});
    SpectralOps opsa(ga);

    auto f1 = [](double x, double y) {
      return 1.0 + 0.04 * std::cos(2 * kPi * x) + 0.03 * std::sin(2 * kPi * y);
    };
    auto f2 = [](double x, double y) {
      return 1.0 + 0.03 * std::cos(2 * kPi * (x + y));
    };

    HermitianField metric2 = make_hermitian(2, g2.size());
    for (std::size_t idx = 0; idx < g2.size(); ++idx) {
      auto c = g2.unflatten(idx);
      double x0 = c[0] * g2.h(0), x1 = c[1] * g2.h(1);
      double x2 = c[2] * g2.h(2), x3 = c[3] * g2.h(3);
      metric2.at(0, 0)[idx] = f1(x0, x1);
      metric2.at(1, 1)[idx] = f2(x2, x3);
    }
    CurvatureBundle b2 = make_curvature_bundle(ops2, metric2);

    RField gc1 = sample_2d(ga, f1), gc2 = sample_2d(ga, f2);
    CurvatureBundle b1a = make_curvature_bundle(opsa, conformal_metric(gc1));
    CurvatureBundle b1b = make_curvature_bundle(opsa, conformal_metric(gc2));

    double e_diag = 0.0, e_off = 0.0, e_scalar = 0.0, e_rm = 0.0;
    for (std::size_t idx = 0; idx < g2.size(); ++idx) {
      auto c = g2.unflatten(idx);
      std::size_t ia = ga.flatten({c[0], c[1], 0, 0});
      std::size_t ib = ga.flatten({c[2], c[3], 0, 0});
      e_diag = std::max(e_diag, std::abs(b2.ricci.at(0, 0)[idx].real() -
                                         b1a.ricci.at(0, 0)[ia].real()));
      e_diag = std::max(e_diag, std::abs(b2.ricci.at(1, 1)[idx].real() -
                                         b1b.ricci.at(0, 0)[ib].real()));
      e_off = std::max(e_off, std::abs(b2.ricci.at(0, 1)[idx]));
      e_scalar = std::max(e_scalar, std::abs(b2.scalar[idx] -
                                             (b1a.scalar[ia] + b1b.scalar[ib])));
    }
    RField rm2 = riemann_norm_sq_contracted(b2);
    for (std::size_t idx = 0; idx < g2.size(); ++idx) {
      auto c = g2.unflatten(idx);
      std::size_t ia = ga.flatten({c[0], c[1], 0, 0});
      std::size_t ib = ga.flatten({c[2], c[3], 0, 0});
      double want = b1a.scalar[ia] * b1a.scalar[ia] +
                    b1b.scalar[ib] * b1b.scalar[ib];
      e_rm = std::max(e_rm, std::abs(rm2[idx] - want));
    }
    harness::record("n=2 product Ricci matches factors", e_diag < 1e-9,
                    harness::fmt("err=%.3g", e_diag));
    harness::record("n=2 product off-diagonal Ricci vanishes", e_off < 1e-10,
                    harness::fmt("err=%.3g", e_off));
    harness::record("n=2 product scalar adds", e_scalar < 1e-9,
                    harness::fmt("err=%.3g", e_scalar));
    harness::record("n=2 product |Rm|^2 adds", e_rm < 1e-9,
                    harness::fmt("err=%.3g", e_rm));

    HermitianField inv2 = hermitian_inverse(metric2);
    RField tr2 = trace_form(inv2, metric2);
    bool ok = true;
    for (double v : tr2) ok = ok && std::abs(v - 2.0) < 1e-13;
    harness::record("trace of metric against itself is n (n=2)", ok);
    PointwiseNorms norms2 = pointwise_norms(b2, metric2);
    bool okn = true;
    for (double v : norms2.norm_alpha)
      okn = okn && std::abs(v - std::sqrt(2.0)) < 1e-13;
    harness::record("|alpha| = sqrt(n) for alpha = metric (n=2)", okn);
  }

  // --- spectral self-convergence of the scalar curvature ---
  {
    // log of this metric has a full (geometrically decaying) spectrum, so
    // truncation error is visible at N=16 and tiny at N=32.
    auto gfun = [](double x, double y) {
      return 1.0 + 0.5 * std::cos(2 * kPi * x) + 0.2 * std::sin(2 * kPi * y);
    };
    Grid gref = make_grid(1, 128, {1.0, 1.0});
    SpectralOps opsref(gref);
    CurvatureBundle bref =
        make_curvature_bundle(opsref, conformal_metric(sample_2d(gref, gfun)));

    double errs[2];
    int sizes[2] = {16, 32};
    for (int i = 0; i < 2; ++i) {
      Grid g = make_grid(1, sizes[i], {1.0, 1.0});
      SpectralOps ops(g);
      CurvatureBundle b =
          make_curvature_bundle(ops, conformal_metric(sample_2d(g, gfun)));
      int stride = 128 / sizes[i];
      double e = 0.0;
      for (std::size_t idx = 0; idx < g.size(); ++idx) {
        auto c = g.unflatten(idx);
        std::size_t iref = gref.flatten({c[0] * stride, c[1] * stride, 0, 0});
        e = std::max(e, std::abs(b.scalar[idx] - bref.scalar[iref]));
      }
      errs[i] = e;
    }
    double order = std::log2(errs[0] / errs[1]);
    harness::record("scalar curvature self-convergence beyond order 6",
                    errs[1] < errs[0] && order > 6.0,
                    harness::fmt2("err16=%.3g err32=%.3g", errs[0], errs[1]));
  }

  return harness::summary("test_geometry");
}
