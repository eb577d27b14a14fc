#include "torusflow/geometry.hpp"

#include <cmath>

#include "torusflow/errors.hpp"

namespace torusflow {

namespace {

/// Upper-index metric entry g^{x ybar} at one point: for the matrix inverse
/// Ginv of [g_{i jbar}], g^{x ybar} = (Ginv)_{y x}.
inline std::complex<double> up(const HermitianField& inv, int x, int y,
                               std::size_t p) {
  return inv.at(y, x)[p];
}

} // namespace

HermitianField metric_from_potential(const SpectralOps& ops,
                                     const HermitianField& background,
                                     const RField& phi) {
  int n = background.n;
  auto dd = ops.dz_dzbar_all(to_complex(phi));
  HermitianField g = background;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      auto& c = g.at(i, j);
      const auto& d = dd[i * n + j];
      for (std::size_t p = 0; p < c.size(); ++p) c[p] += d[p];
    }
  hermitize(g);
  return g;
}

HermitianField ricci_form(const SpectralOps& ops,
                          const HermitianField& metric) {
  int n = metric.n;
  RField det = hermitian_det(metric);
  std::size_t m = det.size();
  CField logdet(m);
  for (std::size_t p = 0; p < m; ++p) {
    if (!(det[p] > 0.0))
      throw TfError(ErrorCode::invalid_input, "metric determinant not positive");
    logdet[p] = std::log(det[p]);
  }
  auto dd = ops.dz_dzbar_all(logdet);
  HermitianField ric = make_hermitian(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (std::size_t p = 0; p < m; ++p)
        ric.at(i, j)[p] = -dd[i * n + j][p];
  hermitize(ric);
  return ric;
}

RField trace_form(const HermitianField& inverse, const HermitianField& form) {
  int n = inverse.n;
  std::size_t m = inverse.comp[0].size();
  RField tr(m, 0.0);
  for (std::size_t p = 0; p < m; ++p) {
    std::complex<double> s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += up(inverse, i, j, p) * form.at(i, j)[p];
    tr[p] = s.real();
  }
  return tr;
}

RField laplacian(const SpectralOps& ops, const HermitianField& inverse,
                 const RField& u) {
  int n = inverse.n;
  auto dd = ops.dz_dzbar_all(to_complex(u));
  std::size_t m = u.size();
  RField out(m, 0.0);
  for (std::size_t p = 0; p < m; ++p) {
    std::complex<double> s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += up(inverse, i, j, p) * dd[i * n + j][p];
    out[p] = s.real();
  }
  return out;
}

RField form_norm_sq(const HermitianField& inverse, const HermitianField& form) {
  int n = inverse.n;
  std::size_t m = inverse.comp[0].size();
  RField out(m, 0.0);
  for (std::size_t p = 0; p < m; ++p) {
    std::complex<double> s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l)
            s += up(inverse, i, l, p) * up(inverse, k, j, p) *
                 form.at(i, j)[p] * form.at(l, k)[p];
    out[p] = s.real();
  }
  return out;
}

CurvatureBundle make_curvature_bundle(const SpectralOps& ops,
                                      const HermitianField& metric) {
  int n = metric.n;
  std::size_t m = metric.comp[0].size();

  CurvatureBundle b;
  b.metric = metric;
  RField mineig = hermitian_min_eig(metric);
  if (!(min_value(mineig) > 0.0))
    throw TfError(ErrorCode::invalid_input, "metric is not positive definite");
  b.inverse = hermitian_inverse(metric);
  b.det = hermitian_det(metric);
  b.log_det.resize(m);
  for (std::size_t p = 0; p < m; ++p) b.log_det[p] = std::log(b.det[p]);
  b.ricci = ricci_form(ops, metric);
  b.scalar = trace_form(b.inverse, b.ricci);

  // Riemann tensor.
  std::vector<CField> ddg(static_cast<std::size_t>(n) * n * n * n);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      auto dd = ops.dz_dzbar_all(metric.at(k, l));
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          ddg[((i * n + j) * n + k) * n + l] = dd[i * n + j];
    }
  // First derivatives d_{z_i} g_{k qbar} and d_{zbar_j} g_{p lbar}.
  std::vector<CField> dgz(static_cast<std::size_t>(n) * n * n);
  std::vector<CField> dgzb(static_cast<std::size_t>(n) * n * n);
  for (int k = 0; k < n; ++k)
    for (int q = 0; q < n; ++q)
      for (int i = 0; i < n; ++i) {
        dgz[(i * n + k) * n + q] = ops.derivative_z(metric.at(k, q), i);
        dgzb[(i * n + k) * n + q] = ops.derivative_zbar(metric.at(k, q), i);
      }

  b.riemann.assign(static_cast<std::size_t>(n) * n * n * n, CField(m, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          CField& r = b.riemann[((i * n + j) * n + k) * n + l];
          const CField& dd = ddg[((i * n + j) * n + k) * n + l];
          for (std::size_t p = 0; p < m; ++p) {
            std::complex<double> quad = 0.0;
            for (int pp = 0; pp < n; ++pp)
              for (int q = 0; q < n; ++q)
                quad += up(b.inverse, pp, q, p) *
                        dgz[(i * n + k) * n + q][p] *
                        dgzb[(j * n + pp) * n + l][p];
            r[p] = -dd[p] + quad;
          }
        }
  // Project onto the exact symmetry R_{i jbar k lbar} = conj(R_{j ibar l kbar}).
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          if (std::make_pair(i, k) < std::make_pair(j, l)) continue;
          CField& r = b.riemann[((i * n + j) * n + k) * n + l];
          CField& rt = b.riemann[((j * n + i) * n + l) * n + k];
          for (std::size_t p = 0; p < m; ++p) {
            auto v = 0.5 * (r[p] + std::conj(rt[p]));
            r[p] = v;
            rt[p] = std::conj(v);
          }
        }
  return b;
}

RField riemann_norm_sq_contracted(const CurvatureBundle& bundle) {
  int n = bundle.metric.n;
  std::size_t m = bundle.det.size();
  RField out(m, 0.0);
  const auto& inv = bundle.inverse;
  for (std::size_t p = 0; p < m; ++p) {
    std::complex<double> s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            auto rijkl = bundle.riemann[((i * n + j) * n + k) * n + l][p];
            for (int a = 0; a < n; ++a)
              for (int bb = 0; bb < n; ++bb)
                for (int c = 0; c < n; ++c)
                  for (int d = 0; d < n; ++d) {
                    auto rabcd =
                        bundle.riemann[((a * n + bb) * n + c) * n + d][p];
                    s += rijkl * std::conj(rabcd) * up(inv, i, a, p) *
                         up(inv, bb, j, p) * up(inv, k, c, p) *
                         up(inv, d, l, p);
                  }
          }
    out[p] = s.real();
  }
  return out;
}

PointwiseNorms pointwise_norms(const CurvatureBundle& bundle,
                               const HermitianField& alpha) {
  int n = bundle.metric.n;
  std::size_t m = bundle.det.size();
  PointwiseNorms out;
  out.scalar = bundle.scalar;
  out.trace_alpha = trace_form(bundle.inverse, alpha);

  RField a2 = form_norm_sq(bundle.inverse, alpha);
  out.norm_alpha.resize(m);
  for (std::size_t p = 0; p < m; ++p)
    out.norm_alpha[p] = std::sqrt(std::max(0.0, a2[p]));

  if (n == 1) {
    // One-component identities |Rm| = |scalar|, |Ric| = |scalar| hold exactly
    // (convention constants 1); using them keeps the recorded sups related by
    // exact floating-point equality.
    out.norm_rm.resize(m);
    out.norm_ric.resize(m);
    for (std::size_t p = 0; p < m; ++p) {
      out.norm_rm[p] = std::abs(bundle.scalar[p]);
      out.norm_ric[p] = std::abs(bundle.scalar[p]);
    }
  } else {
    RField rm2 = riemann_norm_sq_contracted(bundle);
    RField ric2 = form_norm_sq(bundle.inverse, bundle.ricci);
    out.norm_rm.resize(m);
    out.norm_ric.resize(m);
    for (std::size_t p = 0; p < m; ++p) {
      out.norm_rm[p] = std::sqrt(std::max(0.0, rm2[p]));
      out.norm_ric[p] = std::sqrt(std::max(0.0, ric2[p]));
    }
  }
  return out;
}

CovariantDerivativeNorms covariant_derivative_norms(
    const SpectralOps& ops, const CurvatureBundle& bundle,
    const HermitianField& form) {
  int n = bundle.metric.n;
  std::size_t m = bundle.det.size();
  const auto& inv = bundle.inverse;

  // Chern connection Gamma^k_{ij} = g^{k qbar} d_{z_i} g_{j qbar}.
  std::vector<CField> dgz(static_cast<std::size_t>(n) * n * n);
  for (int j = 0; j < n; ++j)
    for (int q = 0; q < n; ++q)
      for (int i = 0; i < n; ++i)
        dgz[(i * n + j) * n + q] = ops.derivative_z(bundle.metric.at(j, q), i);
  std::vector<CField> gamma(static_cast<std::size_t>(n) * n * n,
                            CField(m, 0.0));
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        CField& gm = gamma[(k * n + i) * n + j];
        for (std::size_t p = 0; p < m; ++p) {
          std::complex<double> s = 0.0;
          for (int q = 0; q < n; ++q)
            s += up(inv, k, q, p) * dgz[(i * n + j) * n + q][p];
          gm[p] = s;
        }
      }

  // Coordinate derivatives of the form.
  std::vector<CField> daz(static_cast<std::size_t>(n) * n * n);
  std::vector<CField> dazb(static_cast<std::size_t>(n) * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        daz[(k * n + i) * n + j] = ops.derivative_z(form.at(i, j), k);
        dazb[(k * n + i) * n + j] = ops.derivative_zbar(form.at(i, j), k);
      }

  // nabla_k alpha_{i jbar} and nabla_{kbar} alpha_{i jbar}.
  std::vector<CField> cz(static_cast<std::size_t>(n) * n * n, CField(m, 0.0));
  std::vector<CField> czb(static_cast<std::size_t>(n) * n * n, CField(m, 0.0));
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        CField& a = cz[(k * n + i) * n + j];
        CField& b = czb[(k * n + i) * n + j];
        for (std::size_t p = 0; p < m; ++p) {
          std::complex<double> s = daz[(k * n + i) * n + j][p];
          for (int q = 0; q < n; ++q)
            s -= gamma[(q * n + k) * n + i][p] * form.at(q, j)[p];
          a[p] = s;
          std::complex<double> t = dazb[(k * n + i) * n + j][p];
          for (int q = 0; q < n; ++q)
            t -= std::conj(gamma[(q * n + k) * n + j][p]) * form.at(i, q)[p];
          b[p] = t;
        }
      }

  CovariantDerivativeNorms out;
  out.grad_form_sq.assign(m, 0.0);
  for (std::size_t p = 0; p < m; ++p) {
    std::complex<double> s = 0.0;
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int l = 0; l < n; ++l)
            for (int a = 0; a < n; ++a)
              for (int b = 0; b < n; ++b) {
                auto w = cz[(k * n + i) * n + j][p] *
                         std::conj(cz[(l * n + a) * n + b][p]) *
                         up(inv, k, l, p) * up(inv, i, a, p) * up(inv, b, j, p);
                auto wb = czb[(k * n + i) * n + j][p] *
                          std::conj(czb[(l * n + a) * n + b][p]) *
                          up(inv, l, k, p) * up(inv, i, a, p) *
                          up(inv, b, j, p);
                s += w + wb;
              }
    out.grad_form_sq[p] = s.real();
  }

  RField tr = trace_form(inv, form);
  CField trc = to_complex(tr);
  std::vector<CField> dtr(n), dtrb(n);
  for (int i = 0; i < n; ++i) {
    dtr[i] = ops.derivative_z(trc, i);
    dtrb[i] = ops.derivative_zbar(trc, i);
  }
  out.grad_trace_sq.assign(m, 0.0);
  for (std::size_t p = 0; p < m; ++p) {
    std::complex<double> s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s += up(inv, i, j, p) * dtr[i][p] * dtrb[j][p];
    out.grad_trace_sq[p] = s.real();
  }
  return out;
}

} // namespace torusflow
