#include "torusflow/real2d.hpp"

#include <cmath>

#include "torusflow/errors.hpp"

namespace torusflow {

RTensor make_rtensor(int rank, std::size_t m) {
  RTensor t;
  t.rank = rank;
  t.c.assign(RTensor::count(rank), RField(m, 0.0));
  return t;
}

namespace {

inline int slot_of(std::size_t comp, int rank, int k) {
  return static_cast<int>((comp >> (rank - 1 - k)) & 1u);
}

inline std::size_t with_slot(std::size_t comp, int rank, int k, int v) {
  std::size_t bit = std::size_t{1} << (rank - 1 - k);
  return (comp & ~bit) | (v ? bit : 0u);
}

} // namespace

RealGeometry make_real_geometry(const SpectralOps& ops, const RField& gc,
                                const RField& ac) {
  std::size_t m = gc.size();
  if (ops.grid().n_complex != 1)
    throw TfError(ErrorCode::invalid_input,
                  "real realization requires one complex dimension");
  if (!(min_value(gc) > 0.0))
    throw TfError(ErrorCode::invalid_input, "metric coefficient not positive");

  RealGeometry geom;
  geom.ops = &ops;
  geom.gc = gc;
  geom.ac = ac;
  geom.s.resize(m);
  geom.dv.resize(m);
  for (std::size_t p = 0; p < m; ++p) {
    geom.s[p] = ac[p] / gc[p];
    geom.dv[p] = 2.0 * gc[p];
  }

  RField loggc(m);
  for (std::size_t p = 0; p < m; ++p) loggc[p] = std::log(gc[p]);
  RField lap_log = ops.laplace_flat(loggc);
  geom.K.resize(m);
  geom.scalar.resize(m);
  for (std::size_t p = 0; p < m; ++p) {
    geom.K[p] = -0.25 * lap_log[p] / gc[p];
    geom.scalar[p] = 2.0 * geom.K[p];
  }

  geom.g = make_rtensor(2, m);
  geom.ginv = make_rtensor(2, m);
  geom.alpha = make_rtensor(2, m);
  geom.ric = make_rtensor(2, m);
  for (std::size_t p = 0; p < m; ++p) {
    double gv = 2.0 * gc[p];
    geom.g.c[0][p] = gv;  // xx
    geom.g.c[3][p] = gv;  // yy
    geom.ginv.c[0][p] = 1.0 / gv;
    geom.ginv.c[3][p] = 1.0 / gv;
    geom.alpha.c[0][p] = 2.0 * ac[p];
    geom.alpha.c[3][p] = 2.0 * ac[p];
    geom.ric.c[0][p] = geom.K[p] * gv;
    geom.ric.c[3][p] = geom.K[p] * gv;
  }

  // Gamma^a_{bc} = (1/2) g^{ad} (d_b g_dc + d_c g_db - d_d g_bc), assembled
  // generically from spectral derivatives of the metric components.
  std::array<std::array<RField, 4>, 2> dg; // dg[axis][comp]
  for (int ax = 0; ax < 2; ++ax)
    for (int comp = 0; comp < 4; ++comp) dg[ax][comp] = ops.dx(geom.g.c[comp], ax);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) {
        RField& gm = geom.gamma[(a * 2 + b) * 2 + c];
        gm.assign(m, 0.0);
        for (int d = 0; d < 2; ++d) {
          const RField& gd = geom.ginv.c[a * 2 + d];
          const RField& t1 = dg[b][d * 2 + c];
          const RField& t2 = dg[c][d * 2 + b];
          const RField& t3 = dg[d][b * 2 + c];
          for (std::size_t p = 0; p < m; ++p)
            gm[p] += 0.5 * gd[p] * (t1[p] + t2[p] - t3[p]);
        }
      }
  return geom;
}

RTensor covd(const RealGeometry& geom, const RTensor& T) {
  std::size_t m = geom.gc.size();
  int r = T.rank;
  RTensor out = make_rtensor(r + 1, m);
  const SpectralOps& ops = *geom.ops;
  for (std::size_t comp = 0; comp < T.c.size(); ++comp) {
    for (int a = 0; a < 2; ++a) {
      std::size_t oc = (static_cast<std::size_t>(a) << r) | comp;
      RField d = ops.dx(T.c[comp], a);
      for (int k = 0; k < r; ++k) {
        int ik = slot_of(comp, r, k);
        for (int p_idx = 0; p_idx < 2; ++p_idx) {
          std::size_t swapped = with_slot(comp, r, k, p_idx);
          const RField& gm = geom.gamma[(p_idx * 2 + a) * 2 + ik];
          const RField& tv = T.c[swapped];
          for (std::size_t p = 0; p < m; ++p) d[p] -= gm[p] * tv[p];
        }
      }
      out.c[oc] = std::move(d);
    }
  }
  return out;
}

RTensor grad_scalar(const RealGeometry& geom, const RField& u) {
  std::size_t m = u.size();
  RTensor t = make_rtensor(1, m);
  t.c[0] = geom.ops->dx(u, 0);
  t.c[1] = geom.ops->dx(u, 1);
  return t;
}

RTensor hessian(const RealGeometry& geom, const RField& u) {
  return covd(geom, grad_scalar(geom, u));
}

RField inner(const RealGeometry& geom, const RTensor& A, const RTensor& B) {
  if (A.rank != B.rank)
    throw TfError(ErrorCode::invalid_input, "inner: rank mismatch");
  std::size_t m = geom.gc.size();
  int r = A.rank;
  RField out(m, 0.0);
  if (r == 0) {
    for (std::size_t p = 0; p < m; ++p) out[p] = A.c[0][p] * B.c[0][p];
    return out;
  }
  // Skip index pairs whose g^{-1} chain contains an identically zero factor
  // (off-diagonal components vanish for conformal metrics).
  bool zero_comp[4];
  for (int comp = 0; comp < 4; ++comp)
    zero_comp[comp] = (max_abs(geom.ginv.c[comp]) == 0.0);
  std::size_t nc = A.c.size();
  for (std::size_t ia = 0; ia < nc; ++ia) {
    for (std::size_t ib = 0; ib < nc; ++ib) {
      bool skip = false;
      for (int k = 0; k < r && !skip; ++k)
        if (zero_comp[slot_of(ia, r, k) * 2 + slot_of(ib, r, k)]) skip = true;
      if (skip) continue;
      const RField& fa = A.c[ia];
      const RField& fb = B.c[ib];
      for (std::size_t p = 0; p < m; ++p) {
        double w = fa[p] * fb[p];
        for (int k = 0; k < r; ++k)
          w *= geom.ginv.c[slot_of(ia, r, k) * 2 + slot_of(ib, r, k)][p];
        out[p] += w;
      }
    }
  }
  return out;
}

RField norm_sq(const RealGeometry& geom, const RTensor& T) {
  return inner(geom, T, T);
}

RField grad_norm_sq(const RealGeometry& geom, const RField& u) {
  return norm_sq(geom, grad_scalar(geom, u));
}

RTensor trace_first2(const RealGeometry& geom, const RTensor& T) {
  if (T.rank < 2)
    throw TfError(ErrorCode::invalid_input, "trace_first2: rank too small");
  std::size_t m = geom.gc.size();
  int r = T.rank;
  RTensor out = make_rtensor(r - 2, m);
  std::size_t rest = out.c.size();
  for (std::size_t comp = 0; comp < rest; ++comp) {
    RField& o = out.c[comp];
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        std::size_t src = (static_cast<std::size_t>(a) << (r - 1)) |
                          (static_cast<std::size_t>(b) << (r - 2)) | comp;
        const RField& gi = geom.ginv.c[a * 2 + b];
        const RField& tv = T.c[src];
        for (std::size_t p = 0; p < m; ++p) o[p] += gi[p] * tv[p];
      }
  }
  return out;
}

RField trace2(const RealGeometry& geom, const RTensor& T) {
  return trace_first2(geom, T).c[0];
}

RTensor lap_rough(const RealGeometry& geom, const RTensor& T) {
  return trace_first2(geom, covd(geom, covd(geom, T)));
}

RField lap_scalar(const RealGeometry& geom, const RField& u) {
  return trace2(geom, hessian(geom, u));
}

RField div_div(const RealGeometry& geom, const RTensor& T) {
  if (T.rank != 2)
    throw TfError(ErrorCode::invalid_input, "div_div expects rank 2");
  std::size_t m = geom.gc.size();
  RTensor X = covd(geom, covd(geom, T)); // X_{c d a b} = (nabla_c nabla_d T)_{ab}
  RField out(m, 0.0);
  for (int c = 0; c < 2; ++c)
    for (int d = 0; d < 2; ++d)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          std::size_t src = static_cast<std::size_t>(((c * 2 + d) * 2 + a) * 2 + b);
          const RField& gca = geom.ginv.c[c * 2 + a];
          const RField& gdb = geom.ginv.c[d * 2 + b];
          const RField& tv = X.c[src];
          for (std::size_t p = 0; p < m; ++p) out[p] += gca[p] * gdb[p] * tv[p];
        }
  return out;
}

RTensor riemann4(const RealGeometry& geom) {
  std::size_t m = geom.gc.size();
  RTensor out = make_rtensor(4, m);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d) {
          RField& o = out.c[static_cast<std::size_t>(((a * 2 + b) * 2 + c) * 2 + d)];
          const RField& gad = geom.g.c[a * 2 + d];
          const RField& gbc = geom.g.c[b * 2 + c];
          const RField& gac = geom.g.c[a * 2 + c];
          const RField& gbd = geom.g.c[b * 2 + d];
          for (std::size_t p = 0; p < m; ++p)
            o[p] = geom.K[p] * (gad[p] * gbc[p] - gac[p] * gbd[p]);
        }
  return out;
}

RTensor contract4_22(const RealGeometry& geom, const RTensor& T4,
                     const RTensor& A) {
  if (T4.rank != 4 || A.rank != 2)
    throw TfError(ErrorCode::invalid_input, "contract4_22: bad ranks");
  std::size_t m = geom.gc.size();
  // Raise A: A^{pq} = g^{pa} g^{qb} A_ab.
  RTensor Aup = make_rtensor(2, m);
  for (int p_i = 0; p_i < 2; ++p_i)
    for (int q = 0; q < 2; ++q) {
      RField& o = Aup.c[p_i * 2 + q];
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          const RField& g1 = geom.ginv.c[p_i * 2 + a];
          const RField& g2 = geom.ginv.c[q * 2 + b];
          const RField& av = A.c[a * 2 + b];
          for (std::size_t pt = 0; pt < m; ++pt)
            o[pt] += g1[pt] * g2[pt] * av[pt];
        }
    }
  RTensor out = make_rtensor(2, m);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      RField& o = out.c[i * 2 + j];
      for (int p_i = 0; p_i < 2; ++p_i)
        for (int q = 0; q < 2; ++q) {
          const RField& tv =
              T4.c[static_cast<std::size_t>(((p_i * 2 + i) * 2 + j) * 2 + q)];
          const RField& av = Aup.c[p_i * 2 + q];
          for (std::size_t pt = 0; pt < m; ++pt) o[pt] += tv[pt] * av[pt];
        }
    }
  return out;
}

RTensor mat_mul_up(const RealGeometry& geom, const RTensor& A,
                   const RTensor& B) {
  if (A.rank != 2 || B.rank != 2)
    throw TfError(ErrorCode::invalid_input, "mat_mul_up expects rank 2");
  std::size_t m = geom.gc.size();
  RTensor out = make_rtensor(2, m);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      RField& o = out.c[i * 2 + j];
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          const RField& av = A.c[i * 2 + a];
          const RField& gv = geom.ginv.c[a * 2 + b];
          const RField& bv = B.c[b * 2 + j];
          for (std::size_t p = 0; p < m; ++p) o[p] += av[p] * gv[p] * bv[p];
        }
    }
  return out;
}

} // namespace torusflow
