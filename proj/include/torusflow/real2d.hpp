#pragma once

#include <array>
#include <vector>

#include "torusflow/spectral.hpp"

namespace torusflow {

/// Fully covariant small tensor on the 2-torus with runtime rank; component
/// fields indexed by bits, slot k of `rank` using bit (rank-1-k), so slot 0
/// is the leftmost index. Rank 0 is a scalar with one component.
struct RTensor {
  int rank = 0;
  std::vector<RField> c; // size 2^rank

  static std::size_t count(int rank) { return std::size_t{1} << rank; }
  double& at(std::size_t comp, std::size_t p) { return c[comp][p]; }
};

RTensor make_rtensor(int rank, std::size_t m);

/// Real Riemannian realization of the n = 1 flow state: metric
/// g_ab = 2*gc*delta_ab, 2-form coefficient alpha_ab = 2*ac*delta_ab.
/// Carries precomputed Christoffel symbols and curvature so that generic
/// covariant calculus (below) needs no further solves.
struct RealGeometry {
  const SpectralOps* ops = nullptr;
  RField gc; // complex-convention metric coefficient (positive)
  RField ac;
  RField s;      // ac / gc
  RField dv;     // volume density sqrt(det g) = 2*gc
  RField K;      // Gauss curvature = -(1/4) lap_flat(log gc) / gc
  RField scalar; // 2K
  RTensor g, ginv, alpha, ric;          // rank 2
  std::array<RField, 8> gamma;          // Gamma^a_{bc}, index (a*2+b)*2+c
};

RealGeometry make_real_geometry(const SpectralOps& ops, const RField& gc,
                                const RField& ac);

/// Covariant derivative; the new (derivative) slot comes first.
RTensor covd(const RealGeometry& geom, const RTensor& T);
RTensor grad_scalar(const RealGeometry& geom, const RField& u);
RTensor hessian(const RealGeometry& geom, const RField& u);

/// Full contraction of two equal-rank tensors with g^{-1} on every slot.
RField inner(const RealGeometry& geom, const RTensor& A, const RTensor& B);
RField norm_sq(const RealGeometry& geom, const RTensor& T);
RField grad_norm_sq(const RealGeometry& geom, const RField& u);

/// g^{ab} T_{ab...} over the first two slots.
RTensor trace_first2(const RealGeometry& geom, const RTensor& T);
RField trace2(const RealGeometry& geom, const RTensor& T);

/// Rough Laplacian g^{ab} nabla_a nabla_b T.
RTensor lap_rough(const RealGeometry& geom, const RTensor& T);
RField lap_scalar(const RealGeometry& geom, const RField& u);

/// nabla^a nabla^b T_ab.
RField div_div(const RealGeometry& geom, const RTensor& T);

/// R_{abcd} = K (g_ad g_bc - g_ac g_bd): the exact 2D curvature tensor.
RTensor riemann4(const RealGeometry& geom);

/// out_ij = T_{p i j q} A^{pq} (both raises with g^{-1}).
RTensor contract4_22(const RealGeometry& geom, const RTensor& T4,
                     const RTensor& A);

/// out_ij = A_{i a} g^{ab} B_{b j}.
RTensor mat_mul_up(const RealGeometry& geom, const RTensor& A,
                   const RTensor& B);

} // namespace torusflow
