#pragma once

#include <vector>

#include "torusflow/hermitian.hpp"
#include "torusflow/spectral.hpp"

namespace torusflow {

/// Curvature data of a Kähler metric on the periodic grid.
///
/// Conventions (documented, used consistently everywhere):
///  - Ricci form R_{i jbar} = -d_i d_jbar log det g.
///  - Riemann tensor R_{i jbar k lbar} =
///      -d_i d_jbar g_{k lbar} + g^{p qbar} d_i g_{k qbar} d_jbar g_{p lbar}.
///  - scalar = g^{i jbar} R_{i jbar} (complex trace).
///  - Norms contract every index with g / g^{-1} (complex convention).
///    In one complex dimension this collapses to the one-component
///    identities |Rm| = |scalar| and |Ric| = |scalar| with convention
///    constants c(1) = c'(1) = 1; the recorded norm fields use those
///    identities exactly, and the four-index contraction is cross-checked
///    against them in the test suite.
struct CurvatureBundle {
  HermitianField metric;
  HermitianField inverse;   // plain matrix inverse of [g_{i jbar}]
  RField det;
  RField log_det;
  HermitianField ricci;
  RField scalar;
  /// riemann[(i*n + j)*n*n + k*n + l] = R_{i jbar k lbar}
  std::vector<CField> riemann;
};

struct PointwiseNorms {
  RField norm_rm;     // |Rm|
  RField norm_ric;    // |Ric|
  RField scalar;      // scalar curvature (complex trace)
  RField norm_alpha;  // |alpha|
  RField trace_alpha; // g^{i jbar} alpha_{i jbar}
};

struct CovariantDerivativeNorms {
  RField grad_form_sq;  // |nabla alpha|^2, both derivative types summed
  RField grad_trace_sq; // |nabla(tr alpha)|^2, complex convention
};

/// g_{i jbar} = background_{i jbar} + d_i d_jbar phi (then hermitized).
HermitianField metric_from_potential(const SpectralOps& ops,
                                     const HermitianField& background,
                                     const RField& phi);

HermitianField ricci_form(const SpectralOps& ops, const HermitianField& metric);

CurvatureBundle make_curvature_bundle(const SpectralOps& ops,
                                      const HermitianField& metric);

/// Complex Laplacian g^{i jbar} d_i d_jbar u (one quarter of the flat real
/// Laplacian when g = identity).
RField laplacian(const SpectralOps& ops, const HermitianField& inverse,
                 const RField& u);

/// g^{i jbar} alpha_{i jbar}.
RField trace_form(const HermitianField& inverse, const HermitianField& form);

PointwiseNorms pointwise_norms(const CurvatureBundle& bundle,
                               const HermitianField& alpha);

CovariantDerivativeNorms covariant_derivative_norms(const SpectralOps& ops,
                                                    const CurvatureBundle& bundle,
                                                    const HermitianField& form);

/// |T|^2 of a Hermitian form: tr(g^{-1} T g^{-1} T), pointwise.
RField form_norm_sq(const HermitianField& inverse, const HermitianField& form);

/// Full four-index contraction |Rm|^2 (used directly for n = 2 and as the
/// cross-check route for n = 1).
RField riemann_norm_sq_contracted(const CurvatureBundle& bundle);

} // namespace torusflow
