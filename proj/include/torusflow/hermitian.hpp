#pragma once

#include <vector>

#include "torusflow/field.hpp"
#include "torusflow/grid.hpp"

namespace torusflow {

/// Pointwise Hermitian n x n matrix field (n = grid.n_complex), components
/// row-major: comp[i*n+j] holds the (i, jbar) entry. Hermitian symmetry
/// comp[i][j] == conj(comp[j][i]) is an invariant maintained by constructors
/// and by hermitize().
struct HermitianField {
  int n = 1;
  std::vector<CField> comp;

  const CField& at(int i, int j) const { return comp[i * n + j]; }
  CField& at(int i, int j) { return comp[i * n + j]; }
};

HermitianField make_hermitian(int n, std::size_t m);

/// Diagonal constant field: value * identity.
HermitianField make_constant_hermitian(int n, std::size_t m, double value);

/// Project round-off dust back onto the Hermitian subspace.
void hermitize(HermitianField& h);

/// Pointwise determinant (real for Hermitian matrices).
RField hermitian_det(const HermitianField& h);

/// Pointwise matrix inverse (closed form; n <= 2).
HermitianField hermitian_inverse(const HermitianField& h);

/// Pointwise smallest eigenvalue (closed form; n <= 2).
RField hermitian_min_eig(const HermitianField& h);

/// Pointwise largest eigenvalue.
RField hermitian_max_eig(const HermitianField& h);

/// a + s*b componentwise.
HermitianField hermitian_axpy(const HermitianField& a, double s,
                              const HermitianField& b);

} // namespace torusflow
