#pragma once

#include <array>
#include <complex>
#include <memory>
#include <vector>

#include "torusflow/field.hpp"
#include "torusflow/grid.hpp"

namespace torusflow {

/// Fourier differentiation and Poisson-type solves on a periodic grid.
/// Forward transforms are unnormalized (plain FFT); inverse transforms divide
/// by the point count, so inverse(forward(f)) == f up to round-off.
///
/// Odd-order derivative symbols zero the Nyquist mode (the standard choice
/// that keeps derivatives of real data real); composed even-order symbols
/// (Laplacian, same-axis-pair mixed derivatives) keep the full Nyquist value.
class SpectralOps {
public:
  explicit SpectralOps(const Grid& grid);
  ~SpectralOps();
  SpectralOps(const SpectralOps&) = delete;
  SpectralOps& operator=(const SpectralOps&) = delete;

  const Grid& grid() const { return grid_; }

  CField forward(const CField& f) const;
  CField inverse(const CField& spec) const;

  /// Signed wavenumber (integer) of index i on a real axis; Nyquist maps to
  /// +npts/2.
  int wavenumber(int axis, int i) const;

  /// Angular frequency 2*pi*k/period; `odd` selects the Nyquist-zeroed
  /// variant used inside odd-order symbols.
  double xi(int axis, int i, bool odd) const;

  /// d/dx along a real axis.
  RField dx(const RField& f, int axis) const;
  CField dx(const CField& f, int axis) const;

  /// Full flat Laplacian over all real axes.
  RField laplace_flat(const RField& f) const;

  /// Holomorphic / antiholomorphic derivatives for complex axis j, where
  /// z_j = x_{2j} + i x_{2j+1}: d/dz = (d/dx - i d/dy)/2, d/dzbar likewise
  /// with +i.
  CField derivative_z(const CField& f, int jcplx) const;
  CField derivative_zbar(const CField& f, int jcplx) const;

  /// Mixed second derivative d/dz_i d/dzbar_j in one spectral pass.
  CField dz_dzbar(const CField& f, int icplx, int jcplx) const;

  /// All n*n mixed second derivatives sharing a single forward transform;
  /// result is row-major over (i, j).
  std::vector<CField> dz_dzbar_all(const CField& f) const;

  /// Least-squares mean-zero solve of d/dz_i d/dzbar_j F = rhs_{ij} over all
  /// (i,j) pairs; `rhs` holds n*n component fields row-major. `residual` is
  /// the max-norm of the defect, including any DC (mean) incompatibility.
  struct PotentialSolve {
    RField F;
    double residual = 0.0;
  };
  PotentialSolve solve_dzdzbar(const std::vector<CField>& rhs) const;

  /// Grid integral (midpoint rule: node sum times cell volume).
  double integral(const RField& f) const;

private:
  struct Impl;
  Grid grid_;
  std::unique_ptr<Impl> impl_;

  CField apply_symbol(const CField& f,
                      const std::vector<std::complex<double>>& sym) const;
  std::vector<std::complex<double>> symbol_dz(int jcplx, int sign) const;
  std::vector<std::complex<double>> symbol_dz_dzbar(int i, int j) const;
};

} // namespace torusflow
