#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "torusflow/errors.hpp"

namespace torusflow {

/// Uniform periodic grid on a product of circles. `n_complex` complex
/// dimensions give 2*n_complex real axes. Points are flattened row-major
/// with axis 0 slowest; node j on axis a sits at x = j * period[a] / npts[a].
struct Grid {
  int n_complex = 1;
  std::array<int, 4> npts{};      // first 2*n_complex entries used
  std::array<double, 4> period{}; // likewise

  int raxes() const { return 2 * n_complex; }

  std::size_t size() const {
    std::size_t m = 1;
    for (int a = 0; a < raxes(); ++a) m *= static_cast<std::size_t>(npts[a]);
    return m;
  }

  double h(int axis) const { return period[axis] / npts[axis]; }

  double cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < raxes(); ++a) v *= h(a);
    return v;
  }

  /// Coordinates of the flattened index along each real axis.
  std::array<int, 4> unflatten(std::size_t idx) const {
    std::array<int, 4> c{};
    for (int a = raxes() - 1; a >= 0; --a) {
      c[a] = static_cast<int>(idx % npts[a]);
      idx /= npts[a];
    }
    return c;
  }

  std::size_t flatten(const std::array<int, 4>& c) const {
    std::size_t idx = 0;
    for (int a = 0; a < raxes(); ++a)
      idx = idx * npts[a] + static_cast<std::size_t>(c[a]);
    return idx;
  }
};

/// Validating constructor; all axes share `points` and the periods come from
/// `periods` (one entry per real axis).
inline Grid make_grid(int n_complex, int points, const std::vector<double>& periods) {
  if (n_complex != 1 && n_complex != 2)
    throw TfError(ErrorCode::invalid_input, "n_complex must be 1 or 2");
  if (points < 8)
    throw TfError(ErrorCode::invalid_input, "grid needs at least 8 points per axis");
  Grid g;
  g.n_complex = n_complex;
  if (static_cast<int>(periods.size()) != 2 * n_complex)
    throw TfError(ErrorCode::invalid_input, "periods must list one entry per real axis");
  for (int a = 0; a < 2 * n_complex; ++a) {
    if (!(periods[a] > 0.0))
      throw TfError(ErrorCode::invalid_input, "periods must be positive");
    g.npts[a] = points;
    g.period[a] = periods[a];
  }
  return g;
}

} // namespace torusflow
