#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace torusflow {

using RField = std::vector<double>;
using CField = std::vector<std::complex<double>>;

inline RField real_part(const CField& f) {
  RField r(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) r[i] = f[i].real();
  return r;
}

inline CField to_complex(const RField& f) {
  CField c(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) c[i] = f[i];
  return c;
}

/// Plain forward-order accumulation. Kept deliberately naive; the compensated
/// variant below is the independent second path for integral cross-checks.
inline double sum_naive(const RField& f) {
  double s = 0.0;
  for (double v : f) s += v;
  return s;
}

/// Neumaier-compensated summation over reversed index order.
inline double sum_compensated_reversed(const RField& f) {
  double s = 0.0, comp = 0.0;
  for (std::size_t i = f.size(); i-- > 0;) {
    double t = s + f[i];
    if (std::abs(s) >= std::abs(f[i]))
      comp += (s - t) + f[i];
    else
      comp += (f[i] - t) + s;
    s = t;
  }
  return s + comp;
}

inline double max_abs(const RField& f) {
  double m = 0.0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}

inline double min_value(const RField& f) {
  double m = f.empty() ? 0.0 : f[0];
  for (double v : f) m = std::min(m, v);
  return m;
}

inline double max_value(const RField& f) {
  double m = f.empty() ? 0.0 : f[0];
  for (double v : f) m = std::max(m, v);
  return m;
}

inline bool all_finite(const RField& f) {
  for (double v : f)
    if (!std::isfinite(v)) return false;
  return true;
}

} // namespace torusflow
