#include "torusflow/hermitian.hpp"

#include <cmath>

#include "torusflow/errors.hpp"

namespace torusflow {

HermitianField make_hermitian(int n, std::size_t m) {
  HermitianField h;
  h.n = n;
  h.comp.assign(static_cast<std::size_t>(n) * n, CField(m, 0.0));
  return h;
}

HermitianField make_constant_hermitian(int n, std::size_t m, double value) {
  HermitianField h = make_hermitian(n, m);
  for (int i = 0; i < n; ++i)
    for (std::size_t p = 0; p < m; ++p) h.at(i, i)[p] = value;
  return h;
}

void hermitize(HermitianField& h) {
  int n = h.n;
  std::size_t m = h.comp[0].size();
  for (int i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < m; ++p)
      h.at(i, i)[p] = std::complex<double>(h.at(i, i)[p].real(), 0.0);
    for (int j = i + 1; j < n; ++j) {
      for (std::size_t p = 0; p < m; ++p) {
        auto v = 0.5 * (h.at(i, j)[p] + std::conj(h.at(j, i)[p]));
        h.at(i, j)[p] = v;
        h.at(j, i)[p] = std::conj(v);
      }
    }
  }
}

RField hermitian_det(const HermitianField& h) {
  std::size_t m = h.comp[0].size();
  RField d(m);
  if (h.n == 1) {
    for (std::size_t p = 0; p < m; ++p) d[p] = h.at(0, 0)[p].real();
  } else if (h.n == 2) {
    for (std::size_t p = 0; p < m; ++p)
      d[p] = h.at(0, 0)[p].real() * h.at(1, 1)[p].real() -
             std::norm(h.at(0, 1)[p]);
  } else {
    throw TfError(ErrorCode::invalid_input, "determinant: n must be 1 or 2");
  }
  return d;
}

HermitianField hermitian_inverse(const HermitianField& h) {
  std::size_t m = h.comp[0].size();
  HermitianField inv = make_hermitian(h.n, m);
  if (h.n == 1) {
    for (std::size_t p = 0; p < m; ++p) inv.at(0, 0)[p] = 1.0 / h.at(0, 0)[p].real();
  } else if (h.n == 2) {
    for (std::size_t p = 0; p < m; ++p) {
      double det = h.at(0, 0)[p].real() * h.at(1, 1)[p].real() -
                   std::norm(h.at(0, 1)[p]);
      inv.at(0, 0)[p] = h.at(1, 1)[p].real() / det;
      inv.at(1, 1)[p] = h.at(0, 0)[p].real() / det;
      inv.at(0, 1)[p] = -h.at(0, 1)[p] / det;
      inv.at(1, 0)[p] = -h.at(1, 0)[p] / det;
    }
  } else {
    throw TfError(ErrorCode::invalid_input, "inverse: n must be 1 or 2");
  }
  return inv;
}

RField hermitian_min_eig(const HermitianField& h) {
  std::size_t m = h.comp[0].size();
  RField e(m);
  if (h.n == 1) {
    for (std::size_t p = 0; p < m; ++p) e[p] = h.at(0, 0)[p].real();
  } else if (h.n == 2) {
    for (std::size_t p = 0; p < m; ++p) {
      double a = h.at(0, 0)[p].real(), d = h.at(1, 1)[p].real();
      double mid = 0.5 * (a + d);
      double rad = std::sqrt(0.25 * (a - d) * (a - d) + std::norm(h.at(0, 1)[p]));
      e[p] = mid - rad;
    }
  } else {
    throw TfError(ErrorCode::invalid_input, "eigenvalue: n must be 1 or 2");
  }
  return e;
}

RField hermitian_max_eig(const HermitianField& h) {
  std::size_t m = h.comp[0].size();
  RField e(m);
  if (h.n == 1) {
    for (std::size_t p = 0; p < m; ++p) e[p] = h.at(0, 0)[p].real();
  } else if (h.n == 2) {
    for (std::size_t p = 0; p < m; ++p) {
      double a = h.at(0, 0)[p].real(), d = h.at(1, 1)[p].real();
      double mid = 0.5 * (a + d);
      double rad = std::sqrt(0.25 * (a - d) * (a - d) + std::norm(h.at(0, 1)[p]));
      e[p] = mid + rad;
    }
  } else {
    throw TfError(ErrorCode::invalid_input, "eigenvalue: n must be 1 or 2");
  }
  return e;
}

HermitianField hermitian_axpy(const HermitianField& a, double s,
                              const HermitianField& b) {
  HermitianField out = a;
  for (std::size_t c = 0; c < out.comp.size(); ++c)
    for (std::size_t p = 0; p < out.comp[c].size(); ++p)
      out.comp[c][p] += s * b.comp[c][p];
  return out;
}

} // namespace torusflow
