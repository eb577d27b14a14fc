#include "torusflow/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>

namespace torusflow {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

struct SpectralOps::Impl {
  fftw_complex* buf_in = nullptr;
  fftw_complex* buf_out = nullptr;
  fftw_plan plan_fwd = nullptr;
  fftw_plan plan_bwd = nullptr;
  std::size_t m = 0;

  ~Impl() {
    if (plan_fwd) fftw_destroy_plan(plan_fwd);
    if (plan_bwd) fftw_destroy_plan(plan_bwd);
    if (buf_in) fftw_free(buf_in);
    if (buf_out) fftw_free(buf_out);
  }
};

SpectralOps::SpectralOps(const Grid& grid) : grid_(grid), impl_(new Impl) {
  impl_->m = grid.size();
  impl_->buf_in = fftw_alloc_complex(impl_->m);
  impl_->buf_out = fftw_alloc_complex(impl_->m);
  int dims[4];
  for (int a = 0; a < grid.raxes(); ++a) dims[a] = grid.npts[a];
  impl_->plan_fwd = fftw_plan_dft(grid.raxes(), dims, impl_->buf_in,
                                  impl_->buf_out, FFTW_FORWARD, FFTW_ESTIMATE);
  impl_->plan_bwd = fftw_plan_dft(grid.raxes(), dims, impl_->buf_in,
                                  impl_->buf_out, FFTW_BACKWARD, FFTW_ESTIMATE);
  if (!impl_->plan_fwd || !impl_->plan_bwd)
    throw TfError(ErrorCode::invalid_input, "FFT planning failed");
}

SpectralOps::~SpectralOps() = default;

int SpectralOps::wavenumber(int axis, int i) const {
  int n = grid_.npts[axis];
  return (i <= n / 2) ? i : i - n;
}

double SpectralOps::xi(int axis, int i, bool odd) const {
  int n = grid_.npts[axis];
  int k = wavenumber(axis, i);
  if (odd && n % 2 == 0 && i == n / 2) k = 0;
  return 2.0 * kPi * k / grid_.period[axis];
}

CField SpectralOps::forward(const CField& f) const {
  if (f.size() != impl_->m)
    throw TfError(ErrorCode::invalid_input, "field size mismatch");
  std::memcpy(impl_->buf_in, f.data(), impl_->m * sizeof(fftw_complex));
  fftw_execute(impl_->plan_fwd);
  CField out(impl_->m);
  std::memcpy(out.data(), impl_->buf_out, impl_->m * sizeof(fftw_complex));
  return out;
}

CField SpectralOps::inverse(const CField& spec) const {
  if (spec.size() != impl_->m)
    throw TfError(ErrorCode::invalid_input, "field size mismatch");
  std::memcpy(impl_->buf_in, spec.data(), impl_->m * sizeof(fftw_complex));
  fftw_execute(impl_->plan_bwd);
  CField out(impl_->m);
  double scale = 1.0 / static_cast<double>(impl_->m);
  auto* raw = impl_->buf_out;
  for (std::size_t i = 0; i < impl_->m; ++i)
    out[i] = std::complex<double>(raw[i][0] * scale, raw[i][1] * scale);
  return out;
}

CField SpectralOps::apply_symbol(
    const CField& f, const std::vector<std::complex<double>>& sym) const {
  CField spec = forward(f);
  for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= sym[i];
  return inverse(spec);
}

std::vector<std::complex<double>> SpectralOps::symbol_dz(int jcplx,
                                                         int sign) const {
  // sign=+1: d/dz = (d/dx - i d/dy)/2, sign=-1: d/dzbar = (d/dx + i d/dy)/2.
  std::size_t m = grid_.size();
  std::vector<std::complex<double>> sym(m);
  int ax = 2 * jcplx, ay = 2 * jcplx + 1;
  for (std::size_t idx = 0; idx < m; ++idx) {
    auto c = grid_.unflatten(idx);
    double xix = xi(ax, c[ax], true);
    double xiy = xi(ay, c[ay], true);
    // (i xix -+ i * i xiy)/2 = (xiy*sign + i xix)/2 for sign=+1 gives
    // (xiy + i xix)/2; for sign=-1 gives (-xiy + i xix)/2.
    sym[idx] = std::complex<double>(sign * xiy / 2.0, xix / 2.0);
  }
  return sym;
}

std::vector<std::complex<double>> SpectralOps::symbol_dz_dzbar(int i,
                                                               int j) const {
  std::size_t m = grid_.size();
  std::vector<std::complex<double>> sym(m);
  if (i == j) {
    int ax = 2 * i, ay = 2 * i + 1;
    for (std::size_t idx = 0; idx < m; ++idx) {
      auto c = grid_.unflatten(idx);
      double xx = xi(ax, c[ax], false);
      double yy = xi(ay, c[ay], false);
      sym[idx] = -(xx * xx + yy * yy) / 4.0;
    }
  } else {
    auto a = symbol_dz(i, +1);
    auto b = symbol_dz(j, -1);
    for (std::size_t idx = 0; idx < m; ++idx) sym[idx] = a[idx] * b[idx];
  }
  return sym;
}

RField SpectralOps::dx(const RField& f, int axis) const {
  return real_part(dx(to_complex(f), axis));
}

CField SpectralOps::dx(const CField& f, int axis) const {
  std::size_t m = grid_.size();
  std::vector<std::complex<double>> sym(m);
  for (std::size_t idx = 0; idx < m; ++idx) {
    auto c = grid_.unflatten(idx);
    sym[idx] = std::complex<double>(0.0, xi(axis, c[axis], true));
  }
  return apply_symbol(f, sym);
}

RField SpectralOps::laplace_flat(const RField& f) const {
  std::size_t m = grid_.size();
  std::vector<std::complex<double>> sym(m);
  for (std::size_t idx = 0; idx < m; ++idx) {
    auto c = grid_.unflatten(idx);
    double s = 0.0;
    for (int a = 0; a < grid_.raxes(); ++a) {
      double x = xi(a, c[a], false);
      s += x * x;
    }
    sym[idx] = -s;
  }
  return real_part(apply_symbol(to_complex(f), sym));
}

CField SpectralOps::derivative_z(const CField& f, int jcplx) const {
  return apply_symbol(f, symbol_dz(jcplx, +1));
}

CField SpectralOps::derivative_zbar(const CField& f, int jcplx) const {
  return apply_symbol(f, symbol_dz(jcplx, -1));
}

CField SpectralOps::dz_dzbar(const CField& f, int icplx, int jcplx) const {
  return apply_symbol(f, symbol_dz_dzbar(icplx, jcplx));
}

std::vector<CField> SpectralOps::dz_dzbar_all(const CField& f) const {
  int n = grid_.n_complex;
  CField spec = forward(f);
  std::vector<CField> out(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      auto sym = symbol_dz_dzbar(i, j);
      CField s(spec.size());
      for (std::size_t p = 0; p < spec.size(); ++p) s[p] = spec[p] * sym[p];
      out[i * n + j] = inverse(s);
    }
  }
  return out;
}

SpectralOps::PotentialSolve SpectralOps::solve_dzdzbar(
    const std::vector<CField>& rhs) const {
  int n = grid_.n_complex;
  if (static_cast<int>(rhs.size()) != n * n)
    throw TfError(ErrorCode::invalid_input, "rhs must have n*n components");
  std::size_t m = grid_.size();

  std::vector<CField> rhat(rhs.size());
  for (std::size_t c = 0; c < rhs.size(); ++c) rhat[c] = forward(rhs[c]);

  std::vector<std::vector<std::complex<double>>> syms(rhs.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) syms[i * n + j] = symbol_dz_dzbar(i, j);

  // Per-mode least squares of sym_ij * Fhat = rhat_ij over all (i,j).
  CField fhat(m, 0.0);
  for (std::size_t idx = 1; idx < m; ++idx) {
    std::complex<double> num = 0.0;
    double den = 0.0;
    for (std::size_t c = 0; c < rhs.size(); ++c) {
      num += std::conj(syms[c][idx]) * rhat[c][idx];
      den += std::norm(syms[c][idx]);
    }
    if (den > 0.0) fhat[idx] = num / den;
  }
  // idx 0 is the DC mode: F is mean-zero by construction.

  PotentialSolve out;
  CField fcplx = inverse(fhat);
  out.F.resize(m);
  for (std::size_t i = 0; i < m; ++i) out.F[i] = fcplx[i].real();

  double resid = 0.0;
  for (std::size_t c = 0; c < rhs.size(); ++c) {
    CField defect(m);
    for (std::size_t idx = 0; idx < m; ++idx)
      defect[idx] = syms[c][idx] * fhat[idx] - rhat[c][idx];
    CField d = inverse(defect);
    for (std::size_t idx = 0; idx < m; ++idx)
      resid = std::max(resid, std::abs(d[idx]));
  }
  out.residual = resid;
  return out;
}

double SpectralOps::integral(const RField& f) const {
  return sum_naive(f) * grid_.cell_volume();
}

} // namespace torusflow
