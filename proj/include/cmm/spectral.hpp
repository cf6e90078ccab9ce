#pragma once

// FFT-based operators on the periodic box: Biot-Savart, sharp low-pass,
// curl/div/grad, inverse Laplacian, Leray projection and shell spectra.
//
// Spectra are stored in FFTW's r2c layout (ny rows of nx/2+1 complex values)
// and normalized as Fourier coefficients, f_hat(k) = N^-2 sum_x f(x) e^{-ik.x},
// so that sum_k |f_hat(k)|^2 equals the domain-averaged mean of f^2.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <mutex>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cmm/geometry.hpp"
#include "cmm/hermite.hpp"

namespace cmm {

using Complex = std::complex<double>;
using Spectrum = std::vector<Complex>;

namespace detail {
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// FFT plans, scratch buffers and wavenumber tables for one grid. Not thread
/// safe: use one workspace per thread.
class SpectralWorkspace {
 public:
  explicit SpectralWorkspace(GridSpec grid) : grid_(grid) {
    grid_.validate();
    if (grid_.nx % 2 != 0 || grid_.ny % 2 != 0)
      throw std::invalid_argument("spectral grids need even sizes");
    ncx_ = static_cast<std::size_t>(grid_.nx / 2 + 1);
    real_ = static_cast<double*>(fftw_malloc(sizeof(double) * grid_.size()));
    cplx_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * spectrum_size()));
    if (!real_ || !cplx_) throw std::bad_alloc();
    {
      std::lock_guard lock(detail::fftw_planner_mutex());
      forward_ = fftw_plan_dft_r2c_2d(grid_.ny, grid_.nx, real_, cplx_, FFTW_ESTIMATE);
      inverse_ = fftw_plan_dft_c2r_2d(grid_.ny, grid_.nx, cplx_, real_, FFTW_ESTIMATE);
    }
  }

  SpectralWorkspace(const SpectralWorkspace&) = delete;
  SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;

  ~SpectralWorkspace() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
    fftw_free(real_);
    fftw_free(cplx_);
  }

  const GridSpec& grid() const { return grid_; }
  std::size_t spectrum_size() const { return ncx_ * static_cast<std::size_t>(grid_.ny); }
  std::size_t columns() const { return ncx_; }
  int kmax() const { return std::min(grid_.nx, grid_.ny) / 2; }

  /// Integer wavenumbers of spectral entry (column i, row j).
  int kx_index(std::size_t i) const { return static_cast<int>(i); }
  int ky_index(std::size_t j) const {
    const int jj = static_cast<int>(j);
    return jj <= grid_.ny / 2 ? jj : jj - grid_.ny;
  }
  double kx(std::size_t i) const { return kx_index(i) * two_pi / grid_.lx; }
  double ky(std::size_t j) const { return ky_index(j) * two_pi / grid_.ly; }
  bool is_nyquist_x(std::size_t i) const { return kx_index(i) == grid_.nx / 2; }
  bool is_nyquist_y(std::size_t j) const { return static_cast<int>(j) == grid_.ny / 2; }

  /// Number of times entry (i, j) appears in the full (Hermitian) spectrum.
  double multiplicity(std::size_t i) const {
    return (i == 0 || is_nyquist_x(i)) ? 1.0 : 2.0;
  }

  Spectrum forward(std::span<const double> f) {
    if (f.size() != grid_.size()) throw std::invalid_argument("forward: size mismatch");
    for (double v : f)
      if (!std::isfinite(v)) throw std::domain_error("forward: non-finite input");
    std::memcpy(real_, f.data(), sizeof(double) * f.size());
    fftw_execute(forward_);
    Spectrum out(spectrum_size());
    const double scale = 1.0 / static_cast<double>(grid_.size());
    for (std::size_t k = 0; k < out.size(); ++k)
      out[k] = Complex(cplx_[k][0] * scale, cplx_[k][1] * scale);
    return out;
  }

  std::vector<double> inverse(const Spectrum& s) {
    if (s.size() != spectrum_size()) throw std::invalid_argument("inverse: size mismatch");
    for (std::size_t k = 0; k < s.size(); ++k) {
      cplx_[k][0] = s[k].real();
      cplx_[k][1] = s[k].imag();
    }
    fftw_execute(inverse_);
    return std::vector<double>(real_, real_ + grid_.size());
  }

  /// Applies fn(i, j, value) -> new value to every spectral entry.
  template <class Fn>
  Spectrum map(const Spectrum& s, Fn&& fn) const {
    Spectrum out(s.size());
    for (std::size_t j = 0; j < static_cast<std::size_t>(grid_.ny); ++j)
      for (std::size_t i = 0; i < ncx_; ++i) {
        const std::size_t k = j * ncx_ + i;
        out[k] = fn(i, j, s[k]);
      }
    return out;
  }

  /// Spectral d/dx multiplier; zero on the Nyquist column so odd derivatives
  /// of real fields stay real.
  Complex ddx(std::size_t i) const {
    return is_nyquist_x(i) ? Complex{} : Complex(0.0, kx(i));
  }
  Complex ddy(std::size_t j) const {
    return is_nyquist_y(j) ? Complex{} : Complex(0.0, ky(j));
  }
  double k_squared(std::size_t i, std::size_t j) const {
    return kx(i) * kx(i) + ky(j) * ky(j);
  }

  /// Sharp cutoff: keep max(|kx|/kmax_x, |ky|/kmax_y) <= cutoff.
  bool passes(std::size_t i, std::size_t j, double cutoff) const {
    const double ax = std::abs(kx_index(i)), ay = std::abs(ky_index(j));
    return ax <= cutoff * (grid_.nx / 2) && ay <= cutoff * (grid_.ny / 2);
  }

 private:
  GridSpec grid_;
  std::size_t ncx_ = 0;
  double* real_ = nullptr;
  fftw_complex* cplx_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

inline void check_cutoff(double cutoff) {
  if (!(cutoff > 0.0 && cutoff <= 1.0))
    throw std::invalid_argument("cutoff fraction must lie in (0, 1]");
}

inline Spectrum lowpass_spectrum(const SpectralWorkspace& ws, const Spectrum& s, double cutoff) {
  check_cutoff(cutoff);
  return ws.map(s, [&](std::size_t i, std::size_t j, Complex v) {
    return ws.passes(i, j, cutoff) ? v : Complex{};
  });
}

inline std::vector<double> lowpass(SpectralWorkspace& ws, std::span<const double> f,
                                   double cutoff) {
  return ws.inverse(lowpass_spectrum(ws, ws.forward(f), cutoff));
}

/// Node data {f, fx, fy, fxy} from a spectrum by ik multiplication.
inline HermiteField hermite_from_spectrum(SpectralWorkspace& ws, const Spectrum& s) {
  HermiteField h(ws.grid());
  auto copy = [](std::span<double> dst, const std::vector<double>& src) {
    std::copy(src.begin(), src.end(), dst.begin());
  };
  copy(h.values(), ws.inverse(s));
  copy(h.dx(), ws.inverse(ws.map(s, [&](auto i, auto, Complex v) { return ws.ddx(i) * v; })));
  copy(h.dy(), ws.inverse(ws.map(s, [&](auto, auto j, Complex v) { return ws.ddy(j) * v; })));
  copy(h.dxy(), ws.inverse(ws.map(
                    s, [&](auto i, auto j, Complex v) { return ws.ddx(i) * ws.ddy(j) * v; })));
  return h;
}

/// Hermite data for sampled grid values via spectral differentiation.
inline HermiteField project_to_hermite(SpectralWorkspace& ws, std::span<const double> samples) {
  return hermite_from_spectrum(ws, ws.forward(samples));
}

struct VectorSpectrum {
  Spectrum x, y;
};

/// u_hat = (i ky, -i kx) w_hat / |k|^2 on 0 < |k| <= cutoff * kmax (max norm).
inline VectorSpectrum biot_savart_spectrum(const SpectralWorkspace& ws, const Spectrum& w,
                                           double cutoff) {
  check_cutoff(cutoff);
  VectorSpectrum u{Spectrum(w.size()), Spectrum(w.size())};
  const std::size_t ncx = ws.columns();
  for (std::size_t j = 0; j < static_cast<std::size_t>(ws.grid().ny); ++j)
    for (std::size_t i = 0; i < ncx; ++i) {
      const std::size_t k = j * ncx + i;
      const double k2 = ws.k_squared(i, j);
      if (k2 == 0.0 || !ws.passes(i, j, cutoff)) continue;
      const Complex psi = w[k] / k2;
      u.x[k] = ws.ddy(j) * psi;
      u.y[k] = -ws.ddx(i) * psi;
    }
  return u;
}

/// Divergence-free velocity from vorticity, with Hermite node data.
inline VectorHermite biot_savart(SpectralWorkspace& ws, std::span<const double> omega,
                                 double cutoff) {
  const auto u = biot_savart_spectrum(ws, ws.forward(omega), cutoff);
  return VectorHermite(hermite_from_spectrum(ws, u.x), hermite_from_spectrum(ws, u.y));
}

inline std::vector<double> curl2d(SpectralWorkspace& ws, std::span<const double> vx,
                                  std::span<const double> vy) {
  const auto sx = ws.forward(vx), sy = ws.forward(vy);
  Spectrum out(sx.size());
  const std::size_t ncx = ws.columns();
  for (std::size_t j = 0; j < static_cast<std::size_t>(ws.grid().ny); ++j)
    for (std::size_t i = 0; i < ncx; ++i) {
      const std::size_t k = j * ncx + i;
      out[k] = ws.ddx(i) * sy[k] - ws.ddy(j) * sx[k];
    }
  return ws.inverse(out);
}

inline std::vector<double> div2d(SpectralWorkspace& ws, std::span<const double> vx,
                                 std::span<const double> vy) {
  const auto sx = ws.forward(vx), sy = ws.forward(vy);
  Spectrum out(sx.size());
  const std::size_t ncx = ws.columns();
  for (std::size_t j = 0; j < static_cast<std::size_t>(ws.grid().ny); ++j)
    for (std::size_t i = 0; i < ncx; ++i) {
      const std::size_t k = j * ncx + i;
      out[k] = ws.ddx(i) * sx[k] + ws.ddy(j) * sy[k];
    }
  return ws.inverse(out);
}

inline std::pair<std::vector<double>, std::vector<double>> grad_spectral(
    SpectralWorkspace& ws, std::span<const double> f) {
  const auto s = ws.forward(f);
  return {ws.inverse(ws.map(s, [&](auto i, auto, Complex v) { return ws.ddx(i) * v; })),
          ws.inverse(ws.map(s, [&](auto, auto j, Complex v) { return ws.ddy(j) * v; }))};
}

inline std::vector<double> laplacian(SpectralWorkspace& ws, std::span<const double> f) {
  return ws.inverse(ws.map(ws.forward(f), [&](auto i, auto j, Complex v) {
    return -ws.k_squared(i, j) * v;
  }));
}

struct PoissonSolution {
  std::vector<double> solution;
  double removed_mean = 0.0;
};

/// Solves lap(a) = f for mean-zero a; the mean of f is projected out and reported.
inline PoissonSolution inv_laplace(SpectralWorkspace& ws, std::span<const double> f) {
  const auto s = ws.forward(f);
  PoissonSolution r;
  r.removed_mean = s[0].real();
  r.solution = ws.inverse(ws.map(s, [&](auto i, auto j, Complex v) {
    const double k2 = ws.k_squared(i, j);
    return k2 == 0.0 ? Complex{} : -v / k2;
  }));
  return r;
}

/// Removes the gradient part: v_hat - k (k . v_hat) / |k|^2, keeping the mean.
inline VectorSpectrum leray_project(const SpectralWorkspace& ws, const VectorSpectrum& v) {
  VectorSpectrum out{v.x, v.y};
  const std::size_t ncx = ws.columns();
  for (std::size_t j = 0; j < static_cast<std::size_t>(ws.grid().ny); ++j)
    for (std::size_t i = 0; i < ncx; ++i) {
      const std::size_t k = j * ncx + i;
      const double k2 = ws.k_squared(i, j);
      if (k2 == 0.0) continue;
      // Use the same (Nyquist-zeroed) derivative symbols as div2d.
      const Complex dx = ws.ddx(i), dy = ws.ddy(j);
      const double d2 = -(dx * dx + dy * dy).real();
      if (d2 == 0.0) continue;
      const Complex div = dx * v.x[k] + dy * v.y[k];
      out.x[k] = v.x[k] + dx * div / d2;
      out.y[k] = v.y[k] + dy * div / d2;
    }
  return out;
}

/// E(k) = 1/2 sum over k-1/2 < |k| <= k+1/2 of |v_hat_k|^2. The array covers
/// every shell present on the grid (up to ceil(sqrt(2) kmax)), so the sum over
/// all shells equals 1/2 <v, v>.
inline std::vector<double> shell_spectrum(SpectralWorkspace& ws, std::span<const double> vx,
                                          std::span<const double> vy) {
  const auto sx = ws.forward(vx), sy = ws.forward(vy);
  const int nx = ws.grid().nx, ny = ws.grid().ny;
  const int kmax_shell =
      static_cast<int>(std::ceil(std::hypot(nx / 2, ny / 2) - 0.5));
  std::vector<double> e(static_cast<std::size_t>(kmax_shell) + 1, 0.0);
  const std::size_t ncx = ws.columns();
  for (std::size_t j = 0; j < static_cast<std::size_t>(ny); ++j)
    for (std::size_t i = 0; i < ncx; ++i) {
      const std::size_t k = j * ncx + i;
      const double kn = std::hypot(ws.kx_index(i), ws.ky_index(j));
      const auto shell = static_cast<std::size_t>(std::max(0.0, std::ceil(kn - 0.5)));
      e[shell] += 0.5 * ws.multiplicity(i) * (std::norm(sx[k]) + std::norm(sy[k]));
    }
  return e;
}

/// Fraction of fluctuation energy (k != 0) with max(|kx|, |ky|) > frac * kmax.
inline double spectral_tail_fraction(SpectralWorkspace& ws, std::span<const double> f,
                                     double frac) {
  const auto s = ws.forward(f);
  double total = 0.0, tail = 0.0;
  const std::size_t ncx = ws.columns();
  for (std::size_t j = 0; j < static_cast<std::size_t>(ws.grid().ny); ++j)
    for (std::size_t i = 0; i < ncx; ++i) {
      if (i == 0 && j == 0) continue;
      const double e = ws.multiplicity(i) * std::norm(s[j * ncx + i]);
      total += e;
      if (!ws.passes(i, j, frac)) tail += e;
    }
  return total > 0.0 ? tail / total : 0.0;
}

}  // namespace cmm
