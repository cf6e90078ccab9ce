#pragma once

// Conserved quantities, error norms, convergence orders and spectral fits.
// Inner products are domain averages, <f, g> = (2 pi)^-2 int f g dx, evaluated
// with the rectangle rule (spectrally accurate for periodic fields).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "cmm/flow_map.hpp"
#include "cmm/spectral.hpp"

namespace cmm {

inline double inner(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("inner: size mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s / static_cast<double>(a.size());
}

inline double inner(const VectorGrid& a, const VectorGrid& b) {
  return inner(a.x, b.x) + inner(a.y, b.y);
}

struct Energies {
  double kinetic = 0.0;
  double potential = 0.0;
  double total = 0.0;
};

inline Energies energies(const VectorGrid& u, const VectorGrid& b) {
  Energies e;
  e.kinetic = 0.5 * inner(u, u);
  e.potential = 0.5 * inner(b, b);
  e.total = e.kinetic + e.potential;
  return e;
}

inline double cross_helicity(const VectorGrid& u, const VectorGrid& b) { return inner(u, b); }

/// 1/2 <a, a> for the potential solving lap(a) = j, j = curl B.
inline double squared_potential(SpectralWorkspace& ws, const VectorGrid& b) {
  const auto j = curl2d(ws, b.x, b.y);
  const auto a = inv_laplace(ws, j).solution;
  return 0.5 * inner(a, a);
}

inline double linf_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("linf_error: shape mismatch");
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

inline double linf_error(const VectorGrid& a, const VectorGrid& b) {
  return std::max(linf_error(a.x, b.x), linf_error(a.y, b.y));
}

inline double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

inline double max_norm(const VectorGrid& v) {
  double m = 0.0;
  for (std::size_t k = 0; k < v.x.size(); ++k) m = std::max(m, std::hypot(v.x[k], v.y[k]));
  return m;
}

/// Experimental orders log(e_k / e_{k+1}) / log(s_k / s_{k+1}); with halving
/// scales this is log2 of the error ratio.
inline std::vector<double> eoc(std::span<const double> errors, std::span<const double> scales) {
  if (errors.size() < 2 || errors.size() != scales.size())
    throw std::invalid_argument("eoc: need at least two (error, scale) pairs");
  for (double e : errors)
    if (!(e > 0.0)) throw std::invalid_argument("eoc: errors must be positive");
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < errors.size(); ++k)
    out.push_back(std::log(errors[k] / errors[k + 1]) / std::log(scales[k] / scales[k + 1]));
  return out;
}

/// Least-squares slope of log E(k) against log k over k_lo..k_hi, skipping
/// empty shells.
inline double spectrum_fit(std::span<const double> spectrum, int k_lo, int k_hi) {
  if (k_lo < 1 || k_hi <= k_lo) throw std::invalid_argument("spectrum_fit: need 1 <= k_lo < k_hi");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int k = k_lo; k <= k_hi && k < static_cast<int>(spectrum.size()); ++k) {
    const double e = spectrum[static_cast<std::size_t>(k)];
    if (!(e > 0.0)) continue;
    const double x = std::log(static_cast<double>(k)), y = std::log(e);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) throw std::invalid_argument("spectrum_fit: fewer than two non-empty shells in range");
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// One row of the run time series.
struct TimeSeriesRecord {
  double t = 0.0;
  double dt = 0.0;
  double e_kin = 0.0;
  double e_pot = 0.0;
  double e_tot = 0.0;
  double h_c = 0.0;
  double a_sq = 0.0;
  double max_u = 0.0;
  double max_j = 0.0;
  std::size_t n_submaps = 1;

  friend bool operator==(const TimeSeriesRecord&, const TimeSeriesRecord&) = default;
};

}  // namespace cmm
