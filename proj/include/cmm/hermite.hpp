#pragma once

// Gradient-augmented periodic grids with bicubic Hermite interpolation.
//
// Each node stores f, df/dx, df/dy and d2f/dxdy. Inside a cell the interpolant
// is the tensor product of cubic Hermite polynomials, which makes it C1 across
// cell faces and exact for bicubic data.

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cmm/geometry.hpp"
#include "cmm/parallel.hpp"

namespace cmm {

namespace detail {

struct Cell {
  std::size_t i00, i10, i01, i11;  // flat indices of the four corners
  double u, v;                     // local coordinates in [0, 1)
};

// Wraps one coordinate into a cell index and local offset. Values within
// 1e-11 cell widths of a node are snapped onto it so nodal evaluation returns
// the stored data exactly.
inline void locate_axis(double x, double length, int n, int& i, double& u) {
  double s = (x - length * std::floor(x / length)) * (n / length);
  const double r = std::nearbyint(s);
  if (std::abs(s - r) < 1e-11) s = r;
  double fl = std::floor(s);
  i = static_cast<int>(fl);
  u = s - fl;
  if (i >= n) i -= n;
  if (i < 0) i += n;
}

inline Cell locate(const GridSpec& g, Vec2 p) {
  if (!is_finite(p)) throw std::domain_error("non-finite evaluation point");
  int i, j;
  Cell c{};
  locate_axis(p.x, g.lx, g.nx, i, c.u);
  locate_axis(p.y, g.ly, g.ny, j, c.v);
  const int ip = i + 1 == g.nx ? 0 : i + 1;
  const int jp = j + 1 == g.ny ? 0 : j + 1;
  c.i00 = g.index(i, j);
  c.i10 = g.index(ip, j);
  c.i01 = g.index(i, jp);
  c.i11 = g.index(ip, jp);
  return c;
}

// Weights multiplying (f_0, f_1, f'_0, f'_1) along one axis.
using Weights = std::array<double, 4>;

inline Weights weights(double u, double h) {
  const double u2 = u * u, u3 = u2 * u;
  return {2.0 * u3 - 3.0 * u2 + 1.0, -2.0 * u3 + 3.0 * u2, h * (u3 - 2.0 * u2 + u),
          h * (u3 - u2)};
}

inline Weights weights_d1(double u, double h) {
  const double u2 = u * u;
  return {(6.0 * u2 - 6.0 * u) / h, (-6.0 * u2 + 6.0 * u) / h, 3.0 * u2 - 4.0 * u + 1.0,
          3.0 * u2 - 2.0 * u};
}

inline Weights weights_d2(double u, double h) {
  return {(12.0 * u - 6.0) / (h * h), (-12.0 * u + 6.0) / (h * h), (6.0 * u - 4.0) / h,
          (6.0 * u - 2.0) / h};
}

// Node data of one cell, corners ordered 00, 10, 01, 11.
struct Patch {
  double f[4], fx[4], fy[4], fxy[4];
};

inline double contract(const Patch& p, const Weights& wx, const Weights& wy) {
  double s = 0.0;
  for (int q = 0; q < 2; ++q) {
    for (int r = 0; r < 2; ++r) {
      const int k = r + 2 * q;
      s += wx[r] * wy[q] * p.f[k] + wx[2 + r] * wy[q] * p.fx[k] +
           wx[r] * wy[2 + q] * p.fy[k] + wx[2 + r] * wy[2 + q] * p.fxy[k];
    }
  }
  return s;
}

}  // namespace detail

struct ValueGrad {
  double value = 0.0;
  Vec2 grad;
};

struct ValueHessian {
  double value = 0.0;
  Vec2 grad;
  double xx = 0.0, xy = 0.0, yy = 0.0;
};

/// Scalar field on a periodic gradient-augmented grid (structure of arrays).
class HermiteField {
 public:
  HermiteField() = default;
  explicit HermiteField(GridSpec grid) : grid_(grid) {
    grid_.validate();
    const auto n = grid_.size();
    f_.assign(n, 0.0);
    fx_.assign(n, 0.0);
    fy_.assign(n, 0.0);
    fxy_.assign(n, 0.0);
  }

  const GridSpec& grid() const { return grid_; }
  bool empty() const { return f_.empty(); }

  std::span<double> values() { return f_; }
  std::span<double> dx() { return fx_; }
  std::span<double> dy() { return fy_; }
  std::span<double> dxy() { return fxy_; }
  std::span<const double> values() const { return f_; }
  std::span<const double> dx() const { return fx_; }
  std::span<const double> dy() const { return fy_; }
  std::span<const double> dxy() const { return fxy_; }

  void set_node(std::size_t k, double f, double fx, double fy, double fxy) {
    f_[k] = f;
    fx_[k] = fx;
    fy_[k] = fy;
    fxy_[k] = fxy;
  }

  double eval(Vec2 p) const {
    const auto c = detail::locate(grid_, p);
    const auto patch = gather(c);
    return detail::contract(patch, detail::weights(c.u, grid_.hx()),
                            detail::weights(c.v, grid_.hy()));
  }

  /// Value and exact analytic gradient of the interpolant.
  ValueGrad eval_grad(Vec2 p) const {
    const auto c = detail::locate(grid_, p);
    const auto patch = gather(c);
    const auto wx = detail::weights(c.u, grid_.hx());
    const auto wy = detail::weights(c.v, grid_.hy());
    const auto dwx = detail::weights_d1(c.u, grid_.hx());
    const auto dwy = detail::weights_d1(c.v, grid_.hy());
    return {detail::contract(patch, wx, wy),
            {detail::contract(patch, dwx, wy), detail::contract(patch, wx, dwy)}};
  }

  /// Value, gradient and in-cell Hessian. Second derivatives are one-sided at
  /// cell faces since the interpolant is only C1.
  ValueHessian eval_hessian(Vec2 p) const {
    const auto c = detail::locate(grid_, p);
    const auto patch = gather(c);
    const double hx = grid_.hx(), hy = grid_.hy();
    const auto wx = detail::weights(c.u, hx), wy = detail::weights(c.v, hy);
    const auto dwx = detail::weights_d1(c.u, hx), dwy = detail::weights_d1(c.v, hy);
    const auto ddwx = detail::weights_d2(c.u, hx), ddwy = detail::weights_d2(c.v, hy);
    ValueHessian r;
    r.value = detail::contract(patch, wx, wy);
    r.grad = {detail::contract(patch, dwx, wy), detail::contract(patch, wx, dwy)};
    r.xx = detail::contract(patch, ddwx, wy);
    r.xy = detail::contract(patch, dwx, dwy);
    r.yy = detail::contract(patch, wx, ddwy);
    return r;
  }

  /// this += w * other (node data, same grid).
  void axpy(double w, const HermiteField& other) {
    if (!(other.grid_ == grid_)) throw std::invalid_argument("axpy: grid mismatch");
    for (std::size_t k = 0; k < f_.size(); ++k) {
      f_[k] += w * other.f_[k];
      fx_[k] += w * other.fx_[k];
      fy_[k] += w * other.fy_[k];
      fxy_[k] += w * other.fxy_[k];
    }
  }

  void scale(double w) {
    for (std::size_t k = 0; k < f_.size(); ++k) {
      f_[k] *= w;
      fx_[k] *= w;
      fy_[k] *= w;
      fxy_[k] *= w;
    }
  }

  friend bool operator==(const HermiteField&, const HermiteField&) = default;

 private:
  friend class VectorHermite;

  detail::Patch gather(const detail::Cell& c) const {
    detail::Patch p;
    const std::size_t idx[4] = {c.i00, c.i10, c.i01, c.i11};
    for (int k = 0; k < 4; ++k) {
      p.f[k] = f_[idx[k]];
      p.fx[k] = fx_[idx[k]];
      p.fy[k] = fy_[idx[k]];
      p.fxy[k] = fxy_[idx[k]];
    }
    return p;
  }

  GridSpec grid_{};
  std::vector<double> f_, fx_, fy_, fxy_;
};

/// Two Hermite components on a common grid; evaluation shares the cell lookup.
class VectorHermite {
 public:
  VectorHermite() = default;
  explicit VectorHermite(GridSpec grid) : x(grid), y(grid) {}
  VectorHermite(HermiteField cx, HermiteField cy) : x(std::move(cx)), y(std::move(cy)) {
    if (!(x.grid() == y.grid())) throw std::invalid_argument("component grid mismatch");
  }

  const GridSpec& grid() const { return x.grid(); }

  Vec2 eval(Vec2 p) const {
    const auto c = detail::locate(x.grid(), p);
    const auto wx = detail::weights(c.u, x.grid().hx());
    const auto wy = detail::weights(c.v, x.grid().hy());
    return {detail::contract(x.gather(c), wx, wy), detail::contract(y.gather(c), wx, wy)};
  }

  /// Value and Jacobian [[d vx/dx, d vx/dy], [d vy/dx, d vy/dy]].
  std::pair<Vec2, Mat2> eval_jacobian(Vec2 p) const {
    const auto c = detail::locate(x.grid(), p);
    const double hx = x.grid().hx(), hy = x.grid().hy();
    const auto wx = detail::weights(c.u, hx), wy = detail::weights(c.v, hy);
    const auto dwx = detail::weights_d1(c.u, hx), dwy = detail::weights_d1(c.v, hy);
    const auto px = x.gather(c), py = y.gather(c);
    return {{detail::contract(px, wx, wy), detail::contract(py, wx, wy)},
            {detail::contract(px, dwx, wy), detail::contract(px, wx, dwy),
             detail::contract(py, dwx, wy), detail::contract(py, wx, dwy)}};
  }

  void axpy(double w, const VectorHermite& o) {
    x.axpy(w, o.x);
    y.axpy(w, o.y);
  }
  void scale(double w) {
    x.scale(w);
    y.scale(w);
  }

  friend bool operator==(const VectorHermite&, const VectorHermite&) = default;

  HermiteField x, y;
};

/// Node data of an analytically known function: returns {f, fx, fy, fxy}.
template <class Fn>
HermiteField project_to_hermite(const GridSpec& grid, Fn&& sample) {
  HermiteField h(grid);
  parallel_for(grid.size(), [&](std::size_t k) {
    const std::array<double, 4> d = sample(grid.node(k));
    h.set_node(k, d[0], d[1], d[2], d[3]);
  });
  return h;
}

/// Linear combination sum_k w[k] * fields[k]; all fields share one grid.
template <class Field>
Field linear_combination(std::span<const Field* const> fields, std::span<const double> w) {
  if (fields.empty() || fields.size() != w.size())
    throw std::invalid_argument("linear_combination: size mismatch");
  Field out = *fields[0];
  out.scale(w[0]);
  for (std::size_t k = 1; k < fields.size(); ++k) out.axpy(w[k], *fields[k]);
  return out;
}

}  // namespace cmm
