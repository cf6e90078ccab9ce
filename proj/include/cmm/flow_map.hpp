#pragma once

// Backward characteristic maps: RK4 one-step maps driven by time-extrapolated
// velocities, gradient-augmented composition updates, the submap stack and
// pullbacks of scalars and 2-forms through it.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cmm/extrapolation.hpp"
#include "cmm/geometry.hpp"
#include "cmm/hermite.hpp"
#include "cmm/parallel.hpp"
#include "cmm/spectral.hpp"

namespace cmm {

/// Time slots used by one RK4 step from t_next back to t_next - dt.
/// Slot 0 is t_next, slot 1 the midpoint, slot 2 is t_next - dt.
struct StageTimes {
  double t_next = 0.0;
  double dt = 0.0;

  double time(int slot) const {
    return slot == 0 ? t_next : slot == 1 ? t_next - 0.5 * dt : t_next - dt;
  }
};

inline constexpr std::array<double, 4> rk4_weights{1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0};
inline constexpr std::array<int, 4> rk4_slot{0, 1, 1, 2};

/// Backward RK4 trace of one point. `step` is the displacement of the foot
/// point relative to the start; `stage[j]` are the stage locations
/// X~_[t_next, s_j](p), reused by the source quadrature.
struct RkTrace {
  Vec2 step;
  std::array<Vec2, 4> stage;

  Vec2 foot() const { return stage[0] + step; }
};

/// Integrates dX/dr = u(X, r) backward from t_next to t_next - dt.
/// `u(slot, x)` returns the velocity at the slot's time.
template <class Velocity>
RkTrace rk4_backward(Vec2 p, double dt, Velocity&& u) {
  RkTrace tr;
  tr.stage[0] = p;
  const Vec2 k1 = u(0, p);
  tr.stage[1] = p - 0.5 * dt * k1;
  const Vec2 k2 = u(1, tr.stage[1]);
  tr.stage[2] = p - 0.5 * dt * k2;
  const Vec2 k3 = u(1, tr.stage[2]);
  tr.stage[3] = p - dt * k3;
  const Vec2 k4 = u(2, tr.stage[3]);
  tr.step = (-dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!is_finite(tr.step)) throw std::domain_error("non-finite velocity in RK4 step");
  return tr;
}

/// Velocity sampler for the three RK4 time slots, built from a snapshot history
/// by Lagrange extrapolation (linear in node data, so it commutes with
/// interpolation).
class StageVelocity {
 public:
  StageVelocity(const VelocityHistory& history, const StageTimes& st) {
    if (history.empty()) throw std::invalid_argument("one-step map needs a velocity snapshot");
    for (int s = 0; s < 3; ++s) fields_[s] = history.at(st.time(s));
  }
  Vec2 operator()(int slot, Vec2 p) const { return fields_[slot].eval(p); }
  const VectorHermite& field(int slot) const { return fields_[slot]; }

 private:
  std::array<VectorHermite, 3> fields_;
};

/// Adapts an analytic u(x, t) to the slot interface.
template <class Fn>
auto analytic_velocity(Fn&& fn, StageTimes st) {
  return [fn = std::forward<Fn>(fn), st](int slot, Vec2 p) { return fn(p, st.time(slot)); };
}

/// One-step map X~_[t_next, t_next - dt] at the query points, with stage points.
template <class Velocity>
std::vector<RkTrace> one_step_map(Velocity&& u, double dt, std::span<const Vec2> points) {
  if (!(dt > 0.0)) throw std::invalid_argument("one_step_map: dt must be positive");
  std::vector<RkTrace> out(points.size());
  parallel_for(points.size(), [&](std::size_t k) { out[k] = rk4_backward(points[k], dt, u); });
  return out;
}

/// Backward map X_[t_end, t_start](x) = x + disp(x) with periodic displacement.
struct CharMap {
  VectorHermite disp;
  double t_start = 0.0;
  double t_end = 0.0;

  static CharMap identity(const GridSpec& grid, double t) {
    return CharMap{VectorHermite(grid), t, t};
  }

  const GridSpec& grid() const { return disp.grid(); }

  Vec2 operator()(Vec2 p) const { return p + disp.eval(p); }

  std::pair<Vec2, Mat2> eval_jacobian(Vec2 p) const {
    auto [d, j] = disp.eval_jacobian(p);
    return {p + d, j + Mat2::identity()};
  }

  /// Jacobian from stored node derivatives.
  Mat2 node_jacobian(std::size_t k) const {
    return {1.0 + disp.x.dx()[k], disp.x.dy()[k], disp.y.dx()[k], 1.0 + disp.y.dy()[k]};
  }

  double max_det_deviation() const {
    double m = 0.0;
    for (std::size_t k = 0; k < grid().size(); ++k)
      m = std::max(m, std::abs(node_jacobian(k).det() - 1.0));
    return m;
  }

  friend bool operator==(const CharMap&, const CharMap&) = default;
};

namespace detail {

// Center plus four diagonal offsets (++, +-, -+, --).
inline constexpr std::array<std::array<double, 2>, 5> stencil_dirs{
    {{0.0, 0.0}, {1.0, 1.0}, {1.0, -1.0}, {-1.0, 1.0}, {-1.0, -1.0}}};

inline std::array<double, 4> assemble_node(const std::array<double, 5>& v, double ex,
                                           double ey) {
  return {v[0], (v[1] + v[2] - v[3] - v[4]) / (4.0 * ex),
          (v[1] - v[2] + v[3] - v[4]) / (4.0 * ey),
          (v[1] - v[2] - v[3] + v[4]) / (4.0 * ex * ey)};
}

}  // namespace detail

/// Offset of the derivative stencil as a fraction of the cell width.
inline constexpr double default_stencil_ratio = 1e-2;

/// X_[t+dt, s] = I_M[X_[t, s] o X~_[t+dt, t]]. Node values come from the
/// composition at the node; first and cross derivatives from a diagonal
/// stencil of the composition at offsets +-eps.
template <class Velocity>
CharMap advance_map(const CharMap& head, double dt, Velocity&& u,
                    double stencil_ratio = default_stencil_ratio) {
  if (!(dt > 0.0)) throw std::invalid_argument("advance_map: dt must be positive");
  const GridSpec& g = head.grid();
  const double ex = g.hx() * stencil_ratio, ey = g.hy() * stencil_ratio;
  CharMap next = CharMap::identity(g, head.t_end + dt);
  next.t_start = head.t_start;
  parallel_for(g.size(), [&](std::size_t k) {
    const Vec2 p = g.node(k);
    std::array<double, 5> vx{}, vy{};
    for (int s = 0; s < 5; ++s) {
      const Vec2 q{p.x + detail::stencil_dirs[s][0] * ex, p.y + detail::stencil_dirs[s][1] * ey};
      const RkTrace tr = rk4_backward(q, dt, u);
      const Vec2 d = tr.step + head.disp.eval(tr.foot());
      vx[s] = d.x;
      vy[s] = d.y;
    }
    const auto nx = detail::assemble_node(vx, ex, ey);
    const auto ny = detail::assemble_node(vy, ex, ey);
    next.disp.x.set_node(k, nx[0], nx[1], nx[2], nx[3]);
    next.disp.y.set_node(k, ny[0], ny[1], ny[2], ny[3]);
  });
  return next;
}

/// Position, Jacobian and its derivatives d/dx_m of a composed map.
struct MapDerivatives {
  Vec2 foot;
  Mat2 jac = Mat2::identity();
  std::array<Mat2, 2> djac{};
};

namespace detail {

// Chain rule through one more map applied at the current foot point.
inline void chain(const CharMap& m, MapDerivatives& d) {
  const auto hx = m.disp.x.eval_hessian(d.foot);
  const auto hy = m.disp.y.eval_hessian(d.foot);
  const Mat2 a{1.0 + hx.grad.x, hx.grad.y, hy.grad.x, 1.0 + hy.grad.y};
  const Mat2 h0{hx.xx, hx.xy, hy.xx, hy.xy};
  const Mat2 h1{hx.xy, hx.yy, hy.xy, hy.yy};
  const Mat2& j = d.jac;
  std::array<Mat2, 2> dj;
  for (int mm = 0; mm < 2; ++mm) {
    const Vec2 col = j.col(mm);
    dj[mm] = (col.x * h0 + col.y * h1) * j + a * d.djac[mm];
  }
  d.djac = dj;
  d.jac = a * j;
  d.foot = d.foot + Vec2{hx.value, hy.value};
}

}  // namespace detail

/// One frozen remapping interval: the submap and its accumulated source.
struct Submap {
  CharMap map;
  HermiteField source;  // empty for source-free problems
};

/// Frozen submaps X_[tau_1, 0], ..., X_[tau_i, tau_{i-1}] plus the live head
/// map X_[t, tau_i] and head source accumulation F_[t, tau_i].
class SubmapStack {
 public:
  SubmapStack() = default;
  SubmapStack(GridSpec map_grid, std::optional<GridSpec> source_grid, double t0 = 0.0)
      : head_(CharMap::identity(map_grid, t0)) {
    if (source_grid) head_source_ = HermiteField(*source_grid);
  }

  const CharMap& head() const { return head_; }
  const HermiteField& head_source() const { return head_source_; }
  bool has_source() const { return !head_source_.empty(); }
  const std::vector<Submap>& frozen() const { return frozen_; }
  std::size_t submap_count() const { return frozen_.size() + 1; }
  std::size_t remap_count() const { return frozen_.size(); }
  double time() const { return head_.t_end; }

  void set_head(CharMap map, HermiteField source) {
    if (map.t_start != head_.t_start)
      throw std::invalid_argument("head update must keep its start time");
    if (has_source() != !source.empty())
      throw std::invalid_argument("head source presence must not change");
    head_ = std::move(map);
    head_source_ = std::move(source);
  }

  /// Freezes head map and source at the current time and restarts both from
  /// identity / zero, so map and source share every remapping time.
  void freeze() {
    const double t = head_.t_end;
    frozen_.push_back({head_, head_source_});
    head_ = CharMap::identity(head_.grid(), t);
    if (has_source()) head_source_ = HermiteField(head_source_.grid());
  }

  /// Restores a previously frozen interval (used when loading saved state).
  void push_frozen(Submap s) {
    if (!frozen_.empty() && s.map.t_start != frozen_.back().map.t_end)
      throw std::invalid_argument("submaps must chain in time");
    if (has_source() != !s.source.empty())
      throw std::invalid_argument("frozen source presence must match the stack");
    frozen_.push_back(std::move(s));
  }

  /// Global backward map X_[t, 0](x): head first, then older submaps.
  Vec2 map(Vec2 x) const {
    Vec2 y = head_(x);
    for (auto it = frozen_.rbegin(); it != frozen_.rend(); ++it) y = it->map(y);
    return y;
  }

  /// X_[t, 0](x) together with F_[t, 0](x) from the source recursion.
  std::pair<Vec2, double> map_and_source(Vec2 x) const {
    if (!has_source()) return {map(x), 0.0};
    double f = head_source_.eval(x);
    Vec2 y = head_(x);
    for (auto it = frozen_.rbegin(); it != frozen_.rend(); ++it) {
      f += it->source.eval(y);
      y = it->map(y);
    }
    return {y, f};
  }

  /// X_[t, 0](x) and its Jacobian by the chain rule across submaps.
  std::pair<Vec2, Mat2> map_jacobian(Vec2 x) const {
    auto [y, jac] = head_.eval_jacobian(x);
    for (auto it = frozen_.rbegin(); it != frozen_.rend(); ++it) {
      auto [y2, a] = it->map.eval_jacobian(y);
      jac = a * jac;
      y = y2;
    }
    return {y, jac};
  }

  MapDerivatives map_derivatives(Vec2 x) const {
    MapDerivatives d;
    d.foot = x;
    detail::chain(head_, d);
    for (auto it = frozen_.rbegin(); it != frozen_.rend(); ++it) detail::chain(it->map, d);
    return d;
  }

 private:
  CharMap head_;
  HermiteField head_source_;
  std::vector<Submap> frozen_;
};

/// theta = theta0 o X_[t, 0] on the nodes of `grid`.
template <class Fn>
std::vector<double> pullback_scalar(const SubmapStack& stack, Fn&& theta0, const GridSpec& grid) {
  std::vector<double> out(grid.size());
  parallel_for(grid.size(), [&](std::size_t k) { out[k] = theta0(stack.map(grid.node(k))); });
  return out;
}

struct VectorGrid {
  std::vector<double> x, y;
};

/// B = adj(D X_[t, 0]) (B0 o X_[t, 0]) on the nodes of `grid`.
template <class Fn>
VectorGrid pullback_twoform(const SubmapStack& stack, Fn&& b0, const GridSpec& grid) {
  VectorGrid out{std::vector<double>(grid.size()), std::vector<double>(grid.size())};
  parallel_for(grid.size(), [&](std::size_t k) {
    const auto [y, jac] = stack.map_jacobian(grid.node(k));
    const Vec2 b = jac.adj() * b0(y);
    out.x[k] = b.x;
    out.y[k] = b.y;
  });
  return out;
}

struct RemapDecision {
  bool fire = false;
  double det_deviation = 0.0;
  double source_tail = 0.0;
};

/// Remapping monitor: fires when the head map's node Jacobian determinant
/// leaves [1 - delta_det, 1 + delta_det], or when the head source carries more
/// than `tail_threshold` of its fluctuation energy above 2/3 kmax of its grid.
inline RemapDecision check_remap(const CharMap& head, const HermiteField& source,
                                 double delta_det, double tail_threshold,
                                 SpectralWorkspace* source_ws = nullptr) {
  RemapDecision r;
  r.det_deviation = head.max_det_deviation();
  if (!source.empty() && source_ws != nullptr)
    r.source_tail = spectral_tail_fraction(*source_ws, source.values(), 2.0 / 3.0);
  r.fire = r.det_deviation > delta_det || r.source_tail > tail_threshold;
  return r;
}

}  // namespace cmm
