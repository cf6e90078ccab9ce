#pragma once

// Duhamel accumulation of a source term along characteristics:
//   F_[t+dt, tau] = I_A[ F_[t, tau] o X~_[t+dt, t] + dt sum_j a_j f~(X~_[t+dt, s_j], s_j) ]
// with the RK4 stage points of the one-step map as quadrature nodes.

#include <array>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cmm/extrapolation.hpp"
#include "cmm/flow_map.hpp"
#include "cmm/hermite.hpp"
#include "cmm/parallel.hpp"

namespace cmm {

/// Source sampler for the three RK4 time slots from a snapshot history.
class StageSource {
 public:
  StageSource(const SourceHistory& history, const StageTimes& st) {
    if (history.empty()) throw std::invalid_argument("source quadrature needs a snapshot");
    for (int s = 0; s < 3; ++s) fields_[s] = history.at(st.time(s));
  }
  double operator()(int slot, Vec2 p) const { return fields_[slot].eval(p); }

 private:
  std::array<HermiteField, 3> fields_;
};

template <class Fn>
auto analytic_source(Fn&& fn, StageTimes st) {
  return [fn = std::forward<Fn>(fn), st](int slot, Vec2 p) { return fn(p, st.time(slot)); };
}

struct ZeroSource {
  double operator()(int, Vec2) const { return 0.0; }
};

/// dt * sum_j a_j f~(stage_j, s_j) along one RK4 trace.
template <class Source>
double source_quadrature(const RkTrace& tr, double dt, Source&& f) {
  double s = 0.0;
  for (int j = 0; j < 4; ++j) s += rk4_weights[j] * f(rk4_slot[j], tr.stage[j]);
  return dt * s;
}

/// Semi-Lagrangian update of the accumulated source on its own grid.
template <class Velocity, class Source>
HermiteField advance_source(const HermiteField& accum, double dt, Velocity&& u, Source&& f,
                            double stencil_ratio = default_stencil_ratio) {
  if (accum.empty()) throw std::invalid_argument("advance_source: empty accumulation field");
  if (!(dt > 0.0)) throw std::invalid_argument("advance_source: dt must be positive");
  const GridSpec& g = accum.grid();
  const double ex = g.hx() * stencil_ratio, ey = g.hy() * stencil_ratio;
  HermiteField next(g);
  parallel_for(g.size(), [&](std::size_t k) {
    const Vec2 p = g.node(k);
    std::array<double, 5> v{};
    for (int s = 0; s < 5; ++s) {
      const Vec2 q{p.x + detail::stencil_dirs[s][0] * ex, p.y + detail::stencil_dirs[s][1] * ey};
      const RkTrace tr = rk4_backward(q, dt, u);
      v[s] = accum.eval(tr.foot()) + source_quadrature(tr, dt, f);
    }
    const auto n = detail::assemble_node(v, ex, ey);
    next.set_node(k, n[0], n[1], n[2], n[3]);
  });
  return next;
}

struct HeadUpdate {
  CharMap map;
  HermiteField source;
};

/// Advances the head map and head source by one step. When both live on the
/// same grid the RK4 traces are computed once and shared.
template <class Velocity, class Source>
HeadUpdate advance_head(const CharMap& head, const HermiteField& accum, double dt, Velocity&& u,
                        Source&& f, double stencil_ratio = default_stencil_ratio) {
  if (accum.empty()) return {advance_map(head, dt, u, stencil_ratio), HermiteField{}};
  if (!(accum.grid() == head.grid()))
    return {advance_map(head, dt, u, stencil_ratio),
            advance_source(accum, dt, u, f, stencil_ratio)};
  if (!(dt > 0.0)) throw std::invalid_argument("advance_head: dt must be positive");

  const GridSpec& g = head.grid();
  const double ex = g.hx() * stencil_ratio, ey = g.hy() * stencil_ratio;
  HeadUpdate out{CharMap::identity(g, head.t_end + dt), HermiteField(g)};
  out.map.t_start = head.t_start;
  parallel_for(g.size(), [&](std::size_t k) {
    const Vec2 p = g.node(k);
    std::array<double, 5> vx{}, vy{}, vf{};
    for (int s = 0; s < 5; ++s) {
      const Vec2 q{p.x + detail::stencil_dirs[s][0] * ex, p.y + detail::stencil_dirs[s][1] * ey};
      const RkTrace tr = rk4_backward(q, dt, u);
      const Vec2 foot = tr.foot();
      const Vec2 d = tr.step + head.disp.eval(foot);
      vx[s] = d.x;
      vy[s] = d.y;
      vf[s] = accum.eval(foot) + source_quadrature(tr, dt, f);
    }
    const auto nx = detail::assemble_node(vx, ex, ey);
    const auto ny = detail::assemble_node(vy, ex, ey);
    const auto nf = detail::assemble_node(vf, ex, ey);
    out.map.disp.x.set_node(k, nx[0], nx[1], nx[2], nx[3]);
    out.map.disp.y.set_node(k, ny[0], ny[1], ny[2], ny[3]);
    out.source.set_node(k, nf[0], nf[1], nf[2], nf[3]);
  });
  return out;
}

/// F_[t, 0] at the given points via the cross-submap recursion.
inline std::vector<double> total_source_eval(const SubmapStack& stack,
                                             std::span<const Vec2> points) {
  std::vector<double> out(points.size(), 0.0);
  parallel_for(points.size(), [&](std::size_t k) { out[k] = stack.map_and_source(points[k]).second; });
  return out;
}

/// omega = omega0 o X_[t, 0] + F_[t, 0] on the nodes of `grid`.
template <class Fn>
std::vector<double> vorticity_eval(const SubmapStack& stack, Fn&& omega0, const GridSpec& grid) {
  std::vector<double> out(grid.size());
  parallel_for(grid.size(), [&](std::size_t k) {
    const auto [y, f] = stack.map_and_source(grid.node(k));
    out[k] = omega0(y) + f;
  });
  return out;
}

}  // namespace cmm
