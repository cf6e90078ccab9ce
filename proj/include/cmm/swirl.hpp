#pragma once

// Manufactured test: linear advection with a source by a time-periodic swirl,
//   u(x, y, t) = cos(t/4) (sin^2(x/2) sin y, -sin x sin^2(y/2)),
//   theta_ref  = exp(-(cos y - cos x)^2 / ((t - 1/2)^2 + eps)),
//   f          = d_t theta_ref + u . grad theta_ref.

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmm/diagnostics.hpp"
#include "cmm/integrator.hpp"
#include "cmm/source_accum.hpp"
#include "cmm/spectral.hpp"

namespace cmm {

struct SwirlProblem {
  double epsilon = 0.1;

  static Vec2 velocity(Vec2 p, double t) {
    const double c = std::cos(0.25 * t);
    const double sx = std::sin(0.5 * p.x), sy = std::sin(0.5 * p.y);
    return {c * sx * sx * std::sin(p.y), -c * std::sin(p.x) * sy * sy};
  }

  /// Hermite node data {f, fx, fy, fxy} of both velocity components.
  static std::array<std::array<double, 4>, 2> velocity_node_data(Vec2 p, double t) {
    const double c = std::cos(0.25 * t);
    const double sx = std::sin(0.5 * p.x), sy = std::sin(0.5 * p.y);
    const double sinx = std::sin(p.x), cosx = std::cos(p.x);
    const double siny = std::sin(p.y), cosy = std::cos(p.y);
    return {{{c * sx * sx * siny, c * 0.5 * sinx * siny, c * sx * sx * cosy, c * 0.5 * sinx * cosy},
             {-c * sinx * sy * sy, -c * cosx * sy * sy, -c * 0.5 * sinx * siny,
              -c * 0.5 * cosx * siny}}};
  }

  double reference(Vec2 p, double t) const {
    const double g = std::cos(p.y) - std::cos(p.x);
    const double d = (t - 0.5) * (t - 0.5) + epsilon;
    return std::exp(-g * g / d);
  }

  double source(Vec2 p, double t) const {
    const double g = std::cos(p.y) - std::cos(p.x);
    const double d = (t - 0.5) * (t - 0.5) + epsilon;
    const double theta = std::exp(-g * g / d);
    const double dtheta_dt = theta * g * g * 2.0 * (t - 0.5) / (d * d);
    const double common = -2.0 * g / d * theta;
    const double dtheta_dx = common * std::sin(p.x);
    const double dtheta_dy = -common * std::sin(p.y);
    const Vec2 u = velocity(p, t);
    return dtheta_dt + u.x * dtheta_dx + u.y * dtheta_dy;
  }
};

enum class SwirlSource { manufactured, zero };

struct SwirlConfig {
  int map_grid = 512;
  int source_grid = 0;  // 0: same as the map grid
  int velocity_grid = 512;
  int eval_grid = 512;
  double dt = 1.0 / 512.0;
  double t_end = 1.0;
  double epsilon = 0.1;
  int gamma = 3;
  bool remap = false;
  double delta_det = 0.05;
  double source_tail = 1e-2;
  double forced_remap_interval = 0.0;  // > 0: freeze submaps at multiples of it
  SwirlSource source = SwirlSource::manufactured;

  void validate() const {
    for (int n : {map_grid, velocity_grid, eval_grid})
      if (n < 4) throw std::invalid_argument("swirl grids need at least 4 nodes per axis");
    if (source_grid != 0 && source_grid < 4)
      throw std::invalid_argument("swirl source grid needs at least 4 nodes per axis");
    if (!(dt > 0.0)) throw std::invalid_argument("swirl dt must be positive");
    if (!(t_end >= 0.0)) throw std::invalid_argument("swirl t_end must be non-negative");
    if (!(epsilon > 0.0)) throw std::invalid_argument("swirl epsilon must be positive");
    if (gamma < 1) throw std::invalid_argument("gamma must be >= 1");
    if (!(delta_det > 0.0)) throw std::invalid_argument("delta_det must be positive");
  }
};

struct SwirlResult {
  GridSpec eval_grid;
  std::vector<double> theta;
  std::vector<double> reference;
  double linf_error = 0.0;
  double t = 0.0;
  std::size_t steps = 0;
  std::size_t remaps = 0;
};

/// Step size that lands exactly on t_target.
inline double clamp_step(double t, double t_target, double dt) {
  const double remaining = t_target - t;
  return remaining <= dt * (1.0 + 1e-9) ? remaining : dt;
}

inline bool reached(double t, double t_target) {
  return t_target - t <= 1e-12 * std::max(1.0, std::abs(t_target));
}

/// Snapshot provider sampling the analytic velocity and source; the source is
/// sampled on the velocity grid and differentiated spectrally.
inline SnapshotProvider swirl_snapshots(const SwirlProblem& problem, GridSpec velocity_grid,
                                        SwirlSource source) {
  auto ws = std::make_shared<SpectralWorkspace>(velocity_grid);
  return [problem, velocity_grid, source, ws](const SubmapStack&, double t) {
    Snapshot s;
    HermiteField ux(velocity_grid), uy(velocity_grid);
    std::vector<double> f(velocity_grid.size(), 0.0);
    parallel_for(velocity_grid.size(), [&](std::size_t k) {
      const Vec2 p = velocity_grid.node(k);
      const auto d = SwirlProblem::velocity_node_data(p, t);
      ux.set_node(k, d[0][0], d[0][1], d[0][2], d[0][3]);
      uy.set_node(k, d[1][0], d[1][1], d[1][2], d[1][3]);
      if (source == SwirlSource::manufactured) f[k] = problem.source(p, t);
    });
    s.velocity = VectorHermite(std::move(ux), std::move(uy));
    s.source = source == SwirlSource::manufactured ? project_to_hermite(*ws, f)
                                                   : HermiteField(velocity_grid);
    return s;
  };
}

inline SwirlResult run_swirl(const SwirlConfig& cfg,
                             const std::function<void(const CmmIntegrator&)>& on_step = {}) {
  cfg.validate();
  const SwirlProblem problem{cfg.epsilon};
  const GridSpec map_grid = GridSpec::square(cfg.map_grid);
  const GridSpec source_grid = GridSpec::square(cfg.source_grid ? cfg.source_grid : cfg.map_grid);
  const GridSpec velocity_grid = GridSpec::square(cfg.velocity_grid);

  IntegratorOptions opts;
  opts.gamma = cfg.gamma;
  opts.remap = cfg.remap;
  opts.delta_det = cfg.delta_det;
  opts.source_tail = cfg.source_tail;
  CmmIntegrator integ(map_grid, source_grid, opts,
                      swirl_snapshots(problem, velocity_grid, cfg.source));

  double next_forced = cfg.forced_remap_interval;
  while (!reached(integ.time(), cfg.t_end)) {
    integ.step(clamp_step(integ.time(), cfg.t_end, cfg.dt));
    if (cfg.forced_remap_interval > 0.0 && !reached(integ.time(), cfg.t_end) &&
        integ.time() >= next_forced * (1.0 - 1e-12)) {
      integ.force_remap();
      next_forced += cfg.forced_remap_interval;
    }
    if (on_step) on_step(integ);
  }

  SwirlResult r;
  r.eval_grid = GridSpec::square(cfg.eval_grid);
  r.t = integ.time();
  r.steps = integ.steps();
  r.remaps = integ.stack().remap_count();
  r.theta = vorticity_eval(integ.stack(), [&](Vec2 p) { return problem.reference(p, 0.0); },
                           r.eval_grid);
  r.reference.resize(r.eval_grid.size());
  for (std::size_t k = 0; k < r.eval_grid.size(); ++k)
    r.reference[k] = problem.reference(r.eval_grid.node(k), cfg.t_end);
  r.linf_error = linf_error(r.theta, r.reference);
  return r;
}

}  // namespace cmm
