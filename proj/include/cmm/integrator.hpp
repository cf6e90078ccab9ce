#pragma once

// Time stepping shared by the advection and MHD drivers: snapshot histories,
// the start-up corrector, one fused map/source step and the remapping policy.

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <utility>

#include "cmm/extrapolation.hpp"
#include "cmm/flow_map.hpp"
#include "cmm/source_accum.hpp"
#include "cmm/spectral.hpp"

namespace cmm {

/// Velocity (and optional source) sampled at one time instant.
struct Snapshot {
  VectorHermite velocity;
  HermiteField source;  // empty when the problem has no source term
};

/// Computes the snapshot at time t from the current map stack.
using SnapshotProvider = std::function<Snapshot(const SubmapStack&, double)>;

struct IntegratorOptions {
  int gamma = 3;
  bool remap = true;
  double delta_det = 0.05;
  double source_tail = 1e-2;
  /// Re-run the first step with the velocity interpolated between t0 and a
  /// predicted t1 snapshot instead of a constant-in-time velocity.
  bool startup_corrector = true;
  double stencil_ratio = default_stencil_ratio;
};

class CmmIntegrator {
 public:
  CmmIntegrator(GridSpec map_grid, std::optional<GridSpec> source_grid, IntegratorOptions opts,
                SnapshotProvider provider, double t0 = 0.0)
      : opts_(opts),
        provider_(std::move(provider)),
        stack_(map_grid, source_grid, t0),
        velocities_(static_cast<std::size_t>(opts.gamma)),
        sources_(static_cast<std::size_t>(opts.gamma)) {
    if (opts_.gamma < 1) throw std::invalid_argument("gamma must be >= 1");
    if (!provider_) throw std::invalid_argument("missing snapshot provider");
    if (source_grid) source_ws_ = std::make_unique<SpectralWorkspace>(*source_grid);
  }

  double time() const { return stack_.time(); }
  std::size_t steps() const { return steps_; }
  const SubmapStack& stack() const { return stack_; }
  const VelocityHistory& velocity_history() const { return velocities_; }
  const SourceHistory& source_history() const { return sources_; }
  const IntegratorOptions& options() const { return opts_; }
  const RemapDecision& last_remap_check() const { return last_check_; }

  /// Makes sure the newest snapshot corresponds to the current time.
  void ensure_snapshot() {
    if (!velocities_.empty() && velocities_.newest_time() >= time()) return;
    Snapshot s = provider_(stack_, time());
    if (stack_.has_source() && s.source.empty())
      throw std::logic_error("provider returned no source for a sourced problem");
    velocities_.push(time(), std::move(s.velocity));
    if (stack_.has_source()) sources_.push(time(), std::move(s.source));
  }

  const VectorHermite& current_velocity() {
    ensure_snapshot();
    return velocities_.field(velocities_.size() - 1);
  }

  void step(double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("time step must be positive");
    ensure_snapshot();
    const double t = time();
    if (opts_.startup_corrector && velocities_.size() == 1) {
      HeadUpdate predicted = advance(velocities_, sources_, dt);
      SubmapStack trial = stack_;
      trial.set_head(std::move(predicted.map), std::move(predicted.source));
      Snapshot s1 = provider_(trial, t + dt);
      VelocityHistory v2 = velocities_;
      SourceHistory s2 = sources_;
      v2.push(t + dt, std::move(s1.velocity));
      if (stack_.has_source()) s2.push(t + dt, std::move(s1.source));
      HeadUpdate corrected = advance(v2, s2, dt);
      stack_.set_head(std::move(corrected.map), std::move(corrected.source));
    } else {
      HeadUpdate next = advance(velocities_, sources_, dt);
      stack_.set_head(std::move(next.map), std::move(next.source));
    }
    ++steps_;
    if (opts_.remap) {
      last_check_ = check_remap(stack_.head(), stack_.head_source(), opts_.delta_det,
                                opts_.source_tail, source_ws_.get());
      if (last_check_.fire) stack_.freeze();
    }
  }

  void force_remap() { stack_.freeze(); }

  /// Replaces the solver state wholesale (loading a checkpoint).
  void restore(SubmapStack stack, VelocityHistory velocities, SourceHistory sources,
               std::size_t steps) {
    stack_ = std::move(stack);
    velocities_ = std::move(velocities);
    sources_ = std::move(sources);
    steps_ = steps;
  }

 private:
  HeadUpdate advance(const VelocityHistory& vel, const SourceHistory& src, double dt) const {
    const StageTimes st{time() + dt, dt};
    const StageVelocity u(vel, st);
    if (!stack_.has_source())
      return advance_head(stack_.head(), stack_.head_source(), dt, u, ZeroSource{},
                          opts_.stencil_ratio);
    const StageSource f(src, st);
    return advance_head(stack_.head(), stack_.head_source(), dt, u, f, opts_.stencil_ratio);
  }

  IntegratorOptions opts_;
  SnapshotProvider provider_;
  SubmapStack stack_;
  VelocityHistory velocities_;
  SourceHistory sources_;
  std::unique_ptr<SpectralWorkspace> source_ws_;
  RemapDecision last_check_;
  std::size_t steps_ = 0;
};

/// Largest node speed of a velocity field.
inline double max_speed(const VectorHermite& u) {
  double m = 0.0;
  const auto ux = u.x.values(), uy = u.y.values();
  for (std::size_t k = 0; k < ux.size(); ++k) m = std::max(m, std::hypot(ux[k], uy[k]));
  return m;
}

}  // namespace cmm
