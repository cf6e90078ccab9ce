#pragma once

// Convergence sweeps for the swirl test and the OT self-convergence study.

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cmm/diagnostics.hpp"
#include "cmm/mhd.hpp"
#include "cmm/swirl.hpp"

namespace cmm {

struct EocRow {
  double scale = 0.0;  // h = 2 pi / N or dt
  int n = 0;
  double dt = 0.0;
  std::vector<double> errors;  // one per measured quantity
};

struct EocTable {
  std::vector<std::string> quantities;
  std::vector<EocRow> rows;

  /// Orders between consecutive rows for quantity q.
  std::vector<double> orders(std::size_t q) const {
    std::vector<double> e, s;
    for (const auto& r : rows) {
      e.push_back(r.errors.at(q));
      s.push_back(r.scale);
    }
    return eoc(e, s);
  }
};

using Progress = std::function<void(const std::string&)>;

/// Swirl, map-grid refinement at fixed dt; errors against the analytic solution.
inline EocTable swirl_space_sweep(const std::vector<int>& ns, const SwirlConfig& base,
                                  const Progress& progress = {},
                                  std::vector<SwirlResult>* keep = nullptr) {
  EocTable t{{"theta"}, {}};
  for (int n : ns) {
    SwirlConfig c = base;
    c.map_grid = n;
    auto r = run_swirl(c);
    t.rows.push_back({two_pi / n, n, c.dt, {r.linf_error}});
    if (progress) progress("swirl N=" + std::to_string(n) + " error " + std::to_string(r.linf_error));
    if (keep) keep->push_back(std::move(r));
  }
  return t;
}

/// Swirl, time-step refinement at fixed N. Column 0 is the analytic error,
/// column 1 the difference to the next finer step (the last row has none and
/// is dropped from that column's orders by the caller).
inline EocTable swirl_time_sweep(const std::vector<double>& dts, const SwirlConfig& base,
                                 const Progress& progress = {},
                                 const SwirlResult* finest_known = nullptr) {
  EocTable t{{"theta", "theta_successive"}, {}};
  std::vector<SwirlResult> runs;
  for (double dt : dts) {
    if (finest_known && dt == dts.back() && finest_known->steps > 0) {
      runs.push_back(*finest_known);
    } else {
      SwirlConfig c = base;
      c.dt = dt;
      runs.push_back(run_swirl(c));
    }
    if (progress)
      progress("swirl dt=1/" + std::to_string(static_cast<long>(std::lround(1.0 / dt))) +
               " error " + std::to_string(runs.back().linf_error));
  }
  for (std::size_t k = 0; k < dts.size(); ++k) {
    const double succ = k + 1 < dts.size() ? linf_error(runs[k].theta, runs[k + 1].theta) : 0.0;
    t.rows.push_back({dts[k], base.map_grid, dts[k], {runs[k].linf_error, succ}});
  }
  return t;
}

struct OtFields {
  std::vector<double> map_x, map_y, omega;
  VectorGrid b;
};

/// Global map X_[t,0], vorticity and magnetic field on the nodes of g.
inline OtFields ot_fields(const MhdSolver& s, const GridSpec& g) {
  OtFields f;
  f.map_x.resize(g.size());
  f.map_y.resize(g.size());
  parallel_for(g.size(), [&](std::size_t k) {
    const Vec2 y = s.stack().map(g.node(k));
    f.map_x[k] = y.x;
    f.map_y[k] = y.y;
  });
  f.omega = s.vorticity(g);
  f.b = s.magnetic_field(g);
  return f;
}

inline std::vector<double> ot_errors(const OtFields& a, const OtFields& ref) {
  return {std::max(linf_error(a.map_x, ref.map_x), linf_error(a.map_y, ref.map_y)),
          linf_error(a.omega, ref.omega), linf_error(a.b, ref.b)};
}

struct OtSweepConfig {
  int reference_map = 512;
  int log2_dt_reference = 10;
  int velocity_grid = 1024;
  int source_grid = 512;  // fixed for every run so all runs share one filtered source
  double t_end = 0.1;
  int eval_grid = 512;
  std::vector<int> space_maps{32, 64, 128, 256};
  std::vector<int> log2_dts{6, 7, 8, 9};
};

inline MhdConfig ot_sweep_run_config(const OtSweepConfig& sc, int map, double dt) {
  MhdConfig m;
  m.map_grid = map;
  m.source_grid = sc.source_grid;
  m.velocity_grid = sc.velocity_grid;
  m.dt = dt;
  m.t_end = sc.t_end;
  m.remap = false;
  return m;
}

inline OtFields run_ot_fields(const MhdConfig& m, const GridSpec& eval) {
  MhdSolver s(m);
  s.advance_to(m.t_end);
  return ot_fields(s, eval);
}

struct OtSweepResult {
  EocTable space, time;
};

inline OtSweepResult ot_self_convergence(const OtSweepConfig& sc, const Progress& progress = {}) {
  const GridSpec eval = GridSpec::square(sc.eval_grid);
  const double dt_ref = std::ldexp(1.0, -sc.log2_dt_reference);
  const OtFields ref = run_ot_fields(ot_sweep_run_config(sc, sc.reference_map, dt_ref), eval);
  if (progress) progress("OT reference done");
  OtSweepResult out;
  out.space.quantities = out.time.quantities = {"X", "omega", "B"};
  for (int n : sc.space_maps) {
    const auto f = run_ot_fields(ot_sweep_run_config(sc, n, dt_ref), eval);
    out.space.rows.push_back({two_pi / n, n, dt_ref, ot_errors(f, ref)});
    if (progress) progress("OT space N=" + std::to_string(n) + " done");
  }
  for (int l : sc.log2_dts) {
    const double dt = std::ldexp(1.0, -l);
    const auto f = run_ot_fields(ot_sweep_run_config(sc, sc.reference_map, dt), eval);
    out.time.rows.push_back({dt, sc.reference_map, dt, ot_errors(f, ref)});
    if (progress) progress("OT time dt=2^-" + std::to_string(l) + " done");
  }
  return out;
}

}  // namespace cmm
