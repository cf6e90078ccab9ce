#pragma once

// Incompressible ideal MHD in vorticity form,
//   d_t omega + u . grad omega = B . grad j,   B = pull-back of B0 as a 2-form,
// with the Lorentz term carried by the source accumulation F.

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmm/diagnostics.hpp"
#include "cmm/integrator.hpp"
#include "cmm/source_accum.hpp"
#include "cmm/spectral.hpp"

namespace cmm {

struct MhdInitialData {
  std::function<double(Vec2)> omega;
  std::function<Vec2(Vec2)> b;
  std::function<Mat2(Vec2)> db;  // rows: gradients of bx and by

  /// omega0 = 2 (cos 2x + cos 2y), B0 = 2 (-sin 2y, 2 sin x).
  static MhdInitialData orszag_tang() {
    return {[](Vec2 p) { return 2.0 * (std::cos(2.0 * p.x) + std::cos(2.0 * p.y)); },
            [](Vec2 p) { return Vec2{-2.0 * std::sin(2.0 * p.y), 4.0 * std::sin(p.x)}; },
            [](Vec2 p) { return Mat2{0.0, -4.0 * std::cos(2.0 * p.y), 4.0 * std::cos(p.x), 0.0}; }};
  }

  /// Hydrodynamic data: B0 = 0.
  static MhdInitialData hydro(std::function<double(Vec2)> omega) {
    return {std::move(omega), [](Vec2) { return Vec2{}; }, [](Vec2) { return Mat2{}; }};
  }
};

struct MhdConfig {
  int map_grid = 512;
  int source_grid = 0;  // 0: same as the map grid
  int velocity_grid = 1024;
  double dt = 0.0;  // 0: CFL-controlled
  double cfl = 1.0;
  double t_end = 1.0;
  int gamma = 3;
  double delta_det = 0.05;
  double source_tail = 1e-2;
  double cutoff_map = 0.9;
  double cutoff_source = 0.1;
  bool remap = true;
  bool leray = true;
  double blowup_factor = 1e3;

  int source_grid_size() const { return source_grid ? source_grid : map_grid; }

  void validate() const {
    for (int n : {map_grid, source_grid_size(), velocity_grid}) {
      if (n < 4) throw std::invalid_argument("MHD grids need at least 4 nodes per axis");
      if (n % 2) throw std::invalid_argument("MHD grids must have an even size");
    }
    if (dt < 0.0 || !std::isfinite(dt)) throw std::invalid_argument("dt must be >= 0");
    if (!(cfl > 0.0)) throw std::invalid_argument("cfl must be positive");
    if (!(t_end >= 0.0)) throw std::invalid_argument("t_end must be non-negative");
    if (gamma < 1) throw std::invalid_argument("gamma must be >= 1");
    if (!(delta_det > 0.0)) throw std::invalid_argument("delta_det must be positive");
    if (!(source_tail > 0.0)) throw std::invalid_argument("source_tail must be positive");
    check_cutoff(cutoff_map);
    check_cutoff(cutoff_source);
    if (!(blowup_factor > 1.0)) throw std::invalid_argument("blowup_factor must exceed 1");
  }
};

/// Filtered, divergence-free magnetic field spectrum on grid A.
inline VectorSpectrum filter_magnetic(SpectralWorkspace& ws, const VectorGrid& b, double cutoff,
                                      bool leray) {
  VectorSpectrum s{lowpass_spectrum(ws, ws.forward(b.x), cutoff),
                   lowpass_spectrum(ws, ws.forward(b.y), cutoff)};
  return leray ? leray_project(ws, s) : s;
}

/// Lorentz source B . grad j written as div(j B), returned as a spectrum.
inline Spectrum lorentz_source_spectrum(SpectralWorkspace& ws, const VectorSpectrum& bh) {
  const auto bx = ws.inverse(bh.x), by = ws.inverse(bh.y);
  Spectrum jh(bh.x.size());
  const std::size_t ncx = ws.columns();
  for (std::size_t jj = 0; jj < static_cast<std::size_t>(ws.grid().ny); ++jj)
    for (std::size_t i = 0; i < ncx; ++i) {
      const std::size_t k = jj * ncx + i;
      jh[k] = ws.ddx(i) * bh.y[k] - ws.ddy(jj) * bh.x[k];
    }
  const auto j = ws.inverse(jh);
  std::vector<double> fx(j.size()), fy(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) {
    fx[k] = j[k] * bx[k];
    fy[k] = j[k] * by[k];
  }
  const auto sx = ws.forward(fx), sy = ws.forward(fy);
  Spectrum out(sx.size());
  for (std::size_t jj = 0; jj < static_cast<std::size_t>(ws.grid().ny); ++jj)
    for (std::size_t i = 0; i < ncx; ++i) {
      const std::size_t k = jj * ncx + i;
      out[k] = ws.ddx(i) * sx[k] + ws.ddy(jj) * sy[k];
    }
  return out;
}

/// The same term as curl(j (-By, Bx)); used as a cross-check.
inline std::vector<double> lorentz_source_curl_form(SpectralWorkspace& ws,
                                                    const VectorSpectrum& bh) {
  const auto bx = ws.inverse(bh.x), by = ws.inverse(bh.y);
  const auto j = curl2d(ws, bx, by);
  std::vector<double> vx(j.size()), vy(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) {
    vx[k] = -j[k] * by[k];
    vy[k] = j[k] * bx[k];
  }
  return curl2d(ws, vx, vy);
}

enum class ZoomField { omega, current, bx, by };

inline ZoomField parse_zoom_field(const std::string& s) {
  if (s == "omega") return ZoomField::omega;
  if (s == "j" || s == "current") return ZoomField::current;
  if (s == "bx") return ZoomField::bx;
  if (s == "by") return ZoomField::by;
  throw std::invalid_argument("unknown zoom field '" + s + "' (omega, j, bx, by)");
}

/// Node-aligned square window: n points per axis starting at center - half_width
/// with spacing 2 half_width / n.
inline GridSpec zoom_window(double half_width, int n) {
  if (!(half_width > 0.0) || n < 4) throw std::invalid_argument("zoom window needs half_width > 0, n >= 4");
  return GridSpec{n, n, 2.0 * half_width, 2.0 * half_width};
}

class MhdSolver {
 public:
  explicit MhdSolver(MhdConfig cfg, MhdInitialData init = MhdInitialData::orszag_tang())
      : cfg_((cfg.validate(), cfg)),
        init_(std::move(init)),
        map_grid_(GridSpec::square(cfg_.map_grid)),
        source_grid_(GridSpec::square(cfg_.source_grid_size())),
        vel_grid_(GridSpec::square(cfg_.velocity_grid)),
        ws_vel_(std::make_unique<SpectralWorkspace>(vel_grid_)),
        ws_src_(std::make_unique<SpectralWorkspace>(source_grid_)) {
    IntegratorOptions opts;
    opts.gamma = cfg_.gamma;
    opts.remap = cfg_.remap;
    opts.delta_det = cfg_.delta_det;
    opts.source_tail = cfg_.source_tail;
    integ_ = std::make_unique<CmmIntegrator>(
        map_grid_, source_grid_, opts,
        [this](const SubmapStack& s, double) { return Snapshot{compute_velocity(s), compute_source(s)}; });
  }

  MhdSolver(const MhdSolver&) = delete;
  MhdSolver& operator=(const MhdSolver&) = delete;

  const MhdConfig& config() const { return cfg_; }
  const MhdInitialData& initial_data() const { return init_; }
  double time() const { return integ_->time(); }
  std::size_t steps() const { return integ_->steps(); }
  const SubmapStack& stack() const { return integ_->stack(); }
  CmmIntegrator& integrator() { return *integ_; }
  const CmmIntegrator& integrator() const { return *integ_; }
  const GridSpec& velocity_grid() const { return vel_grid_; }
  const GridSpec& source_grid() const { return source_grid_; }

  /// u = BS[omega0 o X + F] on the velocity grid, truncated at cutoff_map.
  VectorHermite compute_velocity(const SubmapStack& s) {
    const auto omega = vorticity_eval(s, init_.omega, vel_grid_);
    return biot_savart(*ws_vel_, omega, cfg_.cutoff_map);
  }

  /// Lorentz source from the filtered, projected pulled-back field on grid A.
  HermiteField compute_source(const SubmapStack& s) {
    const auto b = pullback_twoform(s, init_.b, source_grid_);
    const auto bh = filter_magnetic(*ws_src_, b, cfg_.cutoff_source, cfg_.leray);
    return hermite_from_spectrum(*ws_src_, lorentz_source_spectrum(*ws_src_, bh));
  }

  /// Step size for the next step, clamped so the run lands on t_target.
  double next_dt(double t_target = std::numeric_limits<double>::infinity()) {
    double dt = cfg_.dt;
    if (dt == 0.0) {
      const double umax = max_speed(integ_->current_velocity());
      dt = umax > 0.0 ? cfg_.cfl * vel_grid_.hx() / umax : vel_grid_.hx();
    }
    return std::isfinite(t_target) ? clamp(time(), t_target, dt) : dt;
  }

  /// One step; returns the step size used.
  double step(double t_target = std::numeric_limits<double>::infinity()) {
    const double dt = next_dt(t_target);
    if (u0_max_ < 0.0) u0_max_ = max_speed(integ_->current_velocity());
    integ_->step(dt);
    guard();
    return dt;
  }

  void advance_to(double t_target, const std::function<void(MhdSolver&, double)>& on_step = {}) {
    while (t_target - time() > 1e-12 * std::max(1.0, std::abs(t_target))) {
      const double dt = step(t_target);
      if (on_step) on_step(*this, dt);
    }
  }

  std::vector<double> vorticity(const GridSpec& g) const {
    return vorticity_eval(stack(), init_.omega, g);
  }

  VectorGrid magnetic_field(const GridSpec& g) const { return pullback_twoform(stack(), init_.b, g); }

  /// Node values of the current velocity snapshot.
  VectorGrid velocity_values() {
    const auto& u = integ_->current_velocity();
    return {std::vector<double>(u.x.values().begin(), u.x.values().end()),
            std::vector<double>(u.y.values().begin(), u.y.values().end())};
  }

  TimeSeriesRecord measure(double dt_used = 0.0) {
    TimeSeriesRecord r;
    r.t = time();
    r.dt = dt_used;
    const auto u = velocity_values();
    const auto b = magnetic_field(vel_grid_);
    const auto e = energies(u, b);
    r.e_kin = e.kinetic;
    r.e_pot = e.potential;
    r.e_tot = e.total;
    r.h_c = cross_helicity(u, b);
    r.a_sq = squared_potential(*ws_vel_, b);
    r.max_u = max_norm(u);
    r.max_j = max_abs(curl2d(*ws_vel_, b.x, b.y));
    r.n_submaps = stack().submap_count();
    return r;
  }

  /// Shell spectra of u and B on the velocity grid.
  std::pair<std::vector<double>, std::vector<double>> spectra() {
    const auto u = velocity_values();
    const auto b = magnetic_field(vel_grid_);
    return {shell_spectrum(*ws_vel_, u.x, u.y), shell_spectrum(*ws_vel_, b.x, b.y)};
  }

  /// Field values on the zoom window around `center`, evaluated directly through
  /// the map stack; j uses the chain-rule second derivatives of the map.
  std::vector<double> zoom(Vec2 center, double half_width, int n, ZoomField field) const {
    const GridSpec w = zoom_window(half_width, n);
    const Vec2 origin{center.x - half_width, center.y - half_width};
    std::vector<double> out(w.size());
    parallel_for(w.size(), [&](std::size_t k) {
      const Vec2 p = origin + w.node(k);
      switch (field) {
        case ZoomField::omega: {
          const auto [y, f] = stack().map_and_source(p);
          out[k] = init_.omega(y) + f;
          break;
        }
        case ZoomField::bx:
        case ZoomField::by: {
          const auto [y, jac] = stack().map_jacobian(p);
          const Vec2 b = jac.adj() * init_.b(y);
          out[k] = field == ZoomField::bx ? b.x : b.y;
          break;
        }
        case ZoomField::current: out[k] = current_at(p); break;
      }
    });
    return out;
  }

  /// j = d_x By - d_y Bx at a point, B = adj(DX) B0(X).
  double current_at(Vec2 p) const {
    const MapDerivatives d = stack().map_derivatives(p);
    const Vec2 b0 = init_.b(d.foot);
    const Mat2 db0 = init_.db(d.foot);
    const Mat2 adj = d.jac.adj();
    std::array<Vec2, 2> grad_b;  // grad_b[l] = d_l B
    for (int l = 0; l < 2; ++l) {
      const Vec2 dfoot = d.jac.col(l);
      grad_b[l] = d.djac[l].adj() * b0 + adj * (db0 * dfoot);
    }
    return grad_b[0].y - grad_b[1].x;
  }

  void restore(SubmapStack s, VelocityHistory v, SourceHistory f, std::size_t steps) {
    integ_->restore(std::move(s), std::move(v), std::move(f), steps);
    u0_max_ = -1.0;
  }

 private:
  static double clamp(double t, double t_target, double dt) {
    const double remaining = t_target - t;
    return remaining <= dt * (1.0 + 1e-9) ? remaining : dt;
  }

  void guard() {
    const double umax = max_speed(integ_->current_velocity());
    if (!std::isfinite(umax) || umax > cfg_.blowup_factor * std::max(u0_max_, 1.0))
      throw std::runtime_error("MHD run blew up at t = " + std::to_string(time()) +
                               " (max |u| = " + std::to_string(umax) + ")");
  }

  MhdConfig cfg_;
  MhdInitialData init_;
  GridSpec map_grid_, source_grid_, vel_grid_;
  std::unique_ptr<SpectralWorkspace> ws_vel_, ws_src_;
  std::unique_ptr<CmmIntegrator> integ_;
  double u0_max_ = -1.0;
};

}  // namespace cmm
