// Command-line front end: advect, mhd, zoom, convergence, spectra.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "cmm/convergence.hpp"
#include "cmm/io.hpp"

namespace fs = std::filesystem;
using namespace cmm;

namespace {

struct Overrides {
  std::string config;
  int map_grid = 0, source_grid = -1, velocity_grid = 0;
  double dt = -1.0, t_end = -1.0;
  std::string output;
};

void add_overrides(CLI::App* sub, Overrides& o) {
  sub->add_option("-c,--config", o.config, "key=value config file");
  sub->add_option("--map-grid", o.map_grid, "map grid size N_M");
  sub->add_option("--source-grid", o.source_grid, "source grid size N_A (0: same as map)");
  sub->add_option("--velocity-grid", o.velocity_grid, "velocity grid size");
  sub->add_option("--dt", o.dt, "time step (0: CFL, MHD only)");
  sub->add_option("--t-end", o.t_end, "final time");
  sub->add_option("-o,--output", o.output, "output directory");
}

RunConfig load(const Overrides& o, const std::string& problem) {
  RunConfig c = o.config.empty() ? RunConfig::defaults(problem) : parse_config(o.config, problem);
  std::string extra;
  if (o.map_grid) extra += "map_grid=" + std::to_string(o.map_grid) + "\n";
  if (o.source_grid >= 0) extra += "source_grid=" + std::to_string(o.source_grid) + "\n";
  if (o.velocity_grid) extra += "velocity_grid=" + std::to_string(o.velocity_grid) + "\n";
  if (o.dt >= 0) extra += "dt=" + detail::fmt(o.dt) + "\n";
  if (o.t_end >= 0) extra += "t_end=" + detail::fmt(o.t_end) + "\n";
  if (!o.output.empty()) extra += "output_dir=" + o.output + "\n";
  if (!extra.empty()) {
    // Re-parse so overrides get the same validation as file values.
    std::string merged;
    std::istringstream base(serialize(c));
    for (std::string line; std::getline(base, line);) {
      const std::string key = line.substr(0, line.find('='));
      if (extra.find("\n" + key + "=") == std::string::npos && extra.rfind(key + "=", 0) != 0)
        merged += line + "\n";
    }
    c = parse_config_text(merged + extra, "<command line>");
  }
  return c;
}

fs::path prepare_output(const RunConfig& c) {
  const fs::path dir = output_directory(c.output_dir);
  fs::create_directories(dir);
  std::ofstream(dir / "config.cfg") << serialize(c);
  return dir;
}

int run_advect(const Overrides& o) {
  const RunConfig c = load(o, "advect-swirl");
  const fs::path dir = prepare_output(c);
  SwirlConfig sc = c.swirl();
  std::size_t stride = static_cast<std::size_t>(c.snapshot_stride);
  const GridSpec eval = GridSpec::square(c.eval_grid);
  const SwirlProblem problem{c.epsilon};
  auto r = run_swirl(sc, [&](const CmmIntegrator& integ) {
    if (stride && integ.steps() % stride == 0) {
      auto theta = vorticity_eval(integ.stack(), [&](Vec2 p) { return problem.reference(p, 0.0); }, eval);
      char name[64];
      std::snprintf(name, sizeof name, "theta_%06zu.snap", integ.steps());
      write_snapshot(dir / name, make_snapshot(c.problem, "theta", integ.time(), eval, std::move(theta)));
    }
  });
  write_snapshot(dir / "theta_final.snap", make_snapshot(c.problem, "theta", r.t, r.eval_grid, r.theta));
  write_snapshot(dir / "theta_reference.snap",
                 make_snapshot(c.problem, "theta_ref", r.t, r.eval_grid, r.reference));
  std::ofstream(dir / "summary.csv") << "t[time],steps[count],remaps[count],linf_error[theta]\n"
                                     << detail::fmt(r.t) << ',' << r.steps << ',' << r.remaps << ','
                                     << detail::fmt(r.linf_error) << "\n";
  std::printf("t=%.6g steps=%zu remaps=%zu linf_error=%.6e\n", r.t, r.steps, r.remaps, r.linf_error);
  return 0;
}

void write_mhd_snapshots(const fs::path& dir, const std::string& tag, MhdSolver& s) {
  const GridSpec& g = s.velocity_grid();
  const auto b = s.magnetic_field(g);
  SpectralWorkspace ws(g);
  write_snapshot(dir / ("omega_" + tag + ".snap"), make_snapshot("mhd-ot", "omega", s.time(), g, s.vorticity(g)));
  write_snapshot(dir / ("j_" + tag + ".snap"), make_snapshot("mhd-ot", "j", s.time(), g, curl2d(ws, b.x, b.y)));
  write_snapshot(dir / ("B_" + tag + ".snap"), make_snapshot("mhd-ot", "B", s.time(), g, b));
  write_snapshot(dir / ("u_" + tag + ".snap"), make_snapshot("mhd-ot", "u", s.time(), g, s.velocity_values()));
}

int run_mhd(const Overrides& o) {
  const RunConfig c = load(o, "mhd-ot");
  const fs::path dir = prepare_output(c);
  MhdSolver s(c.mhd());
  const fs::path ts = dir / "timeseries.csv";
  fs::remove(ts);
  append_timeseries(ts, s.measure());
  double next_diag = c.diag_interval;
  const std::size_t stride = static_cast<std::size_t>(c.snapshot_stride);
  s.advance_to(c.t_end, [&](MhdSolver& solver, double dt) {
    if (solver.time() >= next_diag - 1e-12 || c.diag_interval == 0.0) {
      append_timeseries(ts, solver.measure(dt));
      while (next_diag <= solver.time() + 1e-12 && c.diag_interval > 0.0) next_diag += c.diag_interval;
    }
    if (stride && solver.steps() % stride == 0) {
      char tag[32];
      std::snprintf(tag, sizeof tag, "%06zu", solver.steps());
      write_mhd_snapshots(dir, tag, solver);
    }
  });
  write_mhd_snapshots(dir, "final", s);
  save_state(dir / "state.bin", c, s);
  const auto r = s.measure();
  std::printf("t=%.6g steps=%zu submaps=%zu E_tot=%.10g H_c=%.10g A_sq=%.10g\n", r.t, s.steps(),
              r.n_submaps, r.e_tot, r.h_c, r.a_sq);
  return 0;
}

int run_zoom(const std::string& state, double cx, double cy, double half_width, int levels,
             double factor, int n, const std::string& field, const std::string& output) {
  RunConfig c = read_state_config(state);
  if (!output.empty()) c.output_dir = output;
  const fs::path dir = output_directory(c.output_dir);
  fs::create_directories(dir);
  MhdSolver s(c.mhd());
  load_state(state, s);
  const ZoomField zf = parse_zoom_field(field);
  double hw = half_width;
  for (int level = 0; level < levels; ++level, hw /= factor) {
    const GridSpec w = zoom_window(hw, n);
    auto patch = s.zoom({cx, cy}, hw, n, zf);
    auto snap = make_snapshot(c.problem, field, s.time(), w, std::move(patch));
    const fs::path p = dir / ("zoom_" + field + "_" + std::to_string(level) + ".snap");
    write_snapshot(p, snap);
    std::printf("level %d half_width %.6g -> %s\n", level, hw, p.string().c_str());
  }
  return 0;
}

void print_table(const EocTable& t, std::size_t q_count) {
  std::printf("%12s", "scale");
  for (std::size_t q = 0; q < q_count; ++q) std::printf(" %14s %7s", t.quantities[q].c_str(), "eoc");
  std::printf("\n");
  std::vector<std::vector<double>> orders;
  for (std::size_t q = 0; q < q_count; ++q) {
    std::vector<double> e, sc;
    for (const auto& r : t.rows)
      if (r.errors[q] > 0.0) {
        e.push_back(r.errors[q]);
        sc.push_back(r.scale);
      }
    orders.push_back(e.size() >= 2 ? eoc(e, sc) : std::vector<double>{});
  }
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    std::printf("%12.5e", t.rows[k].scale);
    for (std::size_t q = 0; q < q_count; ++q) {
      std::printf(" %14.6e", t.rows[k].errors[q]);
      if (k > 0 && k - 1 < orders[q].size()) std::printf(" %7.3f", orders[q][k - 1]);
      else std::printf(" %7s", "-");
    }
    std::printf("\n");
  }
}

int run_convergence(const std::string& problem, const std::string& kind, int n_max) {
  auto progress = [](const std::string& m) { std::fprintf(stderr, "%s\n", m.c_str()); };
  if (problem == "advect-swirl") {
    SwirlConfig base;
    base.velocity_grid = base.eval_grid = n_max;
    std::vector<int> ns;
    for (int n = 64; n <= n_max; n *= 2) ns.push_back(n);
    if (kind != "time") {
      base.dt = 1.0 / 512.0;
      std::printf("# swirl, space: dt=1/512, T=1\n");
      print_table(swirl_space_sweep(ns, base, progress), 1);
    }
    if (kind != "space") {
      base.map_grid = n_max;
      std::printf("# swirl, time: N=%d, T=1 (theta_successive: difference to the next finer dt)\n", n_max);
      print_table(swirl_time_sweep({1.0 / 64, 1.0 / 128, 1.0 / 256, 1.0 / 512}, base, progress), 2);
    }
    return 0;
  }
  if (problem == "mhd-ot") {
    OtSweepConfig sc;
    sc.reference_map = n_max;
    sc.velocity_grid = 2 * n_max;
    sc.source_grid = n_max;
    sc.eval_grid = n_max;
    sc.space_maps.clear();
    for (int n = 32; n < n_max; n *= 2) sc.space_maps.push_back(n);
    const auto r = ot_self_convergence(sc, progress);
    std::printf("# OT self-convergence at t=%.3g, reference map %d, dt=2^-%d\n", sc.t_end,
                sc.reference_map, sc.log2_dt_reference);
    if (kind != "time") print_table(r.space, 3);
    if (kind != "space") print_table(r.time, 3);
    return 0;
  }
  throw std::invalid_argument("unknown problem '" + problem + "' (advect-swirl, mhd-ot)");
}

int run_spectra(const std::string& path, int k_lo, int k_hi) {
  const FieldSnapshot s = read_snapshot(path);
  if (s.components != 2) throw std::invalid_argument(path + ": spectra need a vector snapshot (u or B)");
  const GridSpec g{s.nx, s.ny, s.lx, s.ly};
  SpectralWorkspace ws(g);
  const std::size_t n = g.size();
  const std::span<const double> all(s.data);
  const auto e = shell_spectrum(ws, all.subspan(0, n), all.subspan(n, n));
  std::printf("# k E(k)  field=%s t=%.6g\n", s.field.c_str(), s.t);
  for (std::size_t k = 0; k < e.size(); ++k) std::printf("%zu %.10e\n", k, e[k]);
  std::printf("# slope over k=%d..%d: %.4f\n", k_lo, k_hi, spectrum_fit(e, k_lo, k_hi));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Characteristic mapping method for transport with sources and 2D ideal MHD"};
  app.require_subcommand(1);

  Overrides adv, mhd;
  auto* sub_adv = app.add_subcommand("advect", "swirl advection test with a manufactured source");
  add_overrides(sub_adv, adv);
  auto* sub_mhd = app.add_subcommand("mhd", "Orszag-Tang run");
  add_overrides(sub_mhd, mhd);

  std::string state, field = "j", zoom_out;
  double cx = pi, cy = pi, half_width = pi / 2, factor = 2.0;
  int levels = 4, zoom_n = 512;
  auto* sub_zoom = app.add_subcommand("zoom", "evaluate fields on successively smaller windows");
  sub_zoom->add_option("--state", state, "state.bin written by `mhd`")->required();
  sub_zoom->add_option("--cx", cx, "window center x");
  sub_zoom->add_option("--cy", cy, "window center y");
  sub_zoom->add_option("--half-width", half_width, "half width of the first window");
  sub_zoom->add_option("--levels", levels, "number of windows");
  sub_zoom->add_option("--factor", factor, "zoom factor between windows");
  sub_zoom->add_option("--n", zoom_n, "points per axis in each window");
  sub_zoom->add_option("--field", field, "omega, j, bx or by");
  sub_zoom->add_option("-o,--output", zoom_out, "output directory");

  std::string problem = "advect-swirl", kind = "both";
  int n_max = 512;
  auto* sub_conv = app.add_subcommand("convergence", "run a convergence sweep and print EOC tables");
  sub_conv->add_option("--problem", problem, "advect-swirl or mhd-ot");
  sub_conv->add_option("--kind", kind, "space, time or both")->check(CLI::IsMember({"space", "time", "both"}));
  sub_conv->add_option("--n-max", n_max, "finest grid");

  std::string snap;
  int k_lo = 1, k_hi = 14;
  auto* sub_spec = app.add_subcommand("spectra", "shell spectrum and slope fit of a vector snapshot");
  sub_spec->add_option("snapshot", snap, "u or B snapshot")->required();
  sub_spec->add_option("--k-lo", k_lo, "fit range start");
  sub_spec->add_option("--k-hi", k_hi, "fit range end");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*sub_adv) return run_advect(adv);
    if (*sub_mhd) return run_mhd(mhd);
    if (*sub_zoom) return run_zoom(state, cx, cy, half_width, levels, factor, zoom_n, field, zoom_out);
    if (*sub_conv) return run_convergence(problem, kind, n_max);
    if (*sub_spec) return run_spectra(snap, k_lo, k_hi);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
