#pragma once

// Run configuration (key=value), field snapshots, time-series CSV and
// checkpoints of the solver state.

#include <bit>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmm/diagnostics.hpp"
#include "cmm/mhd.hpp"
#include "cmm/swirl.hpp"

namespace cmm {

struct ConfigError : std::runtime_error {
  ConfigError(const std::string& where, int line, const std::string& msg)
      : std::runtime_error(where + ":" + std::to_string(line) + ": " + msg), line(line) {}
  int line;
};

struct RunConfig {
  std::string problem = "mhd-ot";  // advect-swirl | mhd-ot
  int map_grid = 512;
  int source_grid = 0;  // 0: same as the map grid
  int velocity_grid = 1024;
  int eval_grid = 512;  // swirl only
  double dt = 0.0;      // 0: CFL (MHD only)
  double cfl = 1.0;
  double t_end = 1.0;
  int gamma = 3;
  double delta_det = 0.05;
  double source_tail = 1e-2;
  double cutoff_map = 0.9;
  double cutoff_source = 0.1;
  double epsilon = 0.1;
  bool remap = true;
  std::string output_dir = "out";
  int snapshot_stride = 0;  // 0: snapshots only at the end
  double diag_interval = 0.01;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  static RunConfig defaults(const std::string& problem) {
    RunConfig c;
    c.problem = problem;
    if (problem == "advect-swirl") {
      c.velocity_grid = 512;
      c.dt = 1.0 / 512.0;
      c.remap = false;
    } else if (problem != "mhd-ot") {
      throw std::invalid_argument("unknown problem '" + problem + "' (advect-swirl, mhd-ot)");
    }
    return c;
  }

  SwirlConfig swirl() const {
    SwirlConfig s;
    s.map_grid = map_grid;
    s.source_grid = source_grid;
    s.velocity_grid = velocity_grid;
    s.eval_grid = eval_grid;
    s.dt = dt;
    s.t_end = t_end;
    s.epsilon = epsilon;
    s.gamma = gamma;
    s.remap = remap;
    s.delta_det = delta_det;
    s.source_tail = source_tail;
    return s;
  }

  MhdConfig mhd() const {
    MhdConfig m;
    m.map_grid = map_grid;
    m.source_grid = source_grid;
    m.velocity_grid = velocity_grid;
    m.dt = dt;
    m.cfl = cfl;
    m.t_end = t_end;
    m.gamma = gamma;
    m.delta_det = delta_det;
    m.source_tail = source_tail;
    m.cutoff_map = cutoff_map;
    m.cutoff_source = cutoff_source;
    m.remap = remap;
    return m;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& v, const std::string& where, int line,
                           const std::string& key) {
  std::size_t pos = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError(where, line, key + ": not a number: '" + v + "'");
  }
  if (pos != v.size()) throw ConfigError(where, line, key + ": not a number: '" + v + "'");
  return d;
}

inline int parse_int(const std::string& v, const std::string& where, int line,
                     const std::string& key) {
  std::size_t pos = 0;
  long n = 0;
  try {
    n = std::stol(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError(where, line, key + ": not an integer: '" + v + "'");
  }
  if (pos != v.size() || n < INT32_MIN || n > INT32_MAX)
    throw ConfigError(where, line, key + ": not an integer: '" + v + "'");
  return static_cast<int>(n);
}

inline bool parse_bool(const std::string& v, const std::string& where, int line,
                       const std::string& key) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw ConfigError(where, line, key + ": not a boolean: '" + v + "'");
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace detail

/// Parses key=value text. `problem` must come from the text or the override.
inline RunConfig parse_config_text(const std::string& text, const std::string& where = "<config>",
                                   const std::string& problem_override = "") {
  struct Entry {
    std::string value;
    int line;
  };
  std::map<std::string, Entry> kv;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = detail::trim(raw.substr(0, hash));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(where, line, "expected key=value: '" + s + "'");
    const std::string key = detail::trim(s.substr(0, eq)), value = detail::trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError(where, line, "empty key");
    if (kv.count(key)) throw ConfigError(where, line, "duplicate key '" + key + "'");
    kv[key] = {value, line};
  }

  std::string problem = problem_override;
  int problem_line = 0;
  if (auto it = kv.find("problem"); it != kv.end()) {
    problem_line = it->second.line;
    if (problem.empty()) problem = it->second.value;
    kv.erase(it);
  }
  if (problem.empty()) throw ConfigError(where, line, "missing required key 'problem'");
  if (problem != "advect-swirl" && problem != "mhd-ot")
    throw ConfigError(where, problem_line, "problem: unknown value '" + problem + "'");
  RunConfig c = RunConfig::defaults(problem);

  for (const auto& [key, e] : kv) {
    const auto& v = e.value;
    const int ln = e.line;
    auto dbl = [&](double lo, bool lo_open, double hi) {
      const double d = detail::parse_double(v, where, ln, key);
      if (!std::isfinite(d) || (lo_open ? !(d > lo) : !(d >= lo)) || d > hi)
        throw ConfigError(where, ln, key + ": value " + v + " out of range");
      return d;
    };
    auto grid = [&](bool allow_zero) {
      const int n = detail::parse_int(v, where, ln, key);
      if (allow_zero && n == 0) return 0;
      if (n < 4 || n % 2) throw ConfigError(where, ln, key + ": need an even size >= 4, got " + v);
      return n;
    };
    const double inf = std::numeric_limits<double>::infinity();
    if (key == "map_grid") c.map_grid = grid(false);
    else if (key == "source_grid") c.source_grid = grid(true);
    else if (key == "velocity_grid") c.velocity_grid = grid(false);
    else if (key == "eval_grid") c.eval_grid = grid(false);
    else if (key == "dt") c.dt = dbl(0.0, false, inf);
    else if (key == "cfl") c.cfl = dbl(0.0, true, inf);
    else if (key == "t_end") c.t_end = dbl(0.0, false, inf);
    else if (key == "gamma") {
      c.gamma = detail::parse_int(v, where, ln, key);
      if (c.gamma < 1 || c.gamma > 8) throw ConfigError(where, ln, "gamma: value " + v + " out of range");
    } else if (key == "delta_det") c.delta_det = dbl(0.0, true, inf);
    else if (key == "source_tail") c.source_tail = dbl(0.0, true, 1.0);
    else if (key == "cutoff_map") c.cutoff_map = dbl(0.0, true, 1.0);
    else if (key == "cutoff_source") c.cutoff_source = dbl(0.0, true, 1.0);
    else if (key == "epsilon") c.epsilon = dbl(0.0, true, inf);
    else if (key == "remap") c.remap = detail::parse_bool(v, where, ln, key);
    else if (key == "output_dir") {
      if (v.empty()) throw ConfigError(where, ln, "output_dir: empty");
      c.output_dir = v;
    } else if (key == "snapshot_stride") {
      c.snapshot_stride = detail::parse_int(v, where, ln, key);
      if (c.snapshot_stride < 0) throw ConfigError(where, ln, "snapshot_stride: value " + v + " out of range");
    } else if (key == "diag_interval") c.diag_interval = dbl(0.0, false, inf);
    else throw ConfigError(where, ln, "unknown key '" + key + "'");
  }
  if (c.problem == "advect-swirl" && c.dt == 0.0)
    throw ConfigError(where, line, "dt: the swirl problem needs a fixed dt > 0");
  return c;
}

inline RunConfig parse_config(const std::filesystem::path& path,
                              const std::string& problem_override = "") {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string(), problem_override);
}

inline std::string serialize(const RunConfig& c) {
  std::ostringstream os;
  os << "problem=" << c.problem << "\n"
     << "map_grid=" << c.map_grid << "\n"
     << "source_grid=" << c.source_grid << "\n"
     << "velocity_grid=" << c.velocity_grid << "\n"
     << "eval_grid=" << c.eval_grid << "\n"
     << "dt=" << detail::fmt(c.dt) << "\n"
     << "cfl=" << detail::fmt(c.cfl) << "\n"
     << "t_end=" << detail::fmt(c.t_end) << "\n"
     << "gamma=" << c.gamma << "\n"
     << "delta_det=" << detail::fmt(c.delta_det) << "\n"
     << "source_tail=" << detail::fmt(c.source_tail) << "\n"
     << "cutoff_map=" << detail::fmt(c.cutoff_map) << "\n"
     << "cutoff_source=" << detail::fmt(c.cutoff_source) << "\n"
     << "epsilon=" << detail::fmt(c.epsilon) << "\n"
     << "remap=" << (c.remap ? "true" : "false") << "\n"
     << "output_dir=" << c.output_dir << "\n"
     << "snapshot_stride=" << c.snapshot_stride << "\n"
     << "diag_interval=" << detail::fmt(c.diag_interval) << "\n";
  return os.str();
}

/// CMM_OUTPUT_DIR overrides the configured output directory.
inline std::filesystem::path output_directory(const std::string& configured) {
  if (const char* env = std::getenv("CMM_OUTPUT_DIR"); env && *env) return env;
  return configured;
}

// ---------------------------------------------------------------------------
// Field snapshots: "key: value" header lines closed by "end_header", then
// little-endian float64 payload, row-major (index j*nx + i), components
// stored one after the other.

inline constexpr int snapshot_format_version = 1;

struct FieldSnapshot {
  std::string problem;
  std::string field;
  double t = 0.0;
  int nx = 0, ny = 0;
  double lx = two_pi, ly = two_pi;
  int components = 1;
  std::vector<double> data;

  friend bool operator==(const FieldSnapshot&, const FieldSnapshot&) = default;
};

namespace detail {

inline std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int b = 0; b < 8; ++b) r |= ((v >> (8 * b)) & 0xffu) << (8 * (7 - b));
  return r;
}

inline void write_f64(std::ostream& os, std::span<const double> v) {
  std::vector<std::uint64_t> buf(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) buf[k] = to_le(std::bit_cast<std::uint64_t>(v[k]));
  os.write(reinterpret_cast<const char*>(buf.data()),
           static_cast<std::streamsize>(buf.size() * sizeof(std::uint64_t)));
}

inline void read_f64(std::istream& is, std::span<double> v, const std::string& what) {
  std::vector<std::uint64_t> buf(v.size());
  is.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(std::uint64_t)));
  if (static_cast<std::size_t>(is.gcount()) != buf.size() * sizeof(std::uint64_t))
    throw std::runtime_error(what + ": truncated payload");
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::bit_cast<double>(to_le(buf[k]));
}

inline std::map<std::string, std::string> read_header(std::istream& is, const std::string& what,
                                                      const std::string& magic) {
  std::string line;
  if (!std::getline(is, line) || line != magic)
    throw std::runtime_error(what + ": not a " + magic + " file");
  std::map<std::string, std::string> h;
  while (std::getline(is, line)) {
    if (line == "end_header") return h;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw std::runtime_error(what + ": malformed header line '" + line + "'");
    h[trim(line.substr(0, colon))] = trim(line.substr(colon + 1));
  }
  throw std::runtime_error(what + ": truncated header");
}

inline const std::string& header_value(const std::map<std::string, std::string>& h,
                                       const std::string& key, const std::string& what) {
  auto it = h.find(key);
  if (it == h.end()) throw std::runtime_error(what + ": header lacks '" + key + "'");
  return it->second;
}

inline void check_version(const std::map<std::string, std::string>& h, int expected,
                          const std::string& what) {
  const int v = std::stoi(header_value(h, "format_version", what));
  if (v != expected)
    throw std::runtime_error(what + ": format version " + std::to_string(v) +
                             " not supported (expected " + std::to_string(expected) + ")");
}

}  // namespace detail

inline void write_snapshot(const std::filesystem::path& path, const FieldSnapshot& s) {
  if (s.nx <= 0 || s.ny <= 0) throw std::invalid_argument("snapshot grid must be non-empty");
  if (s.components != 1 && s.components != 2)
    throw std::invalid_argument("snapshot components must be 1 or 2");
  const std::size_t expect = static_cast<std::size_t>(s.nx) * static_cast<std::size_t>(s.ny) *
                             static_cast<std::size_t>(s.components);
  if (s.data.size() != expect) throw std::invalid_argument("snapshot payload size does not match grid");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "cmm_snapshot\n"
     << "format_version: " << snapshot_format_version << "\n"
     << "problem: " << s.problem << "\n"
     << "field: " << s.field << "\n"
     << "t: " << detail::fmt(s.t) << "\n"
     << "nx: " << s.nx << "\n"
     << "ny: " << s.ny << "\n"
     << "lx: " << detail::fmt(s.lx) << "\n"
     << "ly: " << detail::fmt(s.ly) << "\n"
     << "components: " << s.components << "\n"
     << "end_header\n";
  detail::write_f64(os, s.data);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

inline FieldSnapshot read_snapshot(const std::filesystem::path& path) {
  const std::string what = path.string();
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + what);
  const auto h = detail::read_header(is, what, "cmm_snapshot");
  detail::check_version(h, snapshot_format_version, what);
  FieldSnapshot s;
  try {
    s.problem = detail::header_value(h, "problem", what);
    s.field = detail::header_value(h, "field", what);
    s.t = std::stod(detail::header_value(h, "t", what));
    s.nx = std::stoi(detail::header_value(h, "nx", what));
    s.ny = std::stoi(detail::header_value(h, "ny", what));
    s.lx = std::stod(detail::header_value(h, "lx", what));
    s.ly = std::stod(detail::header_value(h, "ly", what));
    s.components = std::stoi(detail::header_value(h, "components", what));
  } catch (const std::logic_error& e) {
    throw std::runtime_error(what + ": bad header value (" + e.what() + ")");
  }
  if (s.nx <= 0 || s.ny <= 0 || (s.components != 1 && s.components != 2))
    throw std::runtime_error(what + ": invalid grid in header");
  s.data.resize(static_cast<std::size_t>(s.nx) * static_cast<std::size_t>(s.ny) *
                static_cast<std::size_t>(s.components));
  detail::read_f64(is, s.data, what);
  if (is.peek() != std::char_traits<char>::eof()) throw std::runtime_error(what + ": trailing bytes after payload");
  return s;
}

inline FieldSnapshot make_snapshot(const std::string& problem, const std::string& field, double t,
                                   const GridSpec& g, std::vector<double> data, int components = 1) {
  return {problem, field, t, g.nx, g.ny, g.lx, g.ly, components, std::move(data)};
}

inline FieldSnapshot make_snapshot(const std::string& problem, const std::string& field, double t,
                                   const GridSpec& g, const VectorGrid& v) {
  std::vector<double> data(v.x);
  data.insert(data.end(), v.y.begin(), v.y.end());
  return make_snapshot(problem, field, t, g, std::move(data), 2);
}

// ---------------------------------------------------------------------------
// Time series. Quantities are nondimensional; the unit tag names the kind.

inline const std::string& timeseries_header() {
  static const std::string h =
      "t[time],dt[time],e_kin[energy],e_pot[energy],e_tot[energy],h_c[energy],"
      "a_sq[potential^2],max_u[velocity],max_j[current],n_submaps[count]";
  return h;
}

inline std::string timeseries_row(const TimeSeriesRecord& r) {
  std::ostringstream os;
  os << std::setprecision(17) << r.t << ',' << r.dt << ',' << r.e_kin << ',' << r.e_pot << ','
     << r.e_tot << ',' << r.h_c << ',' << r.a_sq << ',' << r.max_u << ',' << r.max_j << ','
     << r.n_submaps;
  return os.str();
}

/// Appends one row, writing the header first if the file is new or empty.
inline void append_timeseries(const std::filesystem::path& path, const TimeSeriesRecord& r) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream os(path, std::ios::app);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  if (fresh) os << timeseries_header() << "\n";
  os << timeseries_row(r) << "\n";
}

inline std::vector<TimeSeriesRecord> read_timeseries(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != timeseries_header())
    throw std::runtime_error(path.string() + ": unexpected time-series header");
  std::vector<TimeSeriesRecord> out;
  int ln = 1;
  while (std::getline(is, line)) {
    ++ln;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 10)
      throw std::runtime_error(path.string() + ":" + std::to_string(ln) + ": expected 10 columns");
    TimeSeriesRecord r;
    r.t = std::stod(cells[0]);
    r.dt = std::stod(cells[1]);
    r.e_kin = std::stod(cells[2]);
    r.e_pot = std::stod(cells[3]);
    r.e_tot = std::stod(cells[4]);
    r.h_c = std::stod(cells[5]);
    r.a_sq = std::stod(cells[6]);
    r.max_u = std::stod(cells[7]);
    r.max_j = std::stod(cells[8]);
    r.n_submaps = std::stoul(cells[9]);
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints of an OT run: config header plus every Hermite array of the map
// stack, the source stack and both snapshot histories.

inline constexpr int state_format_version = 1;

namespace detail {

inline void write_u64(std::ostream& os, std::uint64_t v) {
  v = to_le(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline std::uint64_t read_u64(std::istream& is, const std::string& what) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (is.gcount() != sizeof v) throw std::runtime_error(what + ": truncated state");
  return to_le(v);
}

inline void write_scalar(std::ostream& os, double v) { write_f64(os, std::span<const double>(&v, 1)); }

inline double read_scalar(std::istream& is, const std::string& what) {
  double v = 0.0;
  read_f64(is, std::span<double>(&v, 1), what);
  return v;
}

inline void write_field(std::ostream& os, const HermiteField& f) {
  write_u64(os, f.empty() ? 0 : 1);
  if (f.empty()) return;
  const auto& g = f.grid();
  write_u64(os, static_cast<std::uint64_t>(g.nx));
  write_u64(os, static_cast<std::uint64_t>(g.ny));
  write_scalar(os, g.lx);
  write_scalar(os, g.ly);
  write_f64(os, f.values());
  write_f64(os, f.dx());
  write_f64(os, f.dy());
  write_f64(os, f.dxy());
}

inline HermiteField read_field(std::istream& is, const std::string& what) {
  if (read_u64(is, what) == 0) return {};
  GridSpec g;
  g.nx = static_cast<int>(read_u64(is, what));
  g.ny = static_cast<int>(read_u64(is, what));
  g.lx = read_scalar(is, what);
  g.ly = read_scalar(is, what);
  if (g.nx < 4 || g.ny < 4 || g.nx > (1 << 16) || g.ny > (1 << 16))
    throw std::runtime_error(what + ": corrupt grid in state");
  HermiteField f(g);
  read_f64(is, f.values(), what);
  read_f64(is, f.dx(), what);
  read_f64(is, f.dy(), what);
  read_f64(is, f.dxy(), what);
  return f;
}

inline void write_map(std::ostream& os, const CharMap& m) {
  write_scalar(os, m.t_start);
  write_scalar(os, m.t_end);
  write_field(os, m.disp.x);
  write_field(os, m.disp.y);
}

inline CharMap read_map(std::istream& is, const std::string& what) {
  CharMap m;
  m.t_start = read_scalar(is, what);
  m.t_end = read_scalar(is, what);
  HermiteField x = read_field(is, what);
  HermiteField y = read_field(is, what);
  m.disp = VectorHermite(std::move(x), std::move(y));
  return m;
}

}  // namespace detail

inline void save_state(const std::filesystem::path& path, const RunConfig& cfg, const MhdSolver& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "cmm_state\n"
     << "format_version: " << state_format_version << "\n"
     << "t: " << detail::fmt(s.time()) << "\n"
     << "steps: " << s.steps() << "\n";
  std::istringstream cfg_text(serialize(cfg));
  for (std::string line; std::getline(cfg_text, line);) {
    const auto eq = line.find('=');
    os << "config." << line.substr(0, eq) << ": " << line.substr(eq + 1) << "\n";
  }
  os << "end_header\n";

  const auto& st = s.stack();
  detail::write_u64(os, s.steps());
  detail::write_u64(os, st.frozen().size());
  for (const auto& sub : st.frozen()) {
    detail::write_map(os, sub.map);
    detail::write_field(os, sub.source);
  }
  detail::write_map(os, st.head());
  detail::write_field(os, st.head_source());

  const auto& vh = s.integrator().velocity_history();
  detail::write_u64(os, vh.size());
  for (std::size_t k = 0; k < vh.size(); ++k) {
    detail::write_scalar(os, vh.time(k));
    detail::write_field(os, vh.field(k).x);
    detail::write_field(os, vh.field(k).y);
  }
  const auto& sh = s.integrator().source_history();
  detail::write_u64(os, sh.size());
  for (std::size_t k = 0; k < sh.size(); ++k) {
    detail::write_scalar(os, sh.time(k));
    detail::write_field(os, sh.field(k));
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

/// Reads the config stored in a checkpoint header.
inline RunConfig read_state_config(const std::filesystem::path& path) {
  const std::string what = path.string();
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + what);
  const auto h = detail::read_header(is, what, "cmm_state");
  detail::check_version(h, state_format_version, what);
  std::string text;
  for (const auto& [k, v] : h)
    if (k.rfind("config.", 0) == 0) text += k.substr(7) + "=" + v + "\n";
  return parse_config_text(text, what);
}

/// Restores a checkpoint into a solver built from read_state_config(path).
inline void load_state(const std::filesystem::path& path, MhdSolver& s) {
  const std::string what = path.string();
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + what);
  const auto h = detail::read_header(is, what, "cmm_state");
  detail::check_version(h, state_format_version, what);

  const std::size_t steps = detail::read_u64(is, what);
  const std::size_t n_frozen = detail::read_u64(is, what);
  std::vector<Submap> frozen;
  for (std::size_t k = 0; k < n_frozen; ++k) {
    CharMap m = detail::read_map(is, what);
    HermiteField f = detail::read_field(is, what);
    frozen.push_back({std::move(m), std::move(f)});
  }
  CharMap head = detail::read_map(is, what);
  HermiteField head_source = detail::read_field(is, what);
  if (!(head.grid() == s.stack().head().grid()))
    throw std::runtime_error(what + ": map grid does not match the solver");

  if (!frozen.empty() && frozen.back().map.t_end != head.t_start)
    throw std::runtime_error(what + ": head map does not continue the frozen stack");
  SubmapStack stack(head.grid(),
                    head_source.empty() ? std::nullopt : std::optional<GridSpec>(head_source.grid()),
                    head.t_start);
  for (auto& sub : frozen) stack.push_frozen(std::move(sub));
  stack.set_head(std::move(head), std::move(head_source));

  const std::size_t order = static_cast<std::size_t>(s.config().gamma);
  VelocityHistory vh(order);
  const std::size_t nv = detail::read_u64(is, what);
  for (std::size_t k = 0; k < nv; ++k) {
    const double t = detail::read_scalar(is, what);
    HermiteField x = detail::read_field(is, what);
    HermiteField y = detail::read_field(is, what);
    vh.push(t, VectorHermite(std::move(x), std::move(y)));
  }
  SourceHistory sh(order);
  const std::size_t ns = detail::read_u64(is, what);
  for (std::size_t k = 0; k < ns; ++k) {
    const double t = detail::read_scalar(is, what);
    sh.push(t, detail::read_field(is, what));
  }
  if (is.peek() != std::char_traits<char>::eof()) throw std::runtime_error(what + ": trailing bytes in state");
  s.restore(std::move(stack), std::move(vh), std::move(sh), steps);
}

}  // namespace cmm
