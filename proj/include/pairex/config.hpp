#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "pairex/grid.hpp"

namespace pairex {

enum class InitKind { gaussian, mode, file };

/// Full description of a run.  Serializes to `key = value` lines with a
/// canonical key order; parsing the serialized form reproduces the config
/// exactly (doubles are printed with 17 significant digits).
struct RunConfig {
  int grid_dim = 1;
  int grid_points = 32;
  double grid_length = 6.283185307179586;

  PotentialKind potential_kind = PotentialKind::gaussian;
  double potential_strength = 0.05;
  double potential_width = 1.0;
  double potential_cutoff = 0.0;

  InitKind init_kind = InitKind::gaussian;
  double init_width = 1.0;
  int init_mode = 1;
  std::string init_file;

  double time_dt = 0.01;
  int time_steps = 100;

  double picard_tol = 1e-10;
  int picard_max_iter = 25;
  double series_tail_tol = 1e-14;

  double particle_count = 1.0;

  bool oracle_enabled = false;
  int oracle_n_max = 0;  // 0: choose from the occupation tail bound
  double oracle_tail_threshold = 1e-5;
  int oracle_sample_stride = 1;

  std::string output_dir = "out";
  unsigned seed = 1;
  bool verbose = false;

  void validate() const {
    if (grid_dim < 1 || grid_dim > 3) throw config_error("grid.dim must be 1..3");
    if (grid_points < 2) throw config_error("grid.points must be >= 2");
    if (!(grid_length > 0)) throw config_error("grid.length must be positive");
    if (time_dt == 0) throw config_error("time.dt must be nonzero");
    if (time_steps < 2) throw config_error("time.steps must be >= 2");
    if (!(picard_tol > 0)) throw config_error("picard.tol must be positive");
    if (picard_max_iter < 1) throw config_error("picard.max_iter must be >= 1");
    if (!(series_tail_tol > 0)) throw config_error("series.tail_tol must be positive");
    if (particle_count < 1.0) throw config_error("particles.count must be >= 1");
    if (!(init_width > 0)) throw config_error("init.width must be positive");
    if (oracle_n_max < 0) throw config_error("oracle.n_max must be >= 0");
    if (!(oracle_tail_threshold > 0))
      throw config_error("oracle.tail_threshold must be positive");
    if (oracle_sample_stride < 1)
      throw config_error("oracle.sample_stride must be >= 1");
  }

  std::string serialize() const;
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string potential_kind_name(PotentialKind k) {
  switch (k) {
    case PotentialKind::zero: return "zero";
    case PotentialKind::gaussian: return "gaussian";
    case PotentialKind::mollified_coulomb: return "mollified_coulomb";
  }
  return "zero";
}

inline PotentialKind potential_kind_from(const std::string& s) {
  if (s == "zero") return PotentialKind::zero;
  if (s == "gaussian") return PotentialKind::gaussian;
  if (s == "mollified_coulomb") return PotentialKind::mollified_coulomb;
  throw config_error("unknown potential.kind: " + s);
}

inline std::string init_kind_name(InitKind k) {
  switch (k) {
    case InitKind::gaussian: return "gaussian";
    case InitKind::mode: return "mode";
    case InitKind::file: return "file";
  }
  return "gaussian";
}

inline InitKind init_kind_from(const std::string& s) {
  if (s == "gaussian") return InitKind::gaussian;
  if (s == "mode") return InitKind::mode;
  if (s == "file") return InitKind::file;
  throw config_error("unknown init.kind: " + s);
}

}  // namespace detail

inline std::string RunConfig::serialize() const {
  std::ostringstream os;
  os << "grid.dim = " << grid_dim << "\n";
  os << "grid.points = " << grid_points << "\n";
  os << "grid.length = " << detail::fmt_double(grid_length) << "\n";
  os << "potential.kind = " << detail::potential_kind_name(potential_kind) << "\n";
  os << "potential.strength = " << detail::fmt_double(potential_strength) << "\n";
  os << "potential.width = " << detail::fmt_double(potential_width) << "\n";
  os << "potential.cutoff = " << detail::fmt_double(potential_cutoff) << "\n";
  os << "init.kind = " << detail::init_kind_name(init_kind) << "\n";
  os << "init.width = " << detail::fmt_double(init_width) << "\n";
  os << "init.mode = " << init_mode << "\n";
  os << "init.file = " << init_file << "\n";
  os << "time.dt = " << detail::fmt_double(time_dt) << "\n";
  os << "time.steps = " << time_steps << "\n";
  os << "picard.tol = " << detail::fmt_double(picard_tol) << "\n";
  os << "picard.max_iter = " << picard_max_iter << "\n";
  os << "series.tail_tol = " << detail::fmt_double(series_tail_tol) << "\n";
  os << "particles.count = " << detail::fmt_double(particle_count) << "\n";
  os << "oracle.enabled = " << (oracle_enabled ? "true" : "false") << "\n";
  os << "oracle.n_max = " << oracle_n_max << "\n";
  os << "oracle.tail_threshold = " << detail::fmt_double(oracle_tail_threshold) << "\n";
  os << "oracle.sample_stride = " << oracle_sample_stride << "\n";
  os << "output.dir = " << output_dir << "\n";
  os << "seed = " << seed << "\n";
  os << "verbose = " << (verbose ? "true" : "false") << "\n";
  return os.str();
}

inline RunConfig RunConfig::parse(const std::string& text) {
  RunConfig c;
  std::istringstream is(text);
  std::string line;
  auto trim = [](std::string s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  auto to_bool = [](const std::string& s) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw config_error("expected boolean, got: " + s);
  };
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw config_error("config line " + std::to_string(lineno) +
                         ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    try {
      if (key == "grid.dim") c.grid_dim = std::stoi(val);
      else if (key == "grid.points") c.grid_points = std::stoi(val);
      else if (key == "grid.length") c.grid_length = std::stod(val);
      else if (key == "potential.kind") c.potential_kind = detail::potential_kind_from(val);
      else if (key == "potential.strength") c.potential_strength = std::stod(val);
      else if (key == "potential.width") c.potential_width = std::stod(val);
      else if (key == "potential.cutoff") c.potential_cutoff = std::stod(val);
      else if (key == "init.kind") c.init_kind = detail::init_kind_from(val);
      else if (key == "init.width") c.init_width = std::stod(val);
      else if (key == "init.mode") c.init_mode = std::stoi(val);
      else if (key == "init.file") c.init_file = val;
      else if (key == "time.dt") c.time_dt = std::stod(val);
      else if (key == "time.steps") c.time_steps = std::stoi(val);
      else if (key == "picard.tol") c.picard_tol = std::stod(val);
      else if (key == "picard.max_iter") c.picard_max_iter = std::stoi(val);
      else if (key == "series.tail_tol") c.series_tail_tol = std::stod(val);
      else if (key == "particles.count") c.particle_count = std::stod(val);
      else if (key == "oracle.enabled") c.oracle_enabled = to_bool(val);
      else if (key == "oracle.n_max") c.oracle_n_max = std::stoi(val);
      else if (key == "oracle.tail_threshold") c.oracle_tail_threshold = std::stod(val);
      else if (key == "oracle.sample_stride") c.oracle_sample_stride = std::stoi(val);
      else if (key == "output.dir") c.output_dir = val;
      else if (key == "seed") c.seed = static_cast<unsigned>(std::stoul(val));
      else if (key == "verbose") c.verbose = to_bool(val);
      else throw config_error("unknown config key: " + key);
    } catch (const std::invalid_argument& e) {
      throw config_error("config line " + std::to_string(lineno) + " (" + key +
                         "): " + e.what());
    }
  }
  return c;
}

inline RunConfig RunConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw io_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse(buf.str());
}

/// Initial datum selected by the config (file kind reads one complex sample
/// per line: re im).
inline Field build_initial_datum(const RunConfig& c, const GridPtr& grid) {
  switch (c.init_kind) {
    case InitKind::gaussian:
      return normalized_gaussian(grid, c.init_width);
    case InitKind::mode:
      return grid_mode(grid, std::vector<int>(grid->dim(), c.init_mode));
    case InitKind::file: {
      std::ifstream f(c.init_file);
      if (!f) throw io_error("cannot open init.file: " + c.init_file);
      Vec vals(grid->total_points());
      for (long i = 0; i < grid->total_points(); ++i) {
        double re, im;
        if (!(f >> re >> im))
          throw io_error("init.file: expected " +
                         std::to_string(grid->total_points()) + " samples");
        vals[i] = cd(re, im);
      }
      Field phi(std::move(vals), grid);
      double nrm = l2_norm(phi);
      if (nrm < 1e-12)
        throw config_error("init.file: datum is numerically zero");
      phi.values /= nrm;
      return phi;
    }
  }
  throw config_error("unknown init kind");
}

}  // namespace pairex
