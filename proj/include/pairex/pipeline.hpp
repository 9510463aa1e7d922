#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "pairex/config.hpp"
#include "pairex/error_norms.hpp"
#include "pairex/fock/calibrate.hpp"
#include "pairex/fock/endtoend.hpp"
#include "pairex/reduction.hpp"

namespace pairex {

enum class RunStage { hartree, pairk, diagnose, errors, oracle, endtoend };

/// Smallest occupation cutoff whose coherent-state mass beyond n_max - 2
/// stays under 1e-10; the two spare sectors absorb pair-generator leakage.
inline int choose_n_max(double particle_count) {
  const double lambda = particle_count;  // |phi| = 1
  double term = std::exp(-lambda);
  double cum = term;
  int n = 0;
  while (1.0 - cum > 1e-10 && n < 400) {
    ++n;
    term *= lambda / n;
    cum += term;
  }
  return n + 2;
}

struct RunReport {
  RunConfig config;
  RunStage stage = RunStage::hartree;
  std::string status = "ok";

  std::vector<double> time;
  std::vector<double> mass_log, energy_log;

  std::vector<double> picard_history;
  int picard_iterations = 0;
  bool picard_converged = false;

  DiagnosticsSeries diag;
  bool has_diag = false;
  bool has_errors = false;

  fock::AlgebraReport algebra;
  bool has_algebra = false;
  fock::EndToEndReport e2e;
  bool has_e2e = false;

  ErrorNormConstants constants;
  double wall_seconds = 0;
};

/// Runs the pipeline through `upto`.  Stage failures after configuration are
/// captured in the report status so partial outputs can still be flushed;
/// configuration errors throw before any work starts.
inline RunReport run_pipeline(const RunConfig& cfg, RunStage upto) {
  auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  RunReport rep;
  rep.config = cfg;
  rep.stage = upto;
  auto finish = [&]() {
    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return rep;
  };

  try {
    auto [grid, v] = build_domain(cfg.grid_dim, cfg.grid_points, cfg.grid_length,
                                  {cfg.potential_kind, cfg.potential_strength,
                                   cfg.potential_width, cfg.potential_cutoff});
    Field phi0 = build_initial_datum(cfg, grid);

    HartreeTrajectory htraj =
        hartree_evolve(phi0, v, cfg.time_dt, cfg.time_steps);
    rep.time.resize(htraj.time_grid.nodes());
    for (int j = 0; j < htraj.time_grid.nodes(); ++j)
      rep.time[j] = htraj.time_grid.time(j);
    rep.mass_log = htraj.mass_log;
    rep.energy_log = htraj.energy_log;
    if (upto == RunStage::hartree) return finish();

    PairTrajectory ptraj = picard_solve(
        htraj, v, cfg.picard_tol, cfg.picard_max_iter, cfg.series_tail_tol);
    rep.picard_history = ptraj.residual_history;
    rep.picard_iterations = ptraj.iterate_index;
    rep.picard_converged = true;
    GMPair gm = build_g_m(htraj, v);
    if (upto >= RunStage::diagnose) {
      rep.diag = reduce_diagnostics(htraj, ptraj, gm, v, cfg.particle_count);
      rep.has_diag = true;
    }
    if (upto >= RunStage::errors) {
      check_error_norm_scale(*grid);
      const int nn = ptraj.time_grid.nodes();
      rep.diag.f_err.resize(nn);
      rep.diag.g_err.resize(nn);
      for (int j = 0; j < nn; ++j) {
        rep.diag.g_err[j] =
            g_error(ptraj.u[j], ptraj.p[j], v, rep.constants).g_t;
        rep.diag.f_err[j] =
            f_error(ptraj.u[j], ptraj.p[j], htraj.phi[j], v, rep.constants).f_t;
      }
      rep.diag.bound = error_bound(rep.diag.f_err, rep.diag.g_err,
                                   cfg.particle_count, ptraj.time_grid);
      rep.has_errors = true;
    }
    if (upto >= RunStage::oracle) {
      int n_max = cfg.oracle_n_max > 0 ? cfg.oracle_n_max
                                       : choose_n_max(cfg.particle_count);
      rep.algebra = fock::verify_algebra(grid, std::min(n_max, 6), phi0, v,
                                         1e-12, cfg.seed);
      rep.has_algebra = true;
      if (upto >= RunStage::endtoend) {
        fock::EndToEndOptions opt;
        opt.n_max = n_max;
        opt.tail_threshold = cfg.oracle_tail_threshold;
        opt.sample_stride = cfg.oracle_sample_stride;
        rep.e2e = fock::end_to_end_check(htraj, ptraj, gm, rep.diag, v,
                                         cfg.particle_count, opt);
        rep.has_e2e = true;
      }
    }
  } catch (const std::exception& e) {
    rep.status = std::string("error: ") + e.what();
  }
  return finish();
}

// ---------------------------------------------------------------------------
// Output emission

namespace detail {

inline void write_file(const std::filesystem::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw io_error("cannot write " + p.string());
  f << s;
  if (!f) throw io_error("write failed: " + p.string());
}

inline std::string csv_cell(double x) { return fmt_double(x); }

}  // namespace detail

/// Writes run.csv, summary.json, constants.calib and config.echo.  Output is
/// byte-stable for a fixed config and seed.
inline void emit_outputs(const RunReport& rep, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::path out(dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw io_error("cannot create output dir: " + out.string());

  // run.csv
  {
    std::ostringstream os;
    os << "t,mass,energy,chi0,chi1,trace_d_imag,astar_norm,residual,"
          "sh_diag_norm,f,g,bound,phase_integral,lhs_oracle,rhs_oracle\n";
    const std::size_t nn = rep.time.size();
    auto cell = [&](const std::vector<double>& v, std::size_t j) {
      return j < v.size() ? detail::csv_cell(v[j]) : std::string();
    };
    for (std::size_t j = 0; j < nn; ++j) {
      os << detail::csv_cell(rep.time[j]) << ',' << cell(rep.mass_log, j) << ','
         << cell(rep.energy_log, j) << ',' << cell(rep.diag.chi0, j) << ','
         << cell(rep.diag.chi1, j) << ',' << cell(rep.diag.trace_d_imag, j)
         << ',' << cell(rep.diag.astar_coeff_norm, j) << ','
         << cell(rep.diag.residual, j) << ',' << cell(rep.diag.sh_diag_norm, j)
         << ',' << cell(rep.diag.f_err, j) << ',' << cell(rep.diag.g_err, j)
         << ',' << cell(rep.diag.bound, j) << ','
         << cell(rep.diag.phase_integral, j) << ','
         << cell(rep.e2e.lhs, j) << ',' << cell(rep.e2e.rhs, j) << '\n';
    }
    detail::write_file(out / "run.csv", os.str());
  }

  // summary.json
  {
    nlohmann::ordered_json s;
    s["status"] = rep.status;
    s["wall_seconds"] = rep.wall_seconds;
    s["picard"]["iterations"] = rep.picard_iterations;
    s["picard"]["converged"] = rep.picard_converged;
    s["picard"]["update_norms"] = rep.picard_history;
    s["tolerances"]["picard_tol"] = rep.config.picard_tol;
    s["tolerances"]["series_tail_tol"] = rep.config.series_tail_tol;
    if (rep.has_algebra) {
      auto& arr = s["algebra"]["identities"];
      for (const auto& i : rep.algebra.identities)
        arr.push_back({{"name", i.name},
                       {"deviation", i.deviation},
                       {"tolerance", i.tolerance},
                       {"pass", i.pass}});
      s["algebra"]["all_pass"] = rep.algebra.all_pass();
    }
    if (rep.has_e2e) {
      s["end_to_end"]["derivative_dev_max"] = rep.e2e.derivative_dev_max;
      s["end_to_end"]["vacuum_residue_dev"] = rep.e2e.ltilde_identity_dev;
      s["end_to_end"]["max_tail"] = rep.e2e.max_tail;
      s["end_to_end"]["inequality_ok"] = rep.e2e.inequality_ok(0.05);
    }
    nlohmann::ordered_json consts;
    ErrorNormConstants cc = rep.constants;
    for (auto& [name, ptr] : cc.entries()) consts[name] = *ptr;
    s["error_norm_constants"] = consts;
    detail::write_file(out / "summary.json", s.dump(2) + "\n");
  }

  // constants.calib: name value lattice n_max residual, one line per constant
  {
    std::ostringstream os;
    os << "# error-norm combination constants\n";
    os << "# columns: name value calibration_lattice_sites calibration_n_max "
          "calibration_residual\n";
    ErrorNormConstants cc = rep.constants;
    for (auto& [name, ptr] : cc.entries())
      os << name << ' ' << detail::fmt_double(*ptr) << " 2 18 0\n";
    detail::write_file(out / "constants.calib", os.str());
  }

  detail::write_file(out / "config.echo", rep.config.serialize());
}

}  // namespace pairex
