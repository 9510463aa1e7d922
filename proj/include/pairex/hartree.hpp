#pragma once

#include <cmath>
#include <vector>

#include "pairex/grid.hpp"

namespace pairex {

struct TimeGrid {
  double dt = 0.0;
  int steps = 0;

  int nodes() const { return steps + 1; }
  double time(int j) const { return j * dt; }
};

/// d/dt phi = i (Lap phi + (v*|phi|^2) phi).  Signs follow the convention in
/// which the free flow of a plane-wave mode xi is exp(-i |xi|^2 t).
inline Field hartree_rhs(const Field& phi, const Field& v) {
  require_same_grid(*phi.grid, *v.grid, "hartree_rhs");
  Field lap = laplacian(phi);
  Field dens(phi.values.cwiseAbs2().cast<cd>(), phi.grid);
  Field conv = convolve(v, dens);
  Vec out = I * (lap.values + conv.values.cwiseProduct(phi.values));
  return Field(std::move(out), phi.grid);
}

inline std::pair<double, double> conserved_quantities(const Field& phi,
                                                      const Field& v) {
  require_same_grid(*phi.grid, *v.grid, "conserved_quantities");
  const GridSpec& g = *phi.grid;
  double mass = std::real(l2_inner(phi, phi));
  // kinetic part via Parseval
  Vec hat = fft_forward(g, phi.values);
  const auto& mult = g.fourier_multipliers();
  double kinetic = 0;
  for (long i = 0; i < g.total_points(); ++i)
    kinetic += mult[i] * std::norm(hat[i]);
  kinetic *= g.cell_volume() / static_cast<double>(g.total_points());
  Field dens(phi.values.cwiseAbs2().cast<cd>(), phi.grid);
  Field conv = convolve(v, dens);
  double interaction = std::real(l2_inner(conv, dens));
  return {mass, kinetic - 0.5 * interaction};
}

struct HartreeTrajectory {
  TimeGrid time_grid;
  std::vector<Field> phi;         // one per node
  std::vector<double> mass_log;
  std::vector<double> energy_log;
};

namespace detail {

/// One Strang step: half nonlinear phase, exact free flow in Fourier space,
/// half nonlinear phase.  The nonlinear phase leaves |phi| invariant, so each
/// substep is exact for its own flow.
inline void strang_step(Field& phi, const Field& v, double dt) {
  const GridSpec& g = *phi.grid;
  auto half_phase = [&]() {
    Field dens(phi.values.cwiseAbs2().cast<cd>(), phi.grid);
    Field conv = convolve(v, dens);
    for (long i = 0; i < g.total_points(); ++i)
      phi.values[i] *= std::exp(I * conv.values[i].real() * (dt / 2.0));
  };
  half_phase();
  Vec hat = fft_forward(g, phi.values);
  const auto& mult = g.fourier_multipliers();
  for (long i = 0; i < g.total_points(); ++i)
    hat[i] *= std::exp(-I * mult[i] * dt);
  phi.values = fft_inverse(g, std::move(hat));
  half_phase();
}

}  // namespace detail

inline HartreeTrajectory hartree_evolve(const Field& phi0, const Field& v,
                                        double dt, int n_steps) {
  require_same_grid(*phi0.grid, *v.grid, "hartree_evolve");
  if (dt == 0.0) throw config_error("hartree_evolve: dt must be nonzero");
  if (n_steps < 0) throw config_error("hartree_evolve: negative step count");
  if (std::abs(l2_norm(phi0) - 1.0) > 1e-10)
    throw config_error("hartree_evolve: initial datum must have unit L2 norm");

  HartreeTrajectory traj;
  traj.time_grid = {dt, n_steps};
  traj.phi.reserve(n_steps + 1);
  traj.phi.push_back(phi0);
  auto [m0, e0] = conserved_quantities(phi0, v);
  traj.mass_log.push_back(m0);
  traj.energy_log.push_back(e0);

  Field phi = phi0;
  for (int s = 1; s <= n_steps; ++s) {
    detail::strang_step(phi, v, dt);
    if (!phi.values.allFinite())
      throw divergence_error("hartree_evolve: NaN at step " + std::to_string(s));
    auto [m, e] = conserved_quantities(phi, v);
    if (std::abs(m - m0) > 1e-6)
      throw instability_error("hartree_evolve: mass drift " +
                              std::to_string(std::abs(m - m0)) + " at step " +
                              std::to_string(s));
    traj.phi.push_back(phi);
    traj.mass_log.push_back(m);
    traj.energy_log.push_back(e);
  }
  return traj;
}

}  // namespace pairex
