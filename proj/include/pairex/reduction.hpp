#pragma once

#include <vector>

#include "pairex/pair_kernel.hpp"

namespace pairex {

/// chi0 = 1/2 Int v(x-y) |phi(x)|^2 |phi(y)|^2, via one convolution and one
/// inner product; exactly invariant under global phase rotation of phi.
inline double chi0(const Field& phi, const Field& v) {
  require_same_grid(*phi.grid, *v.grid, "chi0");
  Field dens(phi.values.cwiseAbs2().cast<cd>(), phi.grid);
  Field conv = convolve(v, dens);
  return 0.5 * std::real(l2_inner(conv, dens));
}

/// Inputs for the per-node quadratic-reduction diagnostics.  Su is
/// reconstructed from the cached S k, never by differencing u in time.
struct ReductionNode {
  const Kernel& u;
  const Kernel& p;
  const Kernel& su;     // S applied to u = Sk - S(k-u)
  const Kernel& tp;     // T applied to p
  const Kernel& g_pot;  // non-delta, non-kinetic part of g
  const Kernel& m;
};

struct DKernelResult {
  Kernel d;
  double chi1;          // -1/2 Re tr d
  double trace_imag;    // logged, not asserted: exact reality holds only at
                        // true solutions
};

/// Pair-annihilation/creation-balance kernel
///   d = (Su + g u + u g^T) o ubar - (Tp + [g,p]) o (delta + p)
///       - u o mbar o (delta + p) - (delta + p) o m o ubar
/// with every delta composition reduced symbolically, so no bare delta ever
/// reaches the trace.
inline DKernelResult d_and_chi1(const ReductionNode& n) {
  Kernel ubar = conj(n.u);
  Kernel mbar = conj(n.m);
  Kernel a = n.su + compose(n.g_pot, n.u) + compose(n.u, transpose(n.g_pot));
  Kernel w = n.tp + commutator(n.g_pot, n.p);
  Kernel umbar = compose(n.u, mbar);
  Kernel mub = compose(n.m, ubar);
  Kernel d = compose(a, ubar) - (w + compose(w, n.p)) -
             (umbar + compose(umbar, n.p)) - (mub + compose(n.p, mub));
  cd tr = trace_diag(d);
  return {std::move(d), -0.5 * tr.real(), tr.imag()};
}

/// L2 norm of the pair-creation coefficient
///   (Su + g u + u g^T) o chbar - (Tp + [g,p]) o u - u o mbar o u
///   - (delta+p) o m o (delta+pbar),
/// which vanishes at an exact solution of the pair equation.
inline double astar_coeff_norm(const ReductionNode& n) {
  Kernel pbar = conj(n.p);
  Kernel mbar = conj(n.m);
  Kernel a = n.su + compose(n.g_pot, n.u) + compose(n.u, transpose(n.g_pot));
  Kernel w = n.tp + commutator(n.g_pot, n.p);
  Kernel pm = compose(n.p, n.m);
  Kernel coeff = a + compose(a, pbar) - compose(w, n.u) -
                 compose(compose(n.u, mbar), n.u) -
                 (n.m + pm + compose(n.m, pbar) + compose(pm, pbar));
  return coeff.norm();
}

/// Cumulative trapezoidal integral of N chi0 + chi1 on the shared time grid.
inline std::vector<double> phase_integral(const std::vector<double>& chi0_series,
                                          const std::vector<double>& chi1_series,
                                          double particle_count,
                                          const TimeGrid& tg) {
  if (chi0_series.size() != chi1_series.size() ||
      static_cast<int>(chi0_series.size()) != tg.nodes())
    throw internal_error("phase_integral: series size mismatch");
  std::vector<double> out(chi0_series.size(), 0.0);
  for (std::size_t j = 1; j < out.size(); ++j) {
    double a = particle_count * chi0_series[j - 1] + chi1_series[j - 1];
    double b = particle_count * chi0_series[j] + chi1_series[j];
    out[j] = out[j - 1] + 0.5 * tg.dt * (a + b);
  }
  return out;
}

/// Per-node diagnostics of a solved run; f/g/bound columns are filled by the
/// error-norm stage when the grid admits it.
struct DiagnosticsSeries {
  std::vector<double> time;
  std::vector<double> chi0;
  std::vector<double> chi1;
  std::vector<double> trace_d_imag;
  std::vector<double> astar_coeff_norm;
  std::vector<double> residual;
  std::vector<double> sh_diag_norm;  // |u(x,x)|_{L2(dx)}, reported only
  std::vector<double> f_err;
  std::vector<double> g_err;
  std::vector<double> bound;
  std::vector<double> phase_integral;
};

/// Fill the reduction columns (everything except f/g/bound) from a converged
/// pair trajectory.
inline DiagnosticsSeries reduce_diagnostics(const HartreeTrajectory& htraj,
                                            const PairTrajectory& traj,
                                            const GMPair& gm, const Field& v,
                                            double particle_count) {
  const int nn = traj.time_grid.nodes();
  const GridPtr& grid = htraj.phi.front().grid;
  auto tp = transport_of_p(traj);
  auto res = residual_newnls(traj, gm);

  DiagnosticsSeries out;
  out.time.resize(nn);
  out.chi0.resize(nn);
  out.chi1.resize(nn);
  out.trace_d_imag.resize(nn);
  out.astar_coeff_norm.resize(nn);
  out.residual = res;
  out.sh_diag_norm.resize(nn);
  for (int j = 0; j < nn; ++j) {
    out.time[j] = traj.time_grid.time(j);
    out.chi0[j] = chi0(htraj.phi[j], v);
    Kernel su = traj.Sk[j] - s_of_k_minus_u(traj.k[j], traj.Sk[j], traj.tail_tol);
    ReductionNode node{traj.u[j], traj.p[j], su, tp[j], gm.g_pot[j], gm.m[j]};
    auto dres = d_and_chi1(node);
    out.chi1[j] = dres.chi1;
    out.trace_d_imag[j] = dres.trace_imag;
    out.astar_coeff_norm[j] = astar_coeff_norm(node);
    out.sh_diag_norm[j] =
        std::sqrt(grid->cell_volume() *
                  traj.u[j].values().diagonal().cwiseAbs2().sum());
  }
  out.phase_integral =
      phase_integral(out.chi0, out.chi1, particle_count, traj.time_grid);
  return out;
}

}  // namespace pairex
