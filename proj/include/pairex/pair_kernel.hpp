#pragma once

#include <utility>
#include <vector>

#include "pairex/hartree.hpp"
#include "pairex/kernel.hpp"

namespace pairex {

/// Kernel matrix V(x,y) = v(x-y) of a sampled even potential.
inline Kernel potential_kernel(const Field& v) {
  const GridSpec& g = *v.grid;
  const long n = g.total_points();
  Mat w(n, n);
  for (long x = 0; x < n; ++x) {
    auto cx = g.unflatten(x);
    for (long y = 0; y < n; ++y) {
      auto cy = g.unflatten(y);
      std::vector<int> d(g.dim());
      for (int a = 0; a < g.dim(); ++a)
        d[a] = (cx[a] - cy[a] + g.points_per_axis()) % g.points_per_axis();
      w(x, y) = v.values[g.flatten(d)];
    }
  }
  return Kernel(std::move(w), v.grid, KernelSymmetry::hermitian);
}

/// Potential-dependent coefficient kernels of the pair equation:
///   g_pot(x,y) = -v(x-y) phi(x) conj(phi(y)) - (v*|phi|^2)(x) delta_h(x-y)
///   m(x,y)     =  v(x-y) conj(phi(x)) conj(phi(y))
/// The kinetic -Lap delta part of g lives in the S and T operator
/// applications, never in g_pot.
struct GMPair {
  std::vector<Kernel> g_pot;          // hermitian, one per node
  std::vector<Kernel> m;              // symmetric, one per node
  std::vector<Field> v_conv_density;  // (v*|phi|^2) per node
};

inline GMPair build_g_m(const HartreeTrajectory& traj, const Field& v) {
  if (traj.phi.empty()) throw internal_error("build_g_m: empty trajectory");
  require_same_grid(*traj.phi.front().grid, *v.grid, "build_g_m");
  const GridPtr& grid = traj.phi.front().grid;
  const long n = grid->total_points();
  const double hd = grid->cell_volume();
  Kernel vk = potential_kernel(v);

  GMPair gm;
  gm.g_pot.reserve(traj.phi.size());
  gm.m.reserve(traj.phi.size());
  gm.v_conv_density.reserve(traj.phi.size());
  for (const Field& phi : traj.phi) {
    Field dens(phi.values.cwiseAbs2().cast<cd>(), grid);
    Field conv = convolve(v, dens);
    Mat gp = -vk.values().cwiseProduct(phi.values * phi.values.adjoint());
    for (long x = 0; x < n; ++x) gp(x, x) -= conv.values[x] / hd;
    Mat mm = vk.values().cwiseProduct(phi.values.conjugate() *
                                      phi.values.conjugate().transpose());
    gm.g_pot.emplace_back(std::move(gp), grid, KernelSymmetry::hermitian);
    gm.m.emplace_back(std::move(mm), grid, KernelSymmetry::symmetric);
    gm.v_conv_density.push_back(std::move(conv));
  }
  return gm;
}

// ---------------------------------------------------------------------------
// Spatial operators on kernels

/// Laplacian in the first argument: (Lap_x K) = L K with L the dense spectral
/// Laplacian matrix (no composition weight - L is an operator, not a kernel).
inline Kernel lap_x(const Kernel& k, const RMat& lap) {
  return Kernel(lap * k.values(), k.grid());
}

inline Kernel lap_y(const Kernel& k, const RMat& lap) {
  return Kernel(k.values() * lap, k.grid());
}

inline Kernel commutator(const Kernel& a, const Kernel& b) {
  return compose(a, b) - compose(b, a);
}

// ---------------------------------------------------------------------------
// Duhamel solve of the kernel Schroedinger equation

namespace detail {

inline std::vector<int> kernel_fft_dims(const GridSpec& g) {
  return std::vector<int>(2 * g.dim(), g.points_per_axis());
}

inline Mat kernel_fft_forward(const GridSpec& g, Mat m) {
  fft_nd(kernel_fft_dims(g), FFTW_FORWARD, m.data());
  return m;
}

inline Mat kernel_fft_inverse(const GridSpec& g, Mat m) {
  fft_nd(kernel_fft_dims(g), FFTW_BACKWARD, m.data());
  m /= static_cast<double>(g.total_points()) * static_cast<double>(g.total_points());
  return m;
}

}  // namespace detail

/// Solve S k = F, k(0) = 0, with S = i d/dt - Lap_x - Lap_y, by exact
/// per-mode integration with trapezoidal quadrature of the forcing:
///   khat(t) = -i Int_0^t exp(i(|xi|^2+|eta|^2)(t-s)) Fhat(s) ds.
/// Returns the node series of k and of S k; the latter is F itself, by
/// construction, so residuals never differentiate k in time.
inline std::pair<std::vector<Kernel>, std::vector<Kernel>> duhamel_solve_S(
    const std::vector<Kernel>& F, const GridPtr& grid, const TimeGrid& tg) {
  if (static_cast<int>(F.size()) != tg.nodes())
    throw internal_error("duhamel_solve_S: forcing node count mismatch");
  const GridSpec& g = *grid;
  const long n = g.total_points();
  const auto& mult = g.fourier_multipliers();
  const double dt = tg.dt;

  // phase(x + n*y) = exp(i (|xi_x|^2 + |xi_y|^2) dt); column-major layout.
  Mat phase(n, n);
  for (long y = 0; y < n; ++y)
    for (long x = 0; x < n; ++x)
      phase(x, y) = std::exp(I * ((mult[x] + mult[y]) * dt));

  std::vector<Kernel> k_series;
  std::vector<Kernel> sk_series;
  k_series.reserve(F.size());
  sk_series.reserve(F.size());

  Mat acc = Mat::Zero(n, n);  // Int_0^{t_j} exp(i Lam (t_j - s)) Fhat(s) ds
  Mat prev_hat = detail::kernel_fft_forward(g, F[0].values());
  k_series.push_back(Kernel::zero(grid, KernelSymmetry::symmetric));
  sk_series.push_back(F[0]);
  for (int j = 1; j < tg.nodes(); ++j) {
    Mat cur_hat = detail::kernel_fft_forward(g, F[j].values());
    acc = phase.cwiseProduct(acc + (dt / 2.0) * prev_hat) + (dt / 2.0) * cur_hat;
    Mat k_hat = -I * acc;
    Mat k_mat = detail::kernel_fft_inverse(g, std::move(k_hat));
    k_series.emplace_back(std::move(k_mat), grid, KernelSymmetry::symmetric);
    sk_series.push_back(F[j]);
    prev_hat = std::move(cur_hat);
  }
  return {std::move(k_series), std::move(sk_series)};
}

// ---------------------------------------------------------------------------
// Series reconstruction of S(k - u)

/// S(k - u) from the cached S k via the term-by-term Leibniz expansion of the
/// sh series: in each chain (k kbar)^n k, a k slot differentiates to S k and a
/// kbar slot to -conj(S k); interior Laplacians transfer across compositions
/// exactly because the spectral Laplacian matrix is symmetric.  No time
/// differencing of u is ever performed.
inline Kernel s_of_k_minus_u(const Kernel& k, const Kernel& sk,
                             double tail_tol = 1e-14, int max_terms = 25) {
  const double h = k.h();
  const long n = k.grid()->total_points();
  const Mat w = h * k.values();
  const Mat wb = w.conjugate();
  const Mat r = h * sk.values();
  const Mat rb = -r.conjugate();

  Mat chain = w;   // weighted (k kbar)^n k
  Mat deriv = r;   // its Leibniz derivative
  Mat sum_w = Mat::Zero(n, n);
  double fact = 1.0;  // (2n+1)!
  bool converged = false;
  for (int nn = 1; nn <= max_terms; ++nn) {
    Mat chain_next = w * (wb * chain);
    deriv = r * (wb * chain) + w * (rb * chain) + w * (wb * deriv);
    chain = std::move(chain_next);
    fact *= (2.0 * nn) * (2.0 * nn + 1.0);
    Mat term = deriv / fact;
    sum_w += term;
    if (term.norm() <= tail_tol * std::max(1.0, sum_w.norm())) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw non_convergence_error("s_of_k_minus_u: term cap reached");
  return Kernel(-sum_w / h, k.grid(), KernelSymmetry::symmetric);
}

// ---------------------------------------------------------------------------
// Pair trajectory and fixed-point iteration

struct PairTrajectory {
  TimeGrid time_grid;
  std::vector<Kernel> k;   // symmetric, k(0) = 0
  std::vector<Kernel> u;   // sh(k) per node
  std::vector<Kernel> p;   // ch(k)-1 per node
  std::vector<Kernel> Sk;  // forcing of the accepted Duhamel solve
  int iterate_index = 0;
  std::vector<double> residual_history;  // N(k_{n+1} - k_n) per iteration
  double tail_tol = 1e-14;
};

/// i dp/dt by second-order stencils: centered inside, one-sided at the ends.
inline std::vector<Kernel> time_derivative(const std::vector<Kernel>& series,
                                           const TimeGrid& tg) {
  const int nn = tg.nodes();
  if (static_cast<int>(series.size()) != nn || nn < 3)
    throw internal_error("time_derivative: need at least 3 nodes");
  const double dt = tg.dt;
  std::vector<Kernel> out;
  out.reserve(nn);
  for (int j = 0; j < nn; ++j) {
    Mat d;
    if (j == 0)
      d = (-3.0 * series[0].values() + 4.0 * series[1].values() -
           series[2].values()) /
          (2.0 * dt);
    else if (j == nn - 1)
      d = (3.0 * series[nn - 1].values() - 4.0 * series[nn - 2].values() +
           series[nn - 3].values()) /
          (2.0 * dt);
    else
      d = (series[j + 1].values() - series[j - 1].values()) / (2.0 * dt);
    out.emplace_back(std::move(d), series[j].grid());
  }
  return out;
}

/// T p = i dp/dt - Lap_x p + Lap_y p by centered time differences plus exact
/// spectral Laplacians.  Kept as a cross-check; the production path below
/// reconstructs T p algebraically, which keeps the balance kernel hermitian
/// to iteration accuracy instead of to O(dt^2).
inline std::vector<Kernel> transport_of_p_fd(const std::vector<Kernel>& p,
                                             const TimeGrid& tg,
                                             const RMat& lap) {
  auto dpdt = time_derivative(p, tg);
  std::vector<Kernel> out;
  out.reserve(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    Mat t = I * dpdt[j].values() - lap * p[j].values() + p[j].values() * lap;
    out.emplace_back(std::move(t), p[j].grid());
  }
  return out;
}

/// T p from the cached S k via the Leibniz expansion of the ch series: in
/// each chain (k kbar)^n a k slot differentiates to S k and a kbar slot to
/// -conj(S k); the interior Laplacian transfers make the result exact given
/// S k, with no time differencing at all.
inline Kernel t_of_p_series(const Kernel& k, const Kernel& sk,
                            double tail_tol = 1e-14, int max_terms = 25) {
  const double h = k.h();
  const long n = k.grid()->total_points();
  const Mat w = h * k.values();
  const Mat wb = w.conjugate();
  const Mat r = h * sk.values();
  const Mat rb = -r.conjugate();

  Mat chain = Mat::Identity(n, n);  // weighted (k kbar)^n
  Mat deriv = Mat::Zero(n, n);
  Mat sum_w = Mat::Zero(n, n);
  double fact = 1.0;  // (2n)!
  bool converged = false;
  for (int nn = 1; nn <= max_terms; ++nn) {
    deriv = r * (wb * chain) + w * (rb * chain) + w * (wb * deriv);
    chain = w * (wb * chain);
    fact *= (2.0 * nn - 1.0) * (2.0 * nn);
    Mat term = deriv / fact;
    sum_w += term;
    if (term.norm() <= tail_tol * std::max(1.0, sum_w.norm())) {
      converged = true;
      break;
    }
  }
  if (!converged) throw non_convergence_error("t_of_p_series: term cap reached");
  return Kernel(sum_w / h, k.grid());
}

inline std::vector<Kernel> transport_of_p(const PairTrajectory& traj) {
  std::vector<Kernel> out;
  out.reserve(traj.k.size());
  for (std::size_t j = 0; j < traj.k.size(); ++j)
    out.push_back(t_of_p_series(traj.k[j], traj.Sk[j], traj.tail_tol));
  return out;
}

/// Forcing of the fixed-point map, per node:
///   F = m + S(k-u) - (g_pot u + u g_pot^T) + p m
///       + (Tp + [g_pot,p] + u mbar) o (1+p)^{-1} u,
/// returned symmetrized: only the symmetric part of the pair-creation
/// coefficient acts, and the antisymmetric remainder of this grouping is
/// proportional to the current equation residual, so it contracts to zero
/// along the iteration.
inline std::vector<Kernel> rhs_F(const PairTrajectory& traj, const GMPair& gm) {
  const int nn = traj.time_grid.nodes();
  if (static_cast<int>(traj.k.size()) != nn ||
      static_cast<int>(traj.u.size()) != nn ||
      static_cast<int>(traj.p.size()) != nn ||
      static_cast<int>(traj.Sk.size()) != nn)
    throw internal_error("rhs_F: trajectory caches missing");
  auto tp = transport_of_p(traj);
  std::vector<Kernel> F;
  F.reserve(nn);
  for (int j = 0; j < nn; ++j) {
    const Kernel& k = traj.k[j];
    const Kernel& u = traj.u[j];
    const Kernel& p = traj.p[j];
    const Kernel& g = gm.g_pot[j];
    const Kernel& m = gm.m[j];
    Kernel f = gm.m[j] + s_of_k_minus_u(k, traj.Sk[j], traj.tail_tol) -
               (compose(g, u) + compose(u, transpose(g))) + compose(p, m);
    Kernel w = tp[j] + commutator(g, p) + compose(u, conj(m));
    f = f + compose(w, solve_one_plus_p(p, u));
    Mat sym = 0.5 * (f.values() + f.values().transpose().eval());
    F.emplace_back(std::move(sym), f.grid(), KernelSymmetry::symmetric);
  }
  return F;
}

/// Iteration norm N(k) = sup_t |k|_{L2} + sup_t |S k|_{L2}.
inline double n_norm(const std::vector<Kernel>& k,
                     const std::vector<Kernel>& sk) {
  double a = 0, b = 0;
  for (const auto& x : k) a = std::max(a, x.norm());
  for (const auto& x : sk) b = std::max(b, x.norm());
  return a + b;
}

/// Per-node L2(dx dy) norm of (lhs - rhs) of the pair equation, assembled
/// from kernel compositions, the cached S k, and centered differences for
/// i p_t only.  At the converged trajectory this vanishes up to the stopping
/// tolerance.
inline std::vector<double> residual_newnls(const PairTrajectory& traj,
                                           const GMPair& gm) {
  const int nn = traj.time_grid.nodes();
  auto tp = transport_of_p(traj);
  std::vector<double> res;
  res.reserve(nn);
  for (int j = 0; j < nn; ++j) {
    const Kernel& u = traj.u[j];
    const Kernel& p = traj.p[j];
    const Kernel& g = gm.g_pot[j];
    const Kernel& m = gm.m[j];
    Kernel su = traj.Sk[j] - s_of_k_minus_u(traj.k[j], traj.Sk[j], traj.tail_tol);
    Kernel lhs = su + compose(g, u) + compose(u, transpose(g)) -
                 (m + compose(p, m));
    Kernel w = tp[j] + commutator(g, p) + compose(u, conj(m));
    Kernel rhs = compose(w, solve_one_plus_p(p, u));
    res.push_back((lhs - rhs).norm());
  }
  return res;
}

/// Picard iteration for the pair kernel: each sweep assembles the forcing at
/// the current iterate and re-solves the linear Duhamel problem.  Stops when
/// N(k_{n+1} - k_n) < tol * max(1, N(k_n)).
inline PairTrajectory picard_solve(const HartreeTrajectory& htraj,
                                   const Field& v, double tol, int max_iter,
                                   double tail_tol = 1e-14) {
  if (!(tol > 0)) throw config_error("picard_solve: tol must be positive");
  if (max_iter < 1) throw config_error("picard_solve: max_iter must be >= 1");
  const GridPtr& grid = htraj.phi.front().grid;
  GMPair gm = build_g_m(htraj, v);

  PairTrajectory traj;
  traj.time_grid = htraj.time_grid;
  traj.tail_tol = tail_tol;
  const int nn = traj.time_grid.nodes();
  traj.k.assign(nn, Kernel::zero(grid, KernelSymmetry::symmetric));
  traj.u = traj.k;
  traj.p.assign(nn, Kernel::zero(grid, KernelSymmetry::hermitian));
  traj.Sk.assign(nn, Kernel::zero(grid));

  for (int iter = 0; iter < max_iter; ++iter) {
    auto F = rhs_F(traj, gm);
    auto [k_new, sk_new] = duhamel_solve_S(F, grid, traj.time_grid);
    std::vector<Kernel> dk, dsk;
    dk.reserve(nn);
    dsk.reserve(nn);
    for (int j = 0; j < nn; ++j) {
      dk.push_back(k_new[j] - traj.k[j]);
      dsk.push_back(sk_new[j] - traj.Sk[j]);
    }
    double diff = n_norm(dk, dsk);
    if (!std::isfinite(diff))
      throw divergence_error("picard_solve: NaN in iterate " +
                             std::to_string(iter));
    traj.k = std::move(k_new);
    traj.Sk = std::move(sk_new);
    for (int j = 0; j < nn; ++j) {
      auto [u, p] = sh_ch_series(traj.k[j], tail_tol);
      traj.u[j] = std::move(u);
      traj.p[j] = std::move(p);
    }
    traj.iterate_index = iter + 1;
    traj.residual_history.push_back(diff);
    if (diff < tol * std::max(1.0, n_norm(traj.k, traj.Sk))) return traj;
  }
  const auto& h = traj.residual_history;
  if (h.size() >= 2 && h.back() >= h[h.size() - 2])
    throw non_convergence_error(
        "picard_solve: no contraction, last two update norms " +
        std::to_string(h[h.size() - 2]) + ", " + std::to_string(h.back()) +
        " (coupling too large?)");
  throw non_convergence_error("picard_solve: max_iter reached, last update " +
                              std::to_string(h.back()));
}

}  // namespace pairex
