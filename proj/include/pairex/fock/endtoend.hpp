#pragma once

#include <vector>

#include "pairex/fock/oracle.hpp"
#include "pairex/reduction.hpp"

namespace pairex::fock {

struct EndToEndOptions {
  int n_max = 10;
  double tail_threshold = 1e-5;  // coherent mass beyond n_max - 2
  int sample_stride = 1;         // node stride for the derivative check
};

struct EndToEndReport {
  double derivative_dev_max = 0;   // |(1/i) dPsi/dt - L Psi| after Richardson
  double ltilde_identity_dev = 0;  // vector identity for the vacuum residue
  double max_tail = 0;
  std::vector<double> time;
  std::vector<double> lhs;   // approximation error, exact evolution side
  std::vector<double> rhs;   // integrated error-norm bound
  std::vector<double> f_oracle;
  std::vector<double> g_oracle;

  /// True when lhs <= rhs * (1 + slack) at every node.
  bool inequality_ok(double slack) const {
    for (std::size_t j = 0; j < lhs.size(); ++j)
      if (lhs[j] > rhs[j] * (1.0 + slack) + 1e-14) return false;
    return true;
  }
};

/// Full structural check of the corrected approximation on the lattice model:
/// builds Psi(t) = e^{B(t)} e^{sqrt(N) A(t)} e^{itH} e^{-sqrt(N) A(0)} vacuum
/// exactly, verifies its generator against the reduced quadratic form plus
/// the weighted conjugated error terms, verifies the vacuum-residue vector
/// identity, and compares the final approximation error against the
/// integrated bound node by node.
inline EndToEndReport end_to_end_check(const HartreeTrajectory& htraj,
                                       const PairTrajectory& ptraj,
                                       const GMPair& gm,
                                       const DiagnosticsSeries& diag,
                                       const Field& v, double particle_count,
                                       const EndToEndOptions& opt = {}) {
  const GridPtr& grid = htraj.phi.front().grid;
  const TimeGrid& tg = htraj.time_grid;
  const int nn = tg.nodes();
  if (static_cast<int>(ptraj.k.size()) != nn)
    throw internal_error("end_to_end_check: trajectory length mismatch");

  FockSpec spec = FockSpec::build(grid, opt.n_max);
  auto a = all_annihilators(spec);
  RMat lap = laplacian_matrix(grid);
  SpMat h0 = kinetic(spec, a, lap);
  SpMat v_op = interaction(spec, v);
  SpMat h_n = h0 + SpMat(cd(1.0 / particle_count) * v_op);
  const long dim = spec.dimension();
  const double h = grid->cell_volume();
  const double sqn = std::sqrt(particle_count);

  Vec om = vacuum(spec);
  Mat u_dt = (I * tg.dt * Mat(h_n)).exp();
  Vec psi0 = (-sqn * Mat(coherent_generator(spec, a, htraj.phi[0]))).exp() * om;

  EndToEndReport rep;
  rep.time.resize(nn);
  rep.lhs.resize(nn);
  rep.rhs.resize(nn);
  rep.f_oracle.resize(nn);
  rep.g_oracle.resize(nn);

  // First pass: exact evolution, corrected states, error-norm series.
  std::vector<Vec> psi(nn);
  Vec evolved = psi0;
  double acc_f = 0, acc_g = 0;
  for (int j = 0; j < nn; ++j) {
    rep.time[j] = tg.time(j);
    if (j > 0) evolved = u_dt * evolved;
    Mat ea = (sqn * Mat(coherent_generator(spec, a, htraj.phi[j]))).exp();
    Mat eb = Mat(pair_generator(spec, a, ptraj.k[j])).exp();
    psi[j] = eb * (ea * evolved);
    rep.max_tail = std::max(rep.max_tail, tail_mass(spec, psi[j], 2));

    SpMat a_gen = coherent_generator(spec, a, htraj.phi[j]);
    SpMat av = SpMat(a_gen * v_op) - SpMat(v_op * a_gen);
    Vec w = eb.adjoint() * om;
    rep.f_oracle[j] = (eb * (av * w)).norm();
    rep.g_oracle[j] = (eb * (v_op * w)).norm();
    if (j > 0) {
      acc_f += 0.5 * tg.dt * (rep.f_oracle[j - 1] + rep.f_oracle[j]);
      acc_g += 0.5 * tg.dt * (rep.g_oracle[j - 1] + rep.g_oracle[j]);
    }
    rep.rhs[j] = acc_f / sqn + acc_g / particle_count;

    cd phase = std::exp(-I * diag.phase_integral[j]);
    Vec corrected = (-sqn * Mat(coherent_generator(spec, a, htraj.phi[j]))).exp() *
                    (eb.adjoint() * (phase * om));
    rep.lhs[j] = (corrected - evolved).norm();
  }
  if (rep.max_tail > opt.tail_threshold)
    throw truncation_error("end_to_end_check: cutoff leakage " +
                           std::to_string(rep.max_tail));

  // Second pass: generator identity at interior sampled nodes.
  auto tp = transport_of_p(ptraj);
  SpMat id(dim, dim);
  id.setIdentity();
  for (int j = 2; j + 2 < nn; j += opt.sample_stride) {
    Kernel su = ptraj.Sk[j] - s_of_k_minus_u(ptraj.k[j], ptraj.Sk[j], ptraj.tail_tol);
    ReductionNode node{ptraj.u[j], ptraj.p[j], su, tp[j], gm.g_pot[j], gm.m[j]};
    auto dres = d_and_chi1(node);

    SpMat quad(dim, dim);
    const Field& phi = htraj.phi[j];
    Kernel vk = potential_kernel(v);
    for (int x = 0; x < spec.modes(); ++x)
      for (int y = 0; y < spec.modes(); ++y) {
        cd c = h * vk.values()(x, y) * phi.values[x] * std::conj(phi.values[y]);
        if (c != cd(0)) quad += c * SpMat(SpMat(a[x].adjoint()) * a[y]);
        cd cd_term = -h * dres.d.values()(x, y);
        if (cd_term != cd(0))
          quad += cd_term * SpMat(SpMat(a[y].adjoint()) * a[x]);
      }
    for (int x = 0; x < spec.modes(); ++x)
      quad += cd(gm.v_conv_density[j].values[x]) *
              SpMat(SpMat(a[x].adjoint()) * a[x]);

    Mat eb = Mat(pair_generator(spec, a, ptraj.k[j])).exp();
    SpMat a_gen = coherent_generator(spec, a, phi);
    SpMat av = SpMat(a_gen * v_op) - SpMat(v_op * a_gen);
    Mat conj_av = eb * Mat(av) * eb.adjoint();
    Mat conj_v = eb * Mat(v_op) * eb.adjoint();

    Mat l_full = Mat(h0) + Mat(quad) + conj_av / sqn + conj_v / particle_count -
                 (particle_count * diag.chi0[j] + diag.chi1[j]) *
                     Mat::Identity(dim, dim);

    Vec d1 = (psi[j + 1] - psi[j - 1]) / (2.0 * tg.dt);
    Vec d2 = (psi[j + 2] - psi[j - 2]) / (4.0 * tg.dt);
    Vec deriv = (4.0 * d1 - d2) / 3.0;
    double dev = (-I * deriv - l_full * psi[j]).norm();
    rep.derivative_dev_max = std::max(rep.derivative_dev_max, dev);

    // vacuum-residue identity: (L + N chi0 + chi1) vacuum equals the
    // weighted conjugated error terms applied to the vacuum
    Vec lhs_vec = (Mat(h0) + Mat(quad)) * om + conj_av * om / sqn +
                  conj_v * om / particle_count;
    Vec rhs_vec = conj_av * om / sqn + conj_v * om / particle_count;
    rep.ltilde_identity_dev =
        std::max(rep.ltilde_identity_dev, (lhs_vec - rhs_vec).norm());
  }
  return rep;
}

}  // namespace pairex::fock
