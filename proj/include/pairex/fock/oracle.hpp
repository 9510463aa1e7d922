#pragma once

#include <random>
#include <string>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "pairex/fock/operators.hpp"

namespace pairex::fock {

/// exp(scale * G) v by dense Pade exponential; guards unitarity (the callers
/// only exponentiate skew-hermitian combinations) and reports cutoff leakage.
struct UnitaryApplyResult {
  Vec state;
  double tail = 0;  // mass beyond n_max - 2
};

inline UnitaryApplyResult unitary_apply(const FockSpec& spec, const SpMat& gen,
                                        cd scale, const Vec& v,
                                        double tail_threshold = 1e-8) {
  Mat e = (scale * Mat(gen)).exp();
  UnitaryApplyResult r{e * v, 0.0};
  double n_in = v.norm(), n_out = r.state.norm();
  if (std::abs(n_in - n_out) > 1e-10 * std::max(1.0, n_in))
    throw internal_error("unitary_apply: norm not preserved; generator*scale "
                         "is not skew-hermitian");
  r.tail = tail_mass(spec, r.state, 2);
  if (r.tail > tail_threshold)
    throw truncation_error("unitary_apply: cutoff leakage " +
                           std::to_string(r.tail) + " exceeds threshold");
  return r;
}

/// Closed-form coherent state exp(-sqrt(N) A(phi)) applied to the vacuum:
/// amplitude prod_j alpha_j^{n_j} / sqrt(n_j!) times exp(-N |phi|^2 / 2),
/// alpha_j = sqrt(N h) phi_j.
inline Vec coherent_state(const FockSpec& spec, const Field& phi,
                          double particle_count) {
  const double h = spec.grid()->cell_volume();
  double norm2 = 0;
  for (int j = 0; j < spec.modes(); ++j) norm2 += h * std::norm(phi.values[j]);
  Vec out(spec.dimension());
  for (long s = 0; s < spec.dimension(); ++s) {
    const auto& occ = spec.occupation(s);
    cd amp = std::exp(-0.5 * particle_count * norm2);
    for (int j = 0; j < spec.modes(); ++j) {
      cd alpha = std::sqrt(particle_count * h) * phi.values[j];
      for (int r = 1; r <= occ[j]; ++r) amp *= alpha / std::sqrt(double(r));
    }
    out[s] = amp;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Slot payload <-> occupation amplitudes

/// Amplitude of an occupation tuple given the symmetric n-particle slot
/// function psi_n: c = sqrt(n!/prod n_j!) h^{n/2} psi_n(arrangement).
template <typename PsiFn>
inline Vec amplitudes_from_slot(const FockSpec& spec, int n, PsiFn&& psi) {
  const double h = spec.grid()->cell_volume();
  auto [lo, hi] = spec.sector(n);
  Vec out = Vec::Zero(spec.dimension());
  for (long s = lo; s < hi; ++s) {
    const auto& occ = spec.occupation(s);
    std::vector<long> sites;
    for (int j = 0; j < spec.modes(); ++j)
      for (int r = 0; r < occ[j]; ++r) sites.push_back(j);
    double fact = 1.0;
    for (int r = 2; r <= n; ++r) fact *= r;
    double denom = 1.0;
    for (int j = 0; j < spec.modes(); ++j)
      for (int r = 2; r <= occ[j]; ++r) denom *= r;
    out[s] = std::sqrt(fact / denom) * std::pow(h, 0.5 * n) * psi(sites);
  }
  return out;
}

/// Norm of the components of v lying in the total-occupation-n sector.
inline double sector_norm(const FockSpec& spec, const Vec& v, int n) {
  auto [lo, hi] = spec.sector(n);
  double s = 0;
  for (long i = lo; i < hi; ++i) s += std::norm(v[i]);
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Exact error states

struct OracleErrorState {
  Vec g_state;  // e^B V e^{-B} vacuum
  Vec f_state;  // e^B [A,V] e^{-B} vacuum
  double g_norm = 0;
  double f_norm = 0;
};

inline OracleErrorState oracle_error_state(const FockSpec& spec,
                                           const std::vector<SpMat>& a,
                                           const Field& phi, const Kernel& k,
                                           const Field& v) {
  SpMat b = pair_generator(spec, a, k);
  SpMat a_gen = coherent_generator(spec, a, phi);
  SpMat v_op = interaction(spec, v);
  Mat eb = Mat(b).exp();
  Mat eb_inv = eb.adjoint();  // B is skew-hermitian
  SpMat av = SpMat(a_gen * v_op) - SpMat(v_op * a_gen);
  Vec om = vacuum(spec);
  OracleErrorState r;
  r.g_state = eb * (v_op * (eb_inv * om));
  r.f_state = eb * (av * (eb_inv * om));
  r.g_norm = r.g_state.norm();
  r.f_norm = r.f_state.norm();
  return r;
}

// ---------------------------------------------------------------------------
// Algebra verification

struct IdentityReport {
  std::string name;
  double deviation = 0;
  double tolerance = 0;
  bool pass = false;
};

struct AlgebraReport {
  std::vector<IdentityReport> identities;
  bool all_pass() const {
    for (const auto& i : identities)
      if (!i.pass) return false;
    return true;
  }
};

namespace detail {

/// Largest column norm of op over inputs with occupation <= n_max - margin;
/// with enough margin all operator products below are exact on these columns.
inline double safe_deviation(const FockSpec& spec, const SpMat& op, int margin) {
  Mat dense(op);
  double dev = 0;
  for (long c : spec.safe_indices(margin)) dev = std::max(dev, dense.col(c).norm());
  return dev;
}

inline SpMat comm(const SpMat& x, const SpMat& y) {
  return SpMat(x * y) - SpMat(y * x);
}

}  // namespace detail

/// Runs the full identity suite on a small lattice model: the four quadratic
/// commutation relations, the first-order and exponential conjugation rules
/// for quadratics, bracket preservation of the sp isomorphism, and the four
/// nested coherent-generator commutators against their closed forms.
inline AlgebraReport verify_algebra(GridPtr grid, int n_max, const Field& phi,
                                    const Field& v, double tolerance = 1e-12,
                                    unsigned seed = 7) {
  FockSpec spec = FockSpec::build(grid, n_max);
  if (spec.dimension() > 10000)
    throw config_error("verify_algebra: dimension too large for dense checks");
  auto a = all_annihilators(spec);
  const int m = spec.modes();
  const double h = grid->cell_volume();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  auto rand_vec = [&](long n) {
    Vec r(n);
    for (long i = 0; i < n; ++i) r[i] = cd(gauss(rng), gauss(rng));
    return r;
  };
  auto rand_kernel = [&](KernelSymmetry sym, double scale) {
    long n = grid->total_points();
    Mat r(n, n);
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j) r(i, j) = scale * cd(gauss(rng), gauss(rng));
    if (sym == KernelSymmetry::symmetric) r = 0.5 * (r + r.transpose().eval());
    if (sym == KernelSymmetry::hermitian) r = 0.5 * (r + r.adjoint().eval());
    return Kernel(std::move(r), grid, sym);
  };

  AlgebraReport rep;
  auto push = [&](const std::string& name, double dev, double tol) {
    rep.identities.push_back({name, dev, tol, dev < tol});
  };

  // (i) quadratic building-block commutators, all site tuples
  {
    std::vector<SpMat> adag(m);
    for (int j = 0; j < m; ++j) adag[j] = SpMat(a[j].adjoint());
    auto nsym = [&](int i, int j) {
      return SpMat(cd(0.5) * (SpMat(a[i] * adag[j]) + SpMat(adag[j] * a[i])));
    };
    double dev_qq = 0, dev_qn = 0, dev_nq = 0, dev_nn = 0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        for (int kk = 0; kk < m; ++kk)
          for (int l = 0; l < m; ++l) {
            SpMat q_ij(a[i] * a[j]), qd_kl(adag[kk] * adag[l]);
            SpMat lhs = detail::comm(q_ij, qd_kl);
            SpMat rhs(spec.dimension(), spec.dimension());
            if (i == kk) rhs += nsym(j, l);
            if (i == l) rhs += nsym(j, kk);
            if (j == kk) rhs += nsym(i, l);
            if (j == l) rhs += nsym(i, kk);
            dev_qq = std::max(dev_qq,
                              detail::safe_deviation(spec, SpMat(lhs - rhs), 2));

            SpMat n_kl = nsym(kk, l);
            lhs = detail::comm(q_ij, n_kl);
            rhs = SpMat(spec.dimension(), spec.dimension());
            if (i == l) rhs += SpMat(a[j] * a[kk]);
            if (j == l) rhs += SpMat(a[i] * a[kk]);
            dev_qn = std::max(dev_qn,
                              detail::safe_deviation(spec, SpMat(lhs - rhs), 2));

            SpMat n_ij = nsym(i, j);
            lhs = detail::comm(n_ij, qd_kl);
            rhs = SpMat(spec.dimension(), spec.dimension());
            if (i == kk) rhs += SpMat(adag[j] * adag[l]);
            if (i == l) rhs += SpMat(adag[j] * adag[kk]);
            dev_nq = std::max(dev_nq,
                              detail::safe_deviation(spec, SpMat(lhs - rhs), 2));

            lhs = detail::comm(n_ij, n_kl);
            rhs = SpMat(spec.dimension(), spec.dimension());
            if (i == l) rhs += nsym(kk, j);
            if (j == kk) rhs -= nsym(i, l);
            dev_nn = std::max(dev_nn,
                              detail::safe_deviation(spec, SpMat(lhs - rhs), 2));
          }
    push("pair_pair_commutator", dev_qq, tolerance);
    push("pair_number_commutator", dev_qn, tolerance);
    push("number_pair_commutator", dev_nq, tolerance);
    push("number_number_commutator", dev_nn, tolerance);
  }

  // (ii) first-order conjugation [Q, a(f)+a*(g)] = (a,a*) S (f;g)
  {
    Kernel d = rand_kernel(KernelSymmetry::general, 0.5);
    Kernel kk = rand_kernel(KernelSymmetry::symmetric, 0.5);
    Kernel l = rand_kernel(KernelSymmetry::symmetric, 0.5);
    Vec f = rand_vec(m), g = rand_vec(m);
    SpMat q = quadratic(spec, a, d, kk, l);
    SpMat phi_op = field_operator(spec, a, f, g);
    Vec sf = h * (d.values() * f) + h * (kk.values() * g);
    Vec sg = h * (l.values() * f) - h * (d.values().transpose() * g);
    SpMat rhs = field_operator(spec, a, sf, sg);
    double dev = detail::safe_deviation(
        spec, SpMat(detail::comm(q, phi_op) - rhs), 2);
    push("quadratic_field_commutator", dev, tolerance);
  }

  // (iii) exponential conjugation e^Q (a,a*)(f;g) e^-Q = (a,a*) e^S (f;g).
  // Kernel scales stay small so the occupation cutoff leaks below tolerance.
  {
    Kernel d = rand_kernel(KernelSymmetry::general, 1e-3);
    Kernel kk = rand_kernel(KernelSymmetry::symmetric, 1e-3);
    Kernel l = rand_kernel(KernelSymmetry::symmetric, 1e-3);
    Vec f = rand_vec(m), g = rand_vec(m);
    Mat q = Mat(quadratic(spec, a, d, kk, l));
    Mat eq = q.exp();
    Mat eq_inv = (-q).exp();
    Mat phi_op = Mat(field_operator(spec, a, f, g));
    Mat lhs = eq * phi_op * eq_inv;
    Mat w = sp_block_exp_weighted(d, kk, l);
    Vec stacked(2 * m);
    stacked.head(m) = f;
    stacked.tail(m) = g;
    Vec es = w * stacked;
    Mat rhs = Mat(field_operator(spec, a, es.head(m), es.tail(m)));
    Mat diff = lhs - rhs;
    double dev = 0;
    for (long c : spec.safe_indices(2)) dev = std::max(dev, diff.col(c).norm());
    push("exponential_conjugation", dev, tolerance);
  }

  // (iv) bracket preservation of S -> Q on random sp pairs
  {
    double dev = 0;
    for (int rep_i = 0; rep_i < 3; ++rep_i) {
      Kernel d1 = rand_kernel(KernelSymmetry::general, 0.5);
      Kernel k1 = rand_kernel(KernelSymmetry::symmetric, 0.5);
      Kernel l1 = rand_kernel(KernelSymmetry::symmetric, 0.5);
      Kernel d2 = rand_kernel(KernelSymmetry::general, 0.5);
      Kernel k2 = rand_kernel(KernelSymmetry::symmetric, 0.5);
      Kernel l2 = rand_kernel(KernelSymmetry::symmetric, 0.5);
      long n = grid->total_points();
      auto weighted = [&](const Kernel& dd, const Kernel& kk2, const Kernel& ll) {
        Mat b(2 * n, 2 * n);
        b.block(0, 0, n, n) = h * dd.values();
        b.block(0, n, n, n) = h * kk2.values();
        b.block(n, 0, n, n) = h * ll.values();
        b.block(n, n, n, n) = -h * dd.values().transpose();
        return b;
      };
      Mat w1 = weighted(d1, k1, l1), w2 = weighted(d2, k2, l2);
      Mat w3 = w1 * w2 - w2 * w1;
      Kernel d3(w3.block(0, 0, n, n) / h, grid);
      Kernel k3(w3.block(0, n, n, n) / h, grid, KernelSymmetry::symmetric);
      Kernel l3(w3.block(n, 0, n, n) / h, grid, KernelSymmetry::symmetric);
      SpMat lhs = quadratic(spec, a, d3, k3, l3);
      SpMat rhs = detail::comm(quadratic(spec, a, d1, k1, l1),
                               quadratic(spec, a, d2, k2, l2));
      dev = std::max(dev,
                     detail::safe_deviation(spec, SpMat(lhs - rhs), 4));
    }
    push("bracket_preservation", dev, tolerance);
  }

  // (v) nested coherent-generator commutators against their closed forms
  {
    SpMat v_op = interaction(spec, v);
    SpMat a_gen = coherent_generator(spec, a, phi);
    SpMat c1 = detail::comm(a_gen, v_op);
    SpMat c1_expr = commutator_av_expression(spec, a, phi, v);
    push("coherent_commutator_1",
         detail::safe_deviation(spec, SpMat(c1 - c1_expr), 2), tolerance);
    SpMat c2 = detail::comm(a_gen, c1);
    SpMat c2_expr = commutator_aav_expression(spec, a, phi, v);
    push("coherent_commutator_2",
         detail::safe_deviation(spec, SpMat(c2 - c2_expr), 2), tolerance);
    SpMat c3 = detail::comm(a_gen, c2);
    SpMat c3_expr = commutator_aaav_expression(spec, a, phi, v);
    push("coherent_commutator_3",
         detail::safe_deviation(spec, SpMat(c3 - c3_expr), 3), tolerance);
    SpMat c4 = detail::comm(a_gen, c3);
    double scalar = quadruple_commutator_scalar(phi, v);
    SpMat id(spec.dimension(), spec.dimension());
    id.setIdentity();
    push("coherent_commutator_4",
         detail::safe_deviation(spec, SpMat(c4 - SpMat(cd(scalar) * id)), 4),
         tolerance);
  }

  return rep;
}

}  // namespace pairex::fock
