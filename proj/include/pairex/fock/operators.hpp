#pragma once

#include <vector>

#include "pairex/fock/basis.hpp"
#include "pairex/kernel.hpp"

namespace pairex::fock {

/// Site annihilator a_j: <n - e_j| a_j |n> = sqrt(n_j).  Site operators are
/// unweighted; the continuum distributions a_x carry h^{-1/2} per leg, and
/// every builder below folds those lattice weights into its coefficients.
inline SpMat annihilator(const FockSpec& spec, int site) {
  std::vector<Eigen::Triplet<cd>> trip;
  for (long col = 0; col < spec.dimension(); ++col) {
    const auto& occ = spec.occupation(col);
    if (occ[site] == 0) continue;
    std::vector<int> lowered = occ;
    lowered[site] -= 1;
    long row = spec.find(lowered);
    if (row >= 0) trip.emplace_back(row, col, std::sqrt(double(occ[site])));
  }
  SpMat a(spec.dimension(), spec.dimension());
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

inline std::vector<SpMat> all_annihilators(const FockSpec& spec) {
  std::vector<SpMat> out;
  out.reserve(spec.modes());
  for (int j = 0; j < spec.modes(); ++j) out.push_back(annihilator(spec, j));
  return out;
}

inline SpMat number_operator(const FockSpec& spec) {
  std::vector<Eigen::Triplet<cd>> trip;
  for (long i = 0; i < spec.dimension(); ++i)
    trip.emplace_back(i, i, double(spec.total_occupation(i)));
  SpMat n(spec.dimension(), spec.dimension());
  n.setFromTriplets(trip.begin(), trip.end());
  return n;
}

/// Kinetic term sum_{jl} Lap_{jl} a^dag_j a_l with the same spectral
/// Laplacian matrix the grid module uses (sign convention +Lap).
inline SpMat kinetic(const FockSpec& spec, const std::vector<SpMat>& a,
                     const RMat& lap) {
  SpMat h0(spec.dimension(), spec.dimension());
  for (int j = 0; j < spec.modes(); ++j)
    for (int l = 0; l < spec.modes(); ++l) {
      if (lap(j, l) == 0.0) continue;
      h0 += cd(lap(j, l)) * SpMat(SpMat(a[j].adjoint()) * a[l]);
    }
  return h0;
}

/// Interaction 1/2 Int v(x-y) a*_x a*_y a_x a_y dx dy.  The four h^{-1/2} leg
/// weights cancel the h^2 measure, and the operator is diagonal:
/// <n|V|n> = 1/2 sum_{ij} v_ij (n_i n_j - delta_ij n_i).
inline SpMat interaction(const FockSpec& spec, const Field& v) {
  const GridSpec& g = *spec.grid();
  Kernel vk = potential_kernel(v);
  std::vector<Eigen::Triplet<cd>> trip;
  for (long s = 0; s < spec.dimension(); ++s) {
    const auto& occ = spec.occupation(s);
    cd val = 0;
    for (int i = 0; i < g.points_per_axis(); ++i)
      for (int j = 0; j < g.points_per_axis(); ++j) {
        double nn = double(occ[i]) * occ[j] - (i == j ? occ[i] : 0.0);
        val += 0.5 * vk.values()(i, j) * nn;
      }
    if (val != cd(0)) trip.emplace_back(s, s, val);
  }
  SpMat vv(spec.dimension(), spec.dimension());
  vv.setFromTriplets(trip.begin(), trip.end());
  return vv;
}

/// Coherent generator A = a(phibar) - a*(phi) = h^{1/2} sum_j (phibar_j a_j
/// - phi_j a^dag_j); skew-hermitian by construction.
inline SpMat coherent_generator(const FockSpec& spec,
                                const std::vector<SpMat>& a, const Field& phi) {
  const double w = std::sqrt(spec.grid()->cell_volume());
  SpMat out(spec.dimension(), spec.dimension());
  for (int j = 0; j < spec.modes(); ++j) {
    out += cd(w) * (std::conj(phi.values[j]) * a[j] -
                    phi.values[j] * SpMat(a[j].adjoint()));
  }
  return out;
}

/// Pair generator B = 1/2 Int (k a a - kbar a* a*) = h/2 sum_ij (k_ij a_i a_j
/// - kbar_ij a^dag_i a^dag_j); skew-hermitian for symmetric k.
inline SpMat pair_generator(const FockSpec& spec, const std::vector<SpMat>& a,
                            const Kernel& k) {
  if (k.symmetry() != KernelSymmetry::symmetric)
    throw config_error("pair_generator: k must be symmetric");
  const double w = spec.grid()->cell_volume();
  SpMat out(spec.dimension(), spec.dimension());
  for (int i = 0; i < spec.modes(); ++i)
    for (int j = 0; j < spec.modes(); ++j) {
      cd kij = k.values()(i, j);
      if (kij == cd(0)) continue;
      out += cd(0.5 * w) * (kij * SpMat(a[i] * a[j]) -
                            std::conj(kij) * SpMat(SpMat(a[i].adjoint()) *
                                                   SpMat(a[j].adjoint())));
    }
  return out;
}

/// Quadratic Q(d,k,l) = -Int d N'_{xy} + 1/2 Int k a a - 1/2 Int l a* a*,
/// N'_{xy} the symmetrized (a_x a*_y + a*_y a_x)/2.  k and l symmetric.
inline SpMat quadratic(const FockSpec& spec, const std::vector<SpMat>& a,
                       const Kernel& d, const Kernel& k, const Kernel& l) {
  const double w = spec.grid()->cell_volume();
  SpMat out(spec.dimension(), spec.dimension());
  for (int i = 0; i < spec.modes(); ++i)
    for (int j = 0; j < spec.modes(); ++j) {
      cd dij = d.values()(i, j);
      if (dij != cd(0)) {
        SpMat adj = SpMat(a[j].adjoint());
        SpMat nsym = cd(0.5) * (SpMat(a[i] * adj) + SpMat(adj * a[i]));
        out -= cd(w) * dij * nsym;
      }
      cd kij = k.values()(i, j);
      if (kij != cd(0)) out += cd(0.5 * w) * kij * SpMat(a[i] * a[j]);
      cd lij = l.values()(i, j);
      if (lij != cd(0))
        out -= cd(0.5 * w) * lij *
               SpMat(SpMat(a[i].adjoint()) * SpMat(a[j].adjoint()));
    }
  return out;
}

/// Field operator Int (f(x) a_x + g(x) a*_x) dx = h^{1/2} sum (f_j a_j +
/// g_j a^dag_j).
inline SpMat field_operator(const FockSpec& spec, const std::vector<SpMat>& a,
                            const Vec& f, const Vec& g) {
  const double w = std::sqrt(spec.grid()->cell_volume());
  SpMat out(spec.dimension(), spec.dimension());
  for (int j = 0; j < spec.modes(); ++j)
    out += cd(w) * (f[j] * a[j] + g[j] * SpMat(a[j].adjoint()));
  return out;
}

/// All generators needed by the checks, built on a shared lattice-as-grid.
struct Generators {
  FockSpec spec;
  std::vector<SpMat> a;
  SpMat h0;
  SpMat v_op;
  SpMat h_n;  // h0 + v/N
  SpMat a_gen;
  SpMat b_gen;
  RMat lap;
};

inline Generators build_generators(GridPtr grid, int n_max, const Field& phi,
                                   const Kernel& k, const Field& v,
                                   double particle_count) {
  Generators g{FockSpec::build(grid, n_max), {}, {}, {}, {}, {}, {}, RMat{}};
  g.a = all_annihilators(g.spec);
  g.lap = laplacian_matrix(grid);
  g.h0 = kinetic(g.spec, g.a, g.lap);
  g.v_op = interaction(g.spec, v);
  g.h_n = g.h0 + SpMat(cd(1.0 / particle_count) * g.v_op);
  g.a_gen = coherent_generator(g.spec, g.a, phi);
  g.b_gen = pair_generator(g.spec, g.a, k);
  return g;
}

/// First nested commutator written out:
/// [A,V] = Int v(x-y) (phibar(y) a*_x a_x a_y + phi(y) a*_x a*_y a_x).
inline SpMat commutator_av_expression(const FockSpec& spec,
                                      const std::vector<SpMat>& a,
                                      const Field& phi, const Field& v) {
  const GridSpec& g = *spec.grid();
  Kernel vk = potential_kernel(v);
  const double w = std::sqrt(g.cell_volume());  // h^2 measure over h^{3/2} legs
  SpMat out(spec.dimension(), spec.dimension());
  for (int i = 0; i < spec.modes(); ++i) {
    SpMat adag_i = SpMat(a[i].adjoint());
    for (int j = 0; j < spec.modes(); ++j) {
      cd vij = vk.values()(i, j);
      if (vij == cd(0)) continue;
      out += cd(w) * vij * std::conj(phi.values[j]) *
             SpMat(SpMat(adag_i * a[i]) * a[j]);
      out += cd(w) * vij * phi.values[j] *
             SpMat(SpMat(adag_i * SpMat(a[j].adjoint())) * a[i]);
    }
  }
  return out;
}

/// Second nested commutator:
/// [A,[A,V]] = Int v(x-y) (phibar(x)phibar(y) a_x a_y + phi(x)phi(y) a*_x a*_y
///             + 2 phibar(y)phi(x) a*_x a_y) + 2 Int (v*|phi|^2) a*_x a_x.
inline SpMat commutator_aav_expression(const FockSpec& spec,
                                       const std::vector<SpMat>& a,
                                       const Field& phi, const Field& v) {
  const GridSpec& g = *spec.grid();
  Kernel vk = potential_kernel(v);
  const double h = g.cell_volume();  // h^2 measure over two h^{-1/2} legs
  Field dens(phi.values.cwiseAbs2().cast<cd>(), phi.grid);
  Field conv = convolve(v, dens);
  SpMat out(spec.dimension(), spec.dimension());
  for (int i = 0; i < spec.modes(); ++i)
    for (int j = 0; j < spec.modes(); ++j) {
      cd vij = vk.values()(i, j);
      if (vij != cd(0)) {
        cd pb = std::conj(phi.values[i]) * std::conj(phi.values[j]);
        out += cd(h) * vij * pb * SpMat(a[i] * a[j]);
        out += cd(h) * vij * std::conj(pb) *
               SpMat(SpMat(a[i].adjoint()) * SpMat(a[j].adjoint()));
        out += cd(2.0 * h) * vij * phi.values[i] * std::conj(phi.values[j]) *
               SpMat(SpMat(a[i].adjoint()) * a[j]);
      }
    }
  // single-integral term: the h measure cancels the two h^{-1/2} legs
  for (int i = 0; i < spec.modes(); ++i)
    out += cd(2.0) * conv.values[i] * SpMat(SpMat(a[i].adjoint()) * a[i]);
  return out;
}

/// Third nested commutator:
/// [A,[A,[A,V]]] = 6 Int (v*|phi|^2)(x) (phi(x) a*_x + phibar(x) a_x).
inline SpMat commutator_aaav_expression(const FockSpec& spec,
                                        const std::vector<SpMat>& a,
                                        const Field& phi, const Field& v) {
  const GridSpec& g = *spec.grid();
  const double w = std::sqrt(g.cell_volume());
  Field dens(phi.values.cwiseAbs2().cast<cd>(), phi.grid);
  Field conv = convolve(v, dens);
  SpMat out(spec.dimension(), spec.dimension());
  for (int i = 0; i < spec.modes(); ++i)
    out += cd(6.0 * w) * conv.values[i] *
           (phi.values[i] * SpMat(a[i].adjoint()) +
            std::conj(phi.values[i]) * a[i]);
  return out;
}

/// Fourth nested commutator, a scalar: 12 Int (v*|phi|^2) |phi|^2.
inline double quadruple_commutator_scalar(const Field& phi, const Field& v) {
  Field dens(phi.values.cwiseAbs2().cast<cd>(), phi.grid);
  Field conv = convolve(v, dens);
  return 12.0 * std::real(l2_inner(conv, dens));
}

}  // namespace pairex::fock
