#pragma once

#include <random>

#include <Eigen/SVD>

#include "pairex/error_norms.hpp"
#include "pairex/fock/oracle.hpp"

namespace pairex::fock {

/// Occupation amplitudes of a single slot family, symmetrized and weighted
/// exactly as the combined assembly weights it.
inline Vec family_amplitudes(const FockSpec& spec, const FockSlotPayload& pl) {
  switch (pl.slot) {
    case 0: {
      Vec out = Vec::Zero(spec.dimension());
      out[0] = pl.scalar;
      return out;
    }
    case 1:
      return amplitudes_from_slot(spec, 1, [&](const std::vector<long>& s) {
        return pl.vec[s[0]];
      });
    case 2: {
      Mat sym = std::sqrt(2.0) * 0.5 *
                (pl.mat + pl.mat.transpose().eval());
      return amplitudes_from_slot(spec, 2, [&](const std::vector<long>& s) {
        return sym(s[0], s[1]);
      });
    }
    case 3: {
      Tensor3 sym = symmetrize(pl.t3);
      return amplitudes_from_slot(spec, 3, [&](const std::vector<long>& s) {
        return std::sqrt(6.0) * sym.at(s[0], s[1], s[2]);
      });
    }
    case 4: {
      Tensor4 sym = symmetrize(pl.t4);
      return amplitudes_from_slot(spec, 4, [&](const std::vector<long>& s) {
        return std::sqrt(24.0) * sym.at(s[0], s[1], s[2], s[3]);
      });
    }
  }
  throw internal_error("family_amplitudes: bad slot");
}

/// A random (phi, k, v) triple on a small lattice, reproducible from a seed.
struct LatticeInstance {
  GridPtr grid;
  Field phi;
  Kernel k;
  Field v;
  Kernel u;
  Kernel p;
};

inline LatticeInstance random_lattice_instance(unsigned seed, int sites = 2,
                                               double k_scale = 0.1) {
  auto grid = GridSpec::create(1, sites, 2.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  const long n = grid->total_points();
  Vec pv(n);
  for (long i = 0; i < n; ++i) pv[i] = cd(gauss(rng), gauss(rng));
  Field phi(std::move(pv), grid);
  phi.values /= l2_norm(phi);
  Mat km(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) km(i, j) = cd(gauss(rng), gauss(rng));
  km = 0.5 * (km + km.transpose().eval());
  Kernel k(std::move(km), grid, KernelSymmetry::symmetric);
  if (k.norm() > 0) k = cd(k_scale / k.norm()) * k;
  k = k.with_symmetry(KernelSymmetry::symmetric);
  std::uniform_real_distribution<double> uni(0.4, 1.2);
  Field v = sample_potential(grid, PotentialSpec::gaussian(uni(rng), uni(rng)));
  auto sc = sh_ch_series(k);
  return {grid, std::move(phi), std::move(k), std::move(v), std::move(sc.u),
          std::move(sc.p)};
}

struct CalibrationResult {
  ErrorNormConstants constants;
  double residual_g = 0;  // relative lsq residual, interaction families
  double residual_f = 0;  // relative lsq residual, commutator families
  int lattice_sites = 2;
  int n_max = 0;
  int instances = 0;
};

/// Pins the slot-family prefactors by least squares against the exact lattice
/// states, stacking several random instances so the families are linearly
/// independent.  The assembly derives every family from exact vacuum
/// contractions, so the fitted constants sit at 1 up to cutoff leakage.
inline CalibrationResult calibrate_error_norm_constants(unsigned seed = 90210,
                                                        int instances = 6,
                                                        int n_max = 18) {
  CalibrationResult res;
  res.n_max = n_max;
  res.instances = instances;

  std::vector<RVec> g_cols_acc, f_cols_acc;
  std::vector<RVec> g_rhs_acc, f_rhs_acc;
  std::vector<std::string> g_names, f_names;

  auto realify = [](const Vec& v) {
    RVec r(2 * v.size());
    r.head(v.size()) = v.real();
    r.tail(v.size()) = v.imag();
    return r;
  };

  for (int inst = 0; inst < instances; ++inst) {
    LatticeInstance li = random_lattice_instance(seed + inst);
    FockSpec spec = FockSpec::build(li.grid, n_max);
    auto a = all_annihilators(spec);
    OracleErrorState ora = oracle_error_state(spec, a, li.phi, li.k, li.v);

    GErrorResult ge = g_error(li.u, li.p, li.v);
    FErrorResult fe = f_error(li.u, li.p, li.phi, li.v);

    std::vector<RVec> g_cols, f_cols;
    if (inst == 0) {
      for (const auto& pl : ge.components) g_names.push_back(pl.name);
      for (const auto& pl : fe.components) f_names.push_back(pl.name);
    }
    for (const auto& pl : ge.components)
      g_cols.push_back(realify(family_amplitudes(spec, pl)));
    for (const auto& pl : fe.components)
      f_cols.push_back(realify(family_amplitudes(spec, pl)));
    if (g_cols_acc.empty()) {
      g_cols_acc.assign(g_cols.size(), RVec());
      f_cols_acc.assign(f_cols.size(), RVec());
    }
    for (std::size_t c = 0; c < g_cols.size(); ++c) {
      RVec& acc = g_cols_acc[c];
      RVec add = g_cols[c];
      RVec merged(acc.size() + add.size());
      merged << acc, add;
      acc = std::move(merged);
    }
    for (std::size_t c = 0; c < f_cols.size(); ++c) {
      RVec& acc = f_cols_acc[c];
      RVec add = f_cols[c];
      RVec merged(acc.size() + add.size());
      merged << acc, add;
      acc = std::move(merged);
    }
    RVec gr = realify(ora.g_state), fr = realify(ora.f_state);
    g_rhs_acc.push_back(gr);
    f_rhs_acc.push_back(fr);
  }

  auto stack_rhs = [](const std::vector<RVec>& parts) {
    long total = 0;
    for (const auto& p : parts) total += p.size();
    RVec out(total);
    long at = 0;
    for (const auto& p : parts) {
      out.segment(at, p.size()) = p;
      at += p.size();
    }
    return out;
  };

  auto solve = [&](std::vector<RVec>& cols, const RVec& rhs, double& residual) {
    RMat a(rhs.size(), cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) a.col(c) = cols[c];
    Eigen::BDCSVD<RMat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    RVec x = svd.solve(rhs);
    residual = (a * x - rhs).norm() / std::max(1e-300, rhs.norm());
    return x;
  };

  RVec g_fit = solve(g_cols_acc, stack_rhs(g_rhs_acc), res.residual_g);
  RVec f_fit = solve(f_cols_acc, stack_rhs(f_rhs_acc), res.residual_f);

  auto entries = res.constants.entries();
  auto assign = [&](const std::vector<std::string>& names, const RVec& x) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      for (auto& [nm, ptr] : entries)
        if (nm == names[i]) *ptr = x[i];
    }
  };
  assign(g_names, g_fit);
  assign(f_names, f_fit);
  return res;
}

}  // namespace pairex::fock
