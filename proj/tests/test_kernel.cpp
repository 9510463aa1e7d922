#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "pairex/kernel.hpp"

using namespace pairex;
using Catch::Approx;

namespace {

Kernel random_kernel(const GridPtr& g, KernelSymmetry sym, unsigned seed,
                     double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  long n = g->total_points();
  Mat m(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) m(i, j) = cd(gauss(rng), gauss(rng));
  if (sym == KernelSymmetry::symmetric) m = 0.5 * (m + m.transpose().eval());
  if (sym == KernelSymmetry::hermitian) m = 0.5 * (m + m.adjoint().eval());
  Kernel k(std::move(m), g, sym);
  if (scale != 1.0 && k.norm() > 0)
    return (cd(scale / k.norm()) * k).with_symmetry(sym);
  return k;
}

Field unit_field(const GridPtr& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Vec v(g->total_points());
  for (long i = 0; i < g->total_points(); ++i) v[i] = gauss(rng);  // real
  Field f(std::move(v), g);
  f.values /= l2_norm(f);
  return f;
}

}  // namespace

TEST_CASE("delta is the composition identity") {
  auto g = GridSpec::create(1, 12, 3.0);
  Kernel b = random_kernel(g, KernelSymmetry::general, 5);
  Kernel db = compose(Kernel::delta(g), b);
  CHECK((db.values() - b.values()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("rank-one composition reduces to an inner product") {
  auto g = GridSpec::create(1, 16, 2.0);
  Field f = unit_field(g, 1), gg = unit_field(g, 2), p = unit_field(g, 3),
        q = unit_field(g, 4);
  Kernel lhs = compose(Kernel::outer(f, gg), Kernel::outer(p, q));
  cd overlap = g->cell_volume() * gg.values.cwiseProduct(p.values).sum();
  Kernel rhs = overlap * Kernel::outer(f, q);
  CHECK((lhs.values() - rhs.values()).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("composition matches the direct triple loop at M=8") {
  auto g = GridSpec::create(1, 8, 1.7);
  Kernel a = random_kernel(g, KernelSymmetry::general, 7);
  Kernel b = random_kernel(g, KernelSymmetry::general, 8);
  Kernel c = compose(a, b);
  for (long x = 0; x < 8; ++x)
    for (long y = 0; y < 8; ++y) {
      cd s = 0;
      for (long z = 0; z < 8; ++z) s += a.values()(x, z) * b.values()(z, y);
      s *= g->cell_volume();
      CHECK(std::abs(c.values()(x, y) - s) < 1e-12);
    }
}

TEST_CASE("composition is associative") {
  auto g = GridSpec::create(1, 10, 2.2);
  Kernel a = random_kernel(g, KernelSymmetry::general, 11);
  Kernel b = random_kernel(g, KernelSymmetry::general, 12);
  Kernel c = random_kernel(g, KernelSymmetry::general, 13);
  Kernel lhs = compose(compose(a, b), c);
  Kernel rhs = compose(a, compose(b, c));
  CHECK((lhs - rhs).norm() < 1e-12 * std::max(1.0, lhs.norm()));
}

TEST_CASE("involutions") {
  auto g = GridSpec::create(1, 9, 1.0);
  Kernel k = random_kernel(g, KernelSymmetry::symmetric, 21);
  CHECK((transpose(k).values() - k.values()).cwiseAbs().maxCoeff() == 0.0);

  Kernel a = random_kernel(g, KernelSymmetry::general, 22);
  CHECK((adjoint(adjoint(a)).values() - a.values()).cwiseAbs().maxCoeff() == 0.0);

  Kernel b = random_kernel(g, KernelSymmetry::general, 23);
  Kernel lhs = adjoint(compose(a, b));
  Kernel rhs = compose(adjoint(b), adjoint(a));
  CHECK((lhs - rhs).norm() < 1e-12 * std::max(1.0, lhs.norm()));

  CHECK_THROWS_AS(Kernel(a.values(), g, KernelSymmetry::symmetric),
                  internal_error);
}

TEST_CASE("trace of weighted compositions") {
  auto g = GridSpec::create(1, 12, 2.0);
  Field e = unit_field(g, 31);
  Kernel proj = Kernel::outer(e, e);  // e real, unit norm
  CHECK(std::abs(trace_diag(proj) - cd(1.0)) < 1e-13);

  Kernel a = random_kernel(g, KernelSymmetry::general, 32);
  Kernel b = random_kernel(g, KernelSymmetry::general, 33);
  CHECK(std::abs(trace_diag(compose(a, b)) - trace_diag(compose(b, a))) < 1e-12);

  Kernel h = random_kernel(g, KernelSymmetry::hermitian, 34);
  CHECK(std::abs(trace_diag(h).imag()) < 1e-14);
}

TEST_CASE("hyperbolic series: trivial and rank-one cases") {
  auto g = GridSpec::create(1, 16, 2.5);
  auto [u0, p0] = sh_ch_series(Kernel::zero(g, KernelSymmetry::symmetric));
  CHECK(u0.norm() == 0.0);
  CHECK(p0.norm() == 0.0);

  Field e = unit_field(g, 41);
  double lambda = 0.8;
  Kernel k = (cd(lambda) * Kernel::outer(e, e))
                 .with_symmetry(KernelSymmetry::symmetric);
  auto [u, p] = sh_ch_series(k, 1e-15);
  Kernel u_ref = cd(std::sinh(lambda)) * Kernel::outer(e, e);
  Kernel p_ref = cd(std::cosh(lambda) - 1.0) * Kernel::outer(e, e);
  CHECK((u - u_ref).norm() < 1e-13);
  CHECK((p - p_ref).norm() < 1e-13);
}

TEST_CASE("block exponential oracle: trivial and rank-one cases") {
  auto g = GridSpec::create(1, 12, 2.0);
  auto [ch0, sh0] = exp_block_oracle(Kernel::zero(g, KernelSymmetry::symmetric));
  CHECK((ch0.values() - Kernel::delta(g).values()).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(sh0.norm() < 1e-14);

  Field e = unit_field(g, 51);
  double lambda = 0.45;
  Kernel k = (cd(lambda) * Kernel::outer(e, e))
                 .with_symmetry(KernelSymmetry::symmetric);
  auto [ch, sh] = exp_block_oracle(k);
  Kernel ch_ref =
      Kernel::delta(g) + cd(std::cosh(lambda) - 1.0) * Kernel::outer(e, e);
  Kernel sh_ref = cd(std::sinh(lambda)) * Kernel::outer(e, e);
  CHECK((ch - ch_ref).norm() < 1e-12);
  CHECK((sh - sh_ref).norm() < 1e-12);
}

TEST_CASE("series agrees with the block exponential") {
  auto g = GridSpec::create(1, 16, 3.1);
  Kernel k = random_kernel(g, KernelSymmetry::symmetric, 61, 0.5);
  auto [u, p] = sh_ch_series(k, 1e-14);
  auto [ch, sh] = exp_block_oracle(k);
  CHECK((u - sh).norm() < 1e-10);
  CHECK(((Kernel::delta(g) + p) - ch).norm() < 1e-10);
}

TEST_CASE("hyperbolic identities for random kernels up to unit norm") {
  auto g = GridSpec::create(1, 16, 2.0);
  for (unsigned seed = 0; seed < 20; ++seed) {
    double scale = 0.05 + 0.0475 * seed;  // up to ~1
    Kernel k = random_kernel(g, KernelSymmetry::symmetric, 100 + seed, scale);
    auto [u, p] = sh_ch_series(k, 1e-12);
    Kernel ch = Kernel::delta(g) + p;
    Kernel id1 = compose(ch, ch) - compose(u, conj(u)) - Kernel::delta(g);
    Kernel id2 = compose(ch, u) - compose(u, conj(ch));
    CHECK(id1.norm() < 1e-10);
    CHECK(id2.norm() < 1e-10);
  }
}

TEST_CASE("block exponential satisfies e^K e^-K = 1") {
  auto g = GridSpec::create(1, 12, 2.0);
  Kernel k = random_kernel(g, KernelSymmetry::symmetric, 71, 0.3);
  auto [ch, sh] = exp_block_oracle(k);
  Kernel resid = compose(ch, ch) - compose(sh, conj(sh)) - Kernel::delta(g);
  CHECK(resid.norm() < 1e-12);
}

TEST_CASE("solve_one_plus_p") {
  auto g = GridSpec::create(1, 14, 2.0);
  Kernel rhs = random_kernel(g, KernelSymmetry::general, 81);
  Kernel x0 = solve_one_plus_p(Kernel::zero(g, KernelSymmetry::hermitian), rhs);
  CHECK((x0 - rhs).norm() < 1e-13);

  Field e = unit_field(g, 82);
  double lambda = 0.6;
  Kernel p = (cd(std::cosh(lambda) - 1.0) * Kernel::outer(e, e))
                 .with_symmetry(KernelSymmetry::hermitian);
  Kernel proj = Kernel::outer(e, e).with_symmetry(KernelSymmetry::hermitian);
  Kernel x = solve_one_plus_p(p, proj);
  Kernel x_ref = cd(1.0 / std::cosh(lambda)) * proj;
  CHECK((x - x_ref).norm() < 1e-12);

  Kernel k = random_kernel(g, KernelSymmetry::symmetric, 83, 0.4);
  auto [u, pp] = sh_ch_series(k);
  Kernel sol = solve_one_plus_p(pp, rhs);
  Kernel resid = compose(Kernel::delta(g) + pp, sol) - rhs;
  CHECK(resid.norm() < 1e-10);

  // indefinite input is rejected
  Kernel bad((-2.0 / g->cell_volume()) *
                 Mat::Identity(g->total_points(), g->total_points()),
             g, KernelSymmetry::hermitian);
  CHECK_THROWS_AS(solve_one_plus_p(bad, rhs), positivity_error);
}

TEST_CASE("series term cap raises on overflow-scale input") {
  auto g = GridSpec::create(1, 8, 1.0);
  Kernel k = random_kernel(g, KernelSymmetry::symmetric, 91, 40.0);
  CHECK_THROWS_AS(sh_ch_series(k, 1e-14, 10), non_convergence_error);
}
