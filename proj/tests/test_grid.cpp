#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <random>

#include "pairex/grid.hpp"

using namespace pairex;
using Catch::Approx;

namespace {

Field random_field(const GridPtr& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Vec v(g->total_points());
  for (long i = 0; i < g->total_points(); ++i) v[i] = cd(gauss(rng), gauss(rng));
  return Field(std::move(v), g);
}

}  // namespace

TEST_CASE("grid invariants") {
  auto g = GridSpec::create(1, 32, 2.0 * std::numbers::pi);
  CHECK(g->spacing() * g->points_per_axis() == Approx(g->box_length()).epsilon(1e-15));
  CHECK(g->total_points() == 32);
  CHECK(g->fourier_multipliers()[0] == 0.0);

  auto g2 = GridSpec::create(2, 8, 1.5);
  CHECK(g2->total_points() == 64);

  CHECK_THROWS_AS(GridSpec::create(4, 8, 1.0), config_error);
  CHECK_THROWS_AS(GridSpec::create(1, 1, 1.0), config_error);
  CHECK_THROWS_AS(GridSpec::create(1, 8, -1.0), config_error);
}

TEST_CASE("zero potential samples to zero") {
  auto [g, v] = build_domain(1, 32, 2.0 * std::numbers::pi, PotentialSpec::zero());
  CHECK(v.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sampled potentials are exactly even") {
  auto [g, v] =
      build_domain(1, 32, 2.0 * std::numbers::pi, PotentialSpec::gaussian(0.3, 0.7));
  for (long i = 0; i < g->total_points(); ++i) {
    long j = g->negate_index(i);
    CHECK(v.values[i] == v.values[j]);  // exact, enforced by symmetrization
    CHECK(v.values[i].imag() == 0.0);
  }
}

TEST_CASE("mollified coulomb is finite at the origin with the closed-form value") {
  // v(0) = strength * sqrt(2/pi) / a
  auto [g, v] = build_domain(1, 64, 10.0, PotentialSpec::mollified_coulomb(0.05, 0.5));
  double expected = 0.05 * std::sqrt(2.0 / std::numbers::pi) / 0.5;
  CHECK(std::abs(v.values[0] - cd(expected)) < 1e-15);
  CHECK(expected == Approx(0.079788456080286541).epsilon(1e-12));
  CHECK_THROWS_AS(build_domain(1, 64, 10.0, PotentialSpec::mollified_coulomb(0.05, -1.0)),
                  config_error);
}

TEST_CASE("laplacian is a Fourier multiplier on plane waves") {
  auto g = GridSpec::create(1, 32, 2.0 * std::numbers::pi);
  Field f = grid_mode(g, {3});
  double xi = g->axis_frequency(3);
  Field lap = laplacian(f);
  double dev = (lap.values + xi * xi * f.values).cwiseAbs().maxCoeff();
  CHECK(dev < 1e-12);
}

TEST_CASE("convolution against a discrete delta translates the potential") {
  auto [g, v] = build_domain(1, 16, 4.0, PotentialSpec::gaussian(1.0, 0.6));
  long shift = 5;
  Vec d = Vec::Zero(g->total_points());
  d[shift] = 1.0 / g->cell_volume();
  Field delta(std::move(d), g);
  Field conv = convolve(v, delta);
  for (long i = 0; i < g->total_points(); ++i) {
    long src = (i - shift % g->total_points() + g->total_points()) % g->total_points();
    CHECK(std::abs(conv.values[i] - v.values[src]) < 1e-12);
  }
}

TEST_CASE("convolution matches the direct double sum") {
  auto [g, v] = build_domain(1, 24, 3.0, PotentialSpec::gaussian(0.8, 0.5));
  Field f = random_field(g, 11);
  Field conv = convolve(v, f);
  const long n = g->total_points();
  for (long x = 0; x < n; ++x) {
    cd direct = 0;
    for (long y = 0; y < n; ++y) {
      long d = ((x - y) % n + n) % n;
      direct += v.values[d] * f.values[y];
    }
    direct *= g->cell_volume();
    CHECK(std::abs(conv.values[x] - direct) < 1e-10);
  }
}

TEST_CASE("l2 inner products") {
  auto g = GridSpec::create(1, 16, 1.0);  // unit volume torus
  Field c(Vec::Constant(16, cd(0.3, -1.2)), g);
  CHECK(std::abs(l2_inner(c, c) - cd(std::norm(cd(0.3, -1.2)))) < 1e-14);

  Field f = random_field(g, 3), gg = random_field(g, 4);
  CHECK(std::abs(l2_inner(f, gg) - std::conj(l2_inner(gg, f))) < 1e-13);

  auto g64 = GridSpec::create(1, 64, 8.0);
  Field datum = normalized_gaussian(g64, 0.9);
  CHECK(l2_norm(datum) == Approx(1.0).epsilon(1e-12));
  // independent quadrature of the normalization constant (image-summed bump)
  const double w = 0.9, len = 8.0;
  auto bump = [&](long i) {
    double d = i * g64->spacing() - 0.5 * len;
    double s = 0;
    for (int img = -4; img <= 4; ++img)
      s += std::exp(-(d + img * len) * (d + img * len) / (2 * w * w));
    return s;
  };
  double direct = 0;
  for (long i = 0; i < 64; ++i) direct += bump(i) * bump(i);
  direct *= g64->cell_volume();
  Vec unnorm(64);
  for (long i = 0; i < 64; ++i) unnorm[i] = bump(i);
  double dev = (datum.values - unnorm / std::sqrt(direct)).cwiseAbs().maxCoeff();
  CHECK(dev < 1e-12);
}

TEST_CASE("parseval and hermiticity of the laplacian") {
  auto g = GridSpec::create(1, 32, 5.0);
  Field f = random_field(g, 21), gg = random_field(g, 22);
  Vec hat = fft_forward(*g, f.values);
  double fourier_norm =
      std::sqrt(g->cell_volume() / g->total_points()) * hat.norm();
  CHECK(fourier_norm == Approx(l2_norm(f)).epsilon(1e-12));

  cd lhs = l2_inner(laplacian(f), gg);
  cd rhs = l2_inner(f, laplacian(gg));
  CHECK(std::abs(lhs - rhs) < 1e-12 * std::max(1.0, std::abs(lhs)));
}

TEST_CASE("grid mismatch raises dimension errors") {
  auto g1 = GridSpec::create(1, 16, 1.0);
  auto g2 = GridSpec::create(1, 32, 1.0);
  Field a = random_field(g1, 1), b = random_field(g2, 2);
  CHECK_THROWS_AS(l2_inner(a, b), dimension_error);
  CHECK_THROWS_AS(convolve(a, b), dimension_error);
}

TEST_CASE("laplacian matrix reproduces the spectral operator") {
  auto g = GridSpec::create(1, 16, 3.0);
  RMat lap = laplacian_matrix(g);
  CHECK((lap - lap.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  Field f = random_field(g, 31);
  Vec via_matrix = lap * f.values;
  Vec via_fft = laplacian(f).values;
  CHECK((via_matrix - via_fft).cwiseAbs().maxCoeff() < 1e-11);
}
