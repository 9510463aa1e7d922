#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "pairex/common.hpp"
#include "pairex/fft.hpp"

namespace pairex {

/// Periodic box [0,L)^dim sampled on M points per axis.
///
/// Conventions used throughout the library:
///   grid point:   x_i = i*h per axis, h = L/M
///   L2 pairing:   <f,g> = h^dim * sum f * conj(g)
///   mode j:       xi_j = (2*pi/L) * (j <= M/2 ? j : j - M)
/// fourier_multipliers stores |xi|^2 per flattened mode, zero mode first.
class GridSpec {
 public:
  static std::shared_ptr<const GridSpec> create(int dim, int points_per_axis,
                                                double box_length) {
    if (dim < 1 || dim > 3) throw config_error("grid: dim must be 1, 2 or 3");
    if (points_per_axis < 2) throw config_error("grid: need at least 2 points per axis");
    if (!(box_length > 0)) throw config_error("grid: box length must be positive");
    return std::shared_ptr<const GridSpec>(new GridSpec(dim, points_per_axis, box_length));
  }

  int dim() const { return dim_; }
  int points_per_axis() const { return m_; }
  double box_length() const { return length_; }
  double spacing() const { return h_; }
  long total_points() const { return n_; }
  /// h^dim, the quadrature weight of one cell.
  double cell_volume() const { return cell_; }
  double volume() const { return std::pow(length_, dim_); }

  const std::vector<double>& fourier_multipliers() const { return multipliers_; }

  /// Signed frequency of 1-d mode index j.
  double axis_frequency(int j) const {
    int f = (j <= m_ / 2) ? j : j - m_;
    return 2.0 * std::numbers::pi * f / length_;
  }

  /// Minimal-image signed displacement of 1-d point index j from the origin.
  double axis_displacement(int j) const {
    int f = (j <= m_ / 2) ? j : j - m_;
    return f * h_;
  }

  std::vector<int> unflatten(long idx) const {
    std::vector<int> c(dim_);
    for (int a = dim_ - 1; a >= 0; --a) {
      c[a] = static_cast<int>(idx % m_);
      idx /= m_;
    }
    return c;
  }

  long flatten(const std::vector<int>& c) const {
    long idx = 0;
    for (int a = 0; a < dim_; ++a) idx = idx * m_ + ((c[a] % m_ + m_) % m_);
    return idx;
  }

  /// Index of -x for flattened point index idx.
  long negate_index(long idx) const {
    auto c = unflatten(idx);
    for (auto& ci : c) ci = (m_ - ci) % m_;
    return flatten(c);
  }

  /// Minimal-image distance between two flattened point indices.
  double min_image_distance(long i, long j) const {
    auto a = unflatten(i), b = unflatten(j);
    double r2 = 0;
    for (int ax = 0; ax < dim_; ++ax) {
      int d = (a[ax] - b[ax] + m_) % m_;
      double s = axis_displacement(d);
      r2 += s * s;
    }
    return std::sqrt(r2);
  }

  std::vector<int> fft_dims() const { return std::vector<int>(dim_, m_); }

  bool same_as(const GridSpec& o) const {
    return dim_ == o.dim_ && m_ == o.m_ && length_ == o.length_;
  }

 private:
  GridSpec(int dim, int m, double length)
      : dim_(dim), m_(m), length_(length), h_(length / m_) {
    n_ = 1;
    for (int a = 0; a < dim_; ++a) n_ *= m_;
    cell_ = std::pow(h_, dim_);
    multipliers_.resize(n_);
    for (long i = 0; i < n_; ++i) {
      auto c = unflatten(i);
      double s = 0;
      for (int a = 0; a < dim_; ++a) {
        double xi = axis_frequency(c[a]);
        s += xi * xi;
      }
      multipliers_[i] = s;
    }
  }

  int dim_;
  int m_;
  double length_;
  double h_;
  long n_;
  double cell_;
  std::vector<double> multipliers_;
};

using GridPtr = std::shared_ptr<const GridSpec>;

inline void require_same_grid(const GridSpec& a, const GridSpec& b,
                              const char* what) {
  if (!a.same_as(b)) throw dimension_error(std::string("grid mismatch in ") + what);
}

/// Complex scalar field sampled on a grid.
struct Field {
  Vec values;
  GridPtr grid;

  Field() = default;
  Field(Vec v, GridPtr g) : values(std::move(v)), grid(std::move(g)) {
    if (values.size() != grid->total_points())
      throw dimension_error("field size does not match grid");
  }

  static Field zero(GridPtr g) { return Field(Vec::Zero(g->total_points()), g); }
};

inline cd l2_inner(const Field& f, const Field& g) {
  require_same_grid(*f.grid, *g.grid, "l2_inner");
  return f.grid->cell_volume() * f.values.cwiseProduct(g.values.conjugate()).sum();
}

inline double l2_norm(const Field& f) {
  return std::sqrt(f.grid->cell_volume()) * f.values.norm();
}

// ---------------------------------------------------------------------------
// Potentials

enum class PotentialKind { zero, gaussian, mollified_coulomb };

struct PotentialSpec {
  PotentialKind kind = PotentialKind::zero;
  double strength = 0.0;   // overall coupling
  double width = 1.0;      // gaussian sigma / coulomb mollification scale a
  double cutoff = 0.0;     // gaussian cutoff scale of the coulomb tail; <=0 disables

  static PotentialSpec zero() { return {}; }
  static PotentialSpec gaussian(double strength, double width) {
    return {PotentialKind::gaussian, strength, width, 0.0};
  }
  static PotentialSpec mollified_coulomb(double strength, double a, double cutoff = 0.0) {
    return {PotentialKind::mollified_coulomb, strength, a, cutoff};
  }

  /// Pointwise value at minimal-image distance r.  The coulomb kind uses
  /// erf(r / (sqrt(2) a)) / r, finite at the origin with value sqrt(2/pi)/a.
  double value(double r) const {
    switch (kind) {
      case PotentialKind::zero:
        return 0.0;
      case PotentialKind::gaussian:
        return strength * std::exp(-r * r / (2.0 * width * width));
      case PotentialKind::mollified_coulomb: {
        double core = (r == 0.0)
                          ? std::sqrt(2.0 / std::numbers::pi) / width
                          : std::erf(r / (std::numbers::sqrt2 * width)) / r;
        double chi = (cutoff > 0) ? std::exp(-r * r / (2.0 * cutoff * cutoff)) : 1.0;
        return strength * core * chi;
      }
    }
    return 0.0;
  }

  void validate() const {
    if (kind == PotentialKind::zero) return;
    if (!(width > 0)) throw config_error("potential: width must be positive");
    if (kind == PotentialKind::mollified_coulomb && cutoff < 0)
      throw config_error("potential: cutoff must be non-negative");
  }
};

/// Sample an even potential on the grid.  Rapidly decaying profiles are
/// periodized by an image sum so the sampled function is smooth on the torus
/// (a bare minimal-image evaluation kinks at the antipode); the slowly
/// decaying uncut coulomb profile falls back to minimal image.  Evenness
/// v(x) = v(-x) is enforced exactly by averaging the two image values.
inline Field sample_potential(const GridPtr& grid, const PotentialSpec& spec) {
  spec.validate();
  const long n = grid->total_points();
  const bool periodize =
      spec.kind == PotentialKind::gaussian ||
      (spec.kind == PotentialKind::mollified_coulomb && spec.cutoff > 0);
  const int images = periodize ? 4 : 0;
  const double len = grid->box_length();
  Vec v(n);
  for (long i = 0; i < n; ++i) {
    auto c = grid->unflatten(i);
    double sum = 0;
    std::vector<int> img(grid->dim(), -images);
    for (;;) {
      double r2 = 0;
      for (int a = 0; a < grid->dim(); ++a) {
        double d = grid->axis_displacement(c[a]) + img[a] * len;
        r2 += d * d;
      }
      sum += spec.value(std::sqrt(r2));
      int a = 0;
      for (; a < grid->dim(); ++a) {
        if (++img[a] <= images) break;
        img[a] = -images;
      }
      if (a == grid->dim()) break;
    }
    v[i] = sum;
  }
  Vec sym(n);
  for (long i = 0; i < n; ++i) {
    long j = grid->negate_index(i);
    sym[i] = 0.5 * (v[i] + v[j]);
  }
  return Field(std::move(sym), grid);
}

inline std::pair<GridPtr, Field> build_domain(int dim, int points_per_axis,
                                              double box_length,
                                              const PotentialSpec& spec) {
  auto grid = GridSpec::create(dim, points_per_axis, box_length);
  return {grid, sample_potential(grid, spec)};
}

// ---------------------------------------------------------------------------
// Spectral operators

inline Vec fft_forward(const GridSpec& g, Vec f) {
  detail::fft_nd(g.fft_dims(), FFTW_FORWARD, f.data());
  return f;
}

inline Vec fft_inverse(const GridSpec& g, Vec f) {
  detail::fft_nd(g.fft_dims(), FFTW_BACKWARD, f.data());
  f /= static_cast<double>(g.total_points());
  return f;
}

/// Laplacian via Fourier multiplication with -|xi|^2.
inline Field laplacian(const Field& f) {
  const GridSpec& g = *f.grid;
  Vec hat = fft_forward(g, f.values);
  const auto& mult = g.fourier_multipliers();
  for (long i = 0; i < g.total_points(); ++i) hat[i] *= -mult[i];
  return Field(fft_inverse(g, std::move(hat)), f.grid);
}

/// Periodic convolution (v*f)(x) = h^dim sum_y v(x-y) f(y).
inline Field convolve(const Field& v, const Field& f) {
  require_same_grid(*v.grid, *f.grid, "convolve");
  const GridSpec& g = *f.grid;
  Vec vh = fft_forward(g, v.values);
  Vec fh = fft_forward(g, f.values);
  fh = fh.cwiseProduct(vh);
  Vec out = fft_inverse(g, std::move(fh));
  out *= g.cell_volume();
  return Field(std::move(out), f.grid);
}

enum class OperatorTag { laplacian, convolve_with };

inline Field spectral_apply(const Field& f, OperatorTag tag,
                            const Field* v = nullptr) {
  switch (tag) {
    case OperatorTag::laplacian:
      return laplacian(f);
    case OperatorTag::convolve_with:
      if (!v) throw internal_error("spectral_apply: convolve_with needs v");
      return convolve(*v, f);
  }
  throw internal_error("spectral_apply: unknown tag");
}

/// Dense matrix of the spectral Laplacian acting on fields. Real symmetric
/// because the multiplier set is even under xi -> -xi.
inline RMat laplacian_matrix(const GridPtr& grid) {
  const long n = grid->total_points();
  Mat lap(n, n);
  for (long c = 0; c < n; ++c) {
    Vec e = Vec::Zero(n);
    e[c] = 1.0;
    lap.col(c) = laplacian(Field(std::move(e), grid)).values;
  }
  return lap.real();
}

// ---------------------------------------------------------------------------
// Initial data

/// Periodized gaussian bump centered in the box, normalized to unit L2 norm.
/// The image sum factorizes per axis and makes the datum smooth on the torus.
inline Field normalized_gaussian(const GridPtr& grid, double width) {
  if (!(width > 0)) throw config_error("initial datum: width must be positive");
  const int m = grid->points_per_axis();
  const double len = grid->box_length();
  std::vector<double> axis(m);
  for (int j = 0; j < m; ++j) {
    double d = j * grid->spacing() - 0.5 * len;
    double s = 0;
    for (int img = -4; img <= 4; ++img) {
      double x = d + img * len;
      s += std::exp(-x * x / (2.0 * width * width));
    }
    axis[j] = s;
  }
  const long n = grid->total_points();
  Vec vals(n);
  for (long i = 0; i < n; ++i) {
    auto c = grid->unflatten(i);
    double prod = 1;
    for (int a = 0; a < grid->dim(); ++a) prod *= axis[c[a]];
    vals[i] = prod;
  }
  Field f(std::move(vals), grid);
  f.values /= l2_norm(f);
  return f;
}

/// Single plane-wave mode, normalized to unit L2 norm.
inline Field grid_mode(const GridPtr& grid, const std::vector<int>& mode) {
  if (static_cast<int>(mode.size()) != grid->dim())
    throw config_error("initial datum: mode index rank must equal dim");
  const long n = grid->total_points();
  Vec vals(n);
  for (long i = 0; i < n; ++i) {
    auto c = grid->unflatten(i);
    double phase = 0;
    for (int a = 0; a < grid->dim(); ++a)
      phase += grid->axis_frequency((mode[a] % grid->points_per_axis() +
                                     grid->points_per_axis()) % grid->points_per_axis()) *
               (c[a] * grid->spacing());
    vals[i] = std::exp(I * phase);
  }
  Field f(std::move(vals), grid);
  f.values /= l2_norm(f);
  return f;
}

}  // namespace pairex
