#pragma once

#include <cmath>
#include <utility>

#include <unsupported/Eigen/MatrixFunctions>

#include "pairex/grid.hpp"

namespace pairex {

enum class KernelSymmetry { general, symmetric, hermitian };

/// Two-point kernel K(x,y) stored as a dense total_points x total_points
/// matrix.  Compositions carry the h^dim quadrature weight, so the discrete
/// delta is 1/h^dim on the diagonal and continuum formulas transcribe
/// verbatim.
class Kernel {
 public:
  Kernel() = default;

  Kernel(Mat values, GridPtr grid, KernelSymmetry sym = KernelSymmetry::general)
      : values_(std::move(values)), grid_(std::move(grid)), sym_(sym) {
    const long n = grid_->total_points();
    if (values_.rows() != n || values_.cols() != n)
      throw dimension_error("kernel size does not match grid");
    enforce_symmetry();
  }

  static Kernel zero(GridPtr g, KernelSymmetry sym = KernelSymmetry::general) {
    long n = g->total_points();
    return Kernel(Mat::Zero(n, n), std::move(g), sym);
  }

  /// Discrete delta: identity operator under weighted composition.
  static Kernel delta(GridPtr g) {
    long n = g->total_points();
    Mat m = Mat::Identity(n, n) / g->cell_volume();
    return Kernel(std::move(m), std::move(g), KernelSymmetry::hermitian);
  }

  /// Rank-one kernel f(x) g(y).
  static Kernel outer(const Field& f, const Field& g) {
    require_same_grid(*f.grid, *g.grid, "outer");
    return Kernel(f.values * g.values.transpose(), f.grid);
  }

  const Mat& values() const { return values_; }
  Mat& mutable_values() { return values_; }
  const GridPtr& grid() const { return grid_; }
  KernelSymmetry symmetry() const { return sym_; }
  double h() const { return grid_->cell_volume(); }

  /// L2(dx dy) (Hilbert-Schmidt) norm.
  double norm() const { return grid_->cell_volume() * values_.norm(); }

  Kernel with_symmetry(KernelSymmetry sym) const {
    return Kernel(values_, grid_, sym);
  }

 private:
  // Declared symmetry is enforced exactly; construction rejects matrices
  // whose asymmetry drift exceeds what arithmetic noise can explain.
  void enforce_symmetry() {
    constexpr double kDriftTol = 1e-13;
    if (sym_ == KernelSymmetry::symmetric) {
      double scale = std::max(1.0, values_.cwiseAbs().maxCoeff());
      double drift = (values_ - values_.transpose().eval()).cwiseAbs().maxCoeff();
      if (drift > kDriftTol * scale)
        throw internal_error("kernel tagged symmetric has asymmetry drift " +
                             std::to_string(drift / scale));
      values_ = 0.5 * (values_ + values_.transpose().eval());
    } else if (sym_ == KernelSymmetry::hermitian) {
      double scale = std::max(1.0, values_.cwiseAbs().maxCoeff());
      double drift = (values_ - values_.adjoint().eval()).cwiseAbs().maxCoeff();
      if (drift > kDriftTol * scale)
        throw internal_error("kernel tagged hermitian has hermiticity drift " +
                             std::to_string(drift / scale));
      values_ = 0.5 * (values_ + values_.adjoint().eval());
    }
  }

  Mat values_;
  GridPtr grid_;
  KernelSymmetry sym_ = KernelSymmetry::general;
};

// ---------------------------------------------------------------------------
// Algebra

/// (A o B)(x,y) = h^dim sum_z A(x,z) B(z,y).
inline Kernel compose(const Kernel& a, const Kernel& b) {
  require_same_grid(*a.grid(), *b.grid(), "compose");
  return Kernel(a.h() * (a.values() * b.values()), a.grid());
}

inline Kernel transpose(const Kernel& a) {
  return Kernel(a.values().transpose(), a.grid(),
                a.symmetry() == KernelSymmetry::symmetric
                    ? KernelSymmetry::symmetric
                    : KernelSymmetry::general);
}

inline Kernel conj(const Kernel& a) {
  return Kernel(a.values().conjugate(), a.grid(),
                a.symmetry() == KernelSymmetry::general ? KernelSymmetry::general
                                                        : a.symmetry());
}

inline Kernel adjoint(const Kernel& a) {
  return Kernel(a.values().adjoint(), a.grid(),
                a.symmetry() == KernelSymmetry::hermitian
                    ? KernelSymmetry::hermitian
                    : KernelSymmetry::general);
}

enum class Involution { transpose, conj, adjoint };

inline Kernel involution(const Kernel& a, Involution which) {
  switch (which) {
    case Involution::transpose: return transpose(a);
    case Involution::conj: return conj(a);
    case Involution::adjoint: return adjoint(a);
  }
  throw internal_error("involution: unknown tag");
}

inline Kernel operator+(const Kernel& a, const Kernel& b) {
  require_same_grid(*a.grid(), *b.grid(), "kernel sum");
  return Kernel(a.values() + b.values(), a.grid());
}

inline Kernel operator-(const Kernel& a, const Kernel& b) {
  require_same_grid(*a.grid(), *b.grid(), "kernel difference");
  return Kernel(a.values() - b.values(), a.grid());
}

inline Kernel operator*(cd s, const Kernel& a) {
  return Kernel(s * a.values(), a.grid());
}

inline Kernel operator-(const Kernel& a) { return Kernel(-a.values(), a.grid()); }

/// h^dim sum_x A(x,x).  The caller guarantees A carries no bare delta.
inline cd trace_diag(const Kernel& a) {
  return a.h() * a.values().diagonal().sum();
}

/// Kernel acting on a field: (A f)(x) = h^dim sum_y A(x,y) f(y).
inline Field apply(const Kernel& a, const Field& f) {
  require_same_grid(*a.grid(), *f.grid, "kernel apply");
  return Field(a.h() * (a.values() * f.values), f.grid);
}

// ---------------------------------------------------------------------------
// Hyperbolic series

struct ShChPair {
  Kernel u;  // sh(k), symmetric
  Kernel p;  // ch(k) - 1, hermitian
};

/// Operator sine/cosine series of a symmetric kernel:
///   u = sh(k) = sum_{n>=0} (k kbar)^n k / (2n+1)!
///   p = ch(k) - 1 = sum_{n>=1} (k kbar)^n / (2n)!
/// Working representation: the weighted matrix W = h^dim * K of a kernel K,
/// under which composition becomes a plain matrix product and the HS norm of
/// K equals the Frobenius norm of W.  Terms accumulate until the last term's
/// HS norm drops below tail_tol * max(1, partial-sum norm).  The series are
/// entire, so the cap only trips on overflow-scale inputs.
inline ShChPair sh_ch_series(const Kernel& k, double tail_tol = 1e-14,
                             int max_terms = 25) {
  if (k.symmetry() != KernelSymmetry::symmetric)
    throw internal_error("sh_ch_series: k must be tagged symmetric");
  if (!(tail_tol > 0)) throw config_error("sh_ch_series: tail_tol must be positive");

  const double h = k.h();
  const Mat w = h * k.values();
  const Mat pair = w * w.conjugate();  // weighted (k kbar)
  const long n_pts = w.rows();
  Mat chain = Mat::Identity(n_pts, n_pts);  // weighted (k kbar)^n
  Mat u_w = w;
  Mat p_w = Mat::Zero(n_pts, n_pts);
  double fact_even = 1.0;  // (2n)!
  bool converged = false;
  for (int n = 1; n <= max_terms; ++n) {
    chain = chain * pair;
    fact_even *= (2.0 * n - 1.0) * (2.0 * n);
    const double fact_odd = fact_even * (2.0 * n + 1.0);
    Mat p_term = chain / fact_even;
    Mat u_term = (chain * w) / fact_odd;
    p_w += p_term;
    u_w += u_term;
    double tail = std::max(p_term.norm() / std::max(1.0, p_w.norm()),
                           u_term.norm() / std::max(1.0, u_w.norm()));
    if (tail < tail_tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw non_convergence_error("sh_ch_series: term cap reached; input norm too large");
  return {Kernel(u_w / h, k.grid(), KernelSymmetry::symmetric),
          Kernel(p_w / h, k.grid(), KernelSymmetry::hermitian)};
}

struct ChShPair {
  Kernel ch;  // includes the delta part
  Kernel sh;
};

/// Dense block-exponential reference for the hyperbolic series: exponentiates
/// the weighted 2n x 2n matrix [[0, k],[kbar, 0]] and returns the (1,1) and
/// (1,2) blocks as kernels, i.e. ch(k) (with its delta) and sh(k).
inline ChShPair exp_block_oracle(const Kernel& k) {
  if (k.symmetry() != KernelSymmetry::symmetric)
    throw internal_error("exp_block_oracle: k must be tagged symmetric");
  const long n = k.grid()->total_points();
  const double h = k.h();
  Mat block = Mat::Zero(2 * n, 2 * n);
  block.block(0, n, n, n) = h * k.values();
  block.block(n, 0, n, n) = h * k.values().conjugate();
  Mat e = block.exp();
  Kernel ch(e.block(0, 0, n, n) / h, k.grid(), KernelSymmetry::hermitian);
  Kernel sh(e.block(0, n, n, n) / h, k.grid(), KernelSymmetry::symmetric);
  return {std::move(ch), std::move(sh)};
}

/// Block exponential of a general sp element S(d,k,l) = [[d, k],[l, -d^T]]
/// acting on weighted matrices; returns the full 2n x 2n weighted exponential.
inline Mat sp_block_exp_weighted(const Kernel& d, const Kernel& k, const Kernel& l) {
  const long n = d.grid()->total_points();
  const double h = d.h();
  Mat block(2 * n, 2 * n);
  block.block(0, 0, n, n) = h * d.values();
  block.block(0, n, n, n) = h * k.values();
  block.block(n, 0, n, n) = h * l.values();
  block.block(n, n, n, n) = -h * d.values().transpose();
  return block.exp();
}

/// Solve (delta + p) o X = rhs for X.  1+p = ch(k) >= 1 is hermitian positive
/// definite for genuine inputs; a failed Cholesky factorization signals a
/// corrupted p.
inline Kernel solve_one_plus_p(const Kernel& p, const Kernel& rhs) {
  require_same_grid(*p.grid(), *rhs.grid(), "solve_one_plus_p");
  if (p.symmetry() != KernelSymmetry::hermitian)
    throw internal_error("solve_one_plus_p: p must be tagged hermitian");
  const long n = p.grid()->total_points();
  Mat a = Mat::Identity(n, n) + p.h() * p.values();
  Eigen::LLT<Mat> llt(a);
  if (llt.info() != Eigen::Success)
    throw positivity_error("solve_one_plus_p: 1+p is not positive definite");
  return Kernel(llt.solve(rhs.values()), rhs.grid());
}

}  // namespace pairex
