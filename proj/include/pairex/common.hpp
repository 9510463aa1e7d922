#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace pairex {

using cd = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr cd I{0.0, 1.0};

/// Invalid user-supplied parameters (grid sizes, potential widths, N < 1, ...).
struct config_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Objects living on incompatible grids were combined.
struct dimension_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A series or iteration failed to reach its tolerance within its cap.
struct non_convergence_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// 1+p stopped being positive definite; the input kernel is corrupted.
struct positivity_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Conserved-quantity drift beyond the allowed window.
struct instability_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// NaN/Inf detected mid-run.
struct divergence_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Occupation-cutoff leakage above the configured threshold.
struct truncation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A cached quantity required by an operation is missing or inconsistent.
struct internal_error : std::logic_error {
  using std::logic_error::logic_error;
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pairex
