#pragma once

#include <map>
#include <vector>

#include <Eigen/SparseCore>

#include "pairex/grid.hpp"

namespace pairex::fock {

using SpMat = Eigen::SparseMatrix<cd>;

/// Truncated occupation-number basis over the sites of a 1-d periodic
/// lattice: all tuples (n_1..n_M) with sum <= n_max, enumerated by total
/// particle number, lexicographically within each sector.
class FockSpec {
 public:
  static FockSpec build(GridPtr grid, int n_max) {
    if (grid->dim() != 1)
      throw config_error("fock: the lattice model is one-dimensional");
    if (n_max < 1) throw config_error("fock: n_max must be >= 1");
    FockSpec s;
    s.grid_ = std::move(grid);
    s.n_max_ = n_max;
    const int m = s.grid_->points_per_axis();
    std::vector<int> tuple(m, 0);
    for (int total = 0; total <= n_max; ++total) {
      s.sector_begin_.push_back(static_cast<long>(s.basis_.size()));
      enumerate(m, total, 0, tuple, s.basis_);
    }
    s.sector_begin_.push_back(static_cast<long>(s.basis_.size()));
    if (s.basis_.size() > 100000)
      throw config_error("fock: dimension " + std::to_string(s.basis_.size()) +
                         " exceeds the desk-scale guard");
    for (std::size_t i = 0; i < s.basis_.size(); ++i)
      s.index_[s.basis_[i]] = static_cast<long>(i);
    return s;
  }

  const GridPtr& grid() const { return grid_; }
  int n_max() const { return n_max_; }
  int modes() const { return grid_->points_per_axis(); }
  long dimension() const { return static_cast<long>(basis_.size()); }

  const std::vector<int>& occupation(long idx) const { return basis_[idx]; }
  int total_occupation(long idx) const {
    int s = 0;
    for (int n : basis_[idx]) s += n;
    return s;
  }

  /// Index of a tuple, or -1 if it lies outside the truncation.
  long find(const std::vector<int>& tuple) const {
    auto it = index_.find(tuple);
    return it == index_.end() ? -1 : it->second;
  }

  /// [begin, end) index range of the total-occupation-n sector.
  std::pair<long, long> sector(int n) const {
    if (n < 0 || n > n_max_) return {0, 0};
    return {sector_begin_[n], sector_begin_[n + 1]};
  }

  /// Basis indices with total occupation <= n_max - margin.
  std::vector<long> safe_indices(int margin) const {
    std::vector<long> out;
    for (long i = 0; i < dimension(); ++i)
      if (total_occupation(i) <= n_max_ - margin) out.push_back(i);
    return out;
  }

 private:
  static void enumerate(int modes, int remaining, int pos,
                        std::vector<int>& tuple,
                        std::vector<std::vector<int>>& out) {
    if (pos == modes - 1) {
      tuple[pos] = remaining;
      out.push_back(tuple);
      tuple[pos] = 0;
      return;
    }
    for (int k = 0; k <= remaining; ++k) {
      tuple[pos] = k;
      enumerate(modes, remaining - k, pos + 1, tuple, out);
    }
    tuple[pos] = 0;
  }

  GridPtr grid_;
  int n_max_ = 0;
  std::vector<std::vector<int>> basis_;
  std::map<std::vector<int>, long> index_;
  std::vector<long> sector_begin_;
};

/// Vacuum (1,0,0,...).
inline Vec vacuum(const FockSpec& spec) {
  Vec v = Vec::Zero(spec.dimension());
  v[0] = 1.0;
  return v;
}

/// Mass of a state beyond total occupation n_max - margin.
inline double tail_mass(const FockSpec& spec, const Vec& v, int margin) {
  double s = 0;
  for (long i = 0; i < spec.dimension(); ++i)
    if (spec.total_occupation(i) > spec.n_max() - margin) s += std::norm(v[i]);
  return s;
}

}  // namespace pairex::fock
