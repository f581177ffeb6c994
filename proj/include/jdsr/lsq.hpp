#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace jdsr {

/// Row-major sparse Jacobian assembled row by row; duplicate columns inside a
/// row are merged when the row is closed.
class CsrMatrix {
 public:
  explicit CsrMatrix(int cols = 0) : cols_(cols) {}

  void add(int col, double value) { pending_.emplace_back(col, value); }
  /// Closes the current row and returns its index.
  int end_row();

  int rows() const { return static_cast<int>(row_ptr_.size()) - 1; }
  int cols() const { return cols_; }
  std::size_t nonzeros() const { return val_.size(); }

  std::span<const int> row_cols(int r) const {
    return {col_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }
  std::span<const double> row_values(int r) const {
    return {val_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }

  void multiply(std::span<const double> x, std::span<double> y) const;
  /// y = J^T v via a cached transpose (built on first use).
  void multiply_transpose(std::span<const double> v, std::span<double> y) const;

 private:
  void build_transpose() const;

  int cols_;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<int> col_;
  std::vector<double> val_;
  std::vector<std::pair<int, double>> pending_;

  mutable bool transpose_ready_ = false;
  mutable std::vector<std::size_t> t_ptr_;
  mutable std::vector<int> t_row_;
  mutable std::vector<double> t_val_;
};

struct CgOptions {
  int max_iterations = 200;
  double tolerance = 1e-8;  ///< on |r| / |b|
};

struct CgReport {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
  bool breakdown = false;
};

/// Contiguous column range preconditioned by its dense inverse block.
struct ColumnBlock {
  int begin = 0;
  int size = 0;
};

/// Minimizes sum_i w_i (rhs_i - J_i x)^2 + sum_j damping_j x_j^2 by
/// preconditioned CG on the normal equations, starting from x. Columns not
/// covered by `blocks` use Jacobi scaling. Warm starts keep the quadratic
/// non-increasing along the iterations.
CgReport solve_weighted_least_squares(const CsrMatrix& J, std::span<const double> weights,
                                      std::span<const double> rhs, std::span<const double> damping,
                                      std::vector<double>& x, const CgOptions& options,
                                      const std::vector<ColumnBlock>& blocks = {});

/// Diagonal of J^T W J.
std::vector<double> normal_diagonal(const CsrMatrix& J, std::span<const double> weights);

}  // namespace jdsr
