#include "jdsr/lsq.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "jdsr/error.hpp"
#include "jdsr/parallel.hpp"

namespace jdsr {

int CsrMatrix::end_row() {
  std::sort(pending_.begin(), pending_.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t k = 0; k < pending_.size(); ++k) {
    if (k > 0 && pending_[k].first == pending_[k - 1].first && col_.size() > row_ptr_.back()) {
      val_.back() += pending_[k].second;
      continue;
    }
    col_.push_back(pending_[k].first);
    val_.push_back(pending_[k].second);
  }
  pending_.clear();
  row_ptr_.push_back(col_.size());
  transpose_ready_ = false;
  return rows() - 1;
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  parallel_for(rows(), [&](std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) {
      double acc = 0.0;
      for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) acc += val_[k] * x[col_[k]];
      y[r] = acc;
    }
  });
}

void CsrMatrix::build_transpose() const {
  t_ptr_.assign(cols_ + 1, 0);
  for (int c : col_) ++t_ptr_[c + 1];
  for (int c = 0; c < cols_; ++c) t_ptr_[c + 1] += t_ptr_[c];
  t_row_.resize(col_.size());
  t_val_.resize(col_.size());
  std::vector<std::size_t> fill(t_ptr_.begin(), t_ptr_.end() - 1);
  for (int r = 0; r < rows(); ++r)
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const std::size_t dst = fill[col_[k]]++;
      t_row_[dst] = r;
      t_val_[dst] = val_[k];
    }
  transpose_ready_ = true;
}

void CsrMatrix::multiply_transpose(std::span<const double> v, std::span<double> y) const {
  if (!transpose_ready_) build_transpose();
  parallel_for(cols_, [&](std::size_t b, std::size_t e) {
    for (std::size_t c = b; c < e; ++c) {
      double acc = 0.0;
      for (std::size_t k = t_ptr_[c]; k < t_ptr_[c + 1]; ++k) acc += t_val_[k] * v[t_row_[k]];
      y[c] = acc;
    }
  });
}

std::vector<double> normal_diagonal(const CsrMatrix& J, std::span<const double> weights) {
  std::vector<double> diag(J.cols(), 0.0);
  for (int r = 0; r < J.rows(); ++r) {
    const auto cols = J.row_cols(r);
    const auto vals = J.row_values(r);
    for (std::size_t k = 0; k < cols.size(); ++k) diag[cols[k]] += weights[r] * vals[k] * vals[k];
  }
  return diag;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

class Preconditioner {
 public:
  Preconditioner(const CsrMatrix& J, std::span<const double> w, std::span<const double> damping,
                 const std::vector<ColumnBlock>& blocks)
      : blocks_(blocks) {
    diag_ = normal_diagonal(J, w);
    for (std::size_t j = 0; j < diag_.size(); ++j) {
      if (!damping.empty()) diag_[j] += damping[j];
      diag_[j] = diag_[j] > 0.0 ? 1.0 / diag_[j] : 0.0;
    }
    std::vector<int> owner(J.cols(), -1);
    for (std::size_t b = 0; b < blocks_.size(); ++b)
      for (int j = 0; j < blocks_[b].size; ++j) owner[blocks_[b].begin + j] = static_cast<int>(b);
    std::vector<Eigen::MatrixXd> H(blocks_.size());
    for (std::size_t b = 0; b < blocks_.size(); ++b) H[b] = Eigen::MatrixXd::Zero(blocks_[b].size, blocks_[b].size);
    for (int r = 0; r < J.rows(); ++r) {
      const auto cols = J.row_cols(r);
      const auto vals = J.row_values(r);
      for (std::size_t a = 0; a < cols.size(); ++a) {
        const int ob = owner[cols[a]];
        if (ob < 0) continue;
        for (std::size_t c = 0; c < cols.size(); ++c) {
          if (owner[cols[c]] != ob) continue;
          H[ob](cols[a] - blocks_[ob].begin, cols[c] - blocks_[ob].begin) += w[r] * vals[a] * vals[c];
        }
      }
    }
    inverse_.resize(blocks_.size());
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      if (!damping.empty())
        for (int j = 0; j < blocks_[b].size; ++j) H[b](j, j) += damping[blocks_[b].begin + j];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H[b]);
      const double top = es.eigenvalues().cwiseAbs().maxCoeff();
      Eigen::VectorXd inv_eval = es.eigenvalues();
      for (int k = 0; k < inv_eval.size(); ++k)
        inv_eval[k] = inv_eval[k] > 1e-12 * top && inv_eval[k] > 0 ? 1.0 / inv_eval[k] : 0.0;
      inverse_[b] = es.eigenvectors() * inv_eval.asDiagonal() * es.eigenvectors().transpose();
    }
  }

  void apply(std::span<const double> r, std::span<double> z) const {
    for (std::size_t j = 0; j < r.size(); ++j) z[j] = diag_[j] * r[j];
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      const int n = blocks_[b].size;
      const Eigen::Map<const Eigen::VectorXd> rb(r.data() + blocks_[b].begin, n);
      Eigen::Map<Eigen::VectorXd> zb(z.data() + blocks_[b].begin, n);
      zb = inverse_[b] * rb;
    }
  }

 private:
  std::vector<ColumnBlock> blocks_;
  std::vector<double> diag_;
  std::vector<Eigen::MatrixXd> inverse_;
};

}  // namespace

CgReport solve_weighted_least_squares(const CsrMatrix& J, std::span<const double> weights,
                                      std::span<const double> rhs, std::span<const double> damping,
                                      std::vector<double>& x, const CgOptions& options,
                                      const std::vector<ColumnBlock>& blocks) {
  const std::size_t n = J.cols();
  const std::size_t m = J.rows();
  require(weights.size() == m && rhs.size() == m && x.size() == n &&
              (damping.empty() || damping.size() == n),
          ErrorCode::kDimensionMismatch, "least squares: inconsistent sizes");

  std::vector<double> tmp_rows(m), wv(m), b(n), r(n), z(n), p(n), Hp(n);
  for (std::size_t i = 0; i < m; ++i) wv[i] = weights[i] * rhs[i];
  J.multiply_transpose(wv, b);

  auto normal_apply = [&](std::span<const double> v, std::span<double> out) {
    J.multiply(v, tmp_rows);
    for (std::size_t i = 0; i < m; ++i) tmp_rows[i] *= weights[i];
    J.multiply_transpose(tmp_rows, out);
    if (!damping.empty())
      for (std::size_t j = 0; j < n; ++j) out[j] += damping[j] * v[j];
  };

  CgReport report;
  const double b_norm = std::sqrt(dot(b, b));
  if (b_norm == 0.0 && std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; })) {
    report.converged = true;
    return report;
  }
  normal_apply(x, Hp);
  for (std::size_t j = 0; j < n; ++j) r[j] = b[j] - Hp[j];
  const double scale = b_norm > 0.0 ? b_norm : 1.0;

  const Preconditioner M(J, weights, damping, blocks);
  M.apply(r, z);
  p = z;
  double rz = dot(r, z);
  report.relative_residual = std::sqrt(dot(r, r)) / scale;
  if (report.relative_residual <= options.tolerance) {
    report.converged = true;
    return report;
  }
  for (int it = 0; it < options.max_iterations; ++it) {
    normal_apply(p, Hp);
    const double pHp = dot(p, Hp);
    if (!(pHp > 0.0) || !std::isfinite(pHp)) {
      report.breakdown = !(pHp == 0.0);
      break;
    }
    const double alpha = rz / pHp;
    for (std::size_t j = 0; j < n; ++j) {
      x[j] += alpha * p[j];
      r[j] -= alpha * Hp[j];
    }
    report.iterations = it + 1;
    report.relative_residual = std::sqrt(dot(r, r)) / scale;
    if (!std::isfinite(report.relative_residual)) {
      report.breakdown = true;
      break;
    }
    if (report.relative_residual <= options.tolerance) {
      report.converged = true;
      break;
    }
    M.apply(r, z);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t j = 0; j < n; ++j) p[j] = z[j] + beta * p[j];
  }
  return report;
}

}  // namespace jdsr
