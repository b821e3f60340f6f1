#ifndef ADAPTQP_SPARSE_HPP
#define ADAPTQP_SPARSE_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "adaptqp/errors.hpp"

namespace adaptqp {

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Coordinate-format sparse matrix. Canonical form keeps entries sorted by
/// (row, col) with no duplicates and no explicit zeros.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(int rows, int cols) : rows_(rows), cols_(cols) {}
  SparseMatrix(int rows, int cols, std::vector<Triplet> entries)
      : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    canonicalize();
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const std::vector<Triplet>& entries() const { return entries_; }
  std::size_t nnz() const { return entries_.size(); }

  void insert(int row, int col, double value) {
    entries_.push_back({row, col, value});
    canonical_ = false;
  }

  /// Sorts by (row, col), rejects duplicate coordinates, drops explicit zeros.
  void canonicalize() {
    for (const Triplet& t : entries_) {
      if (t.row < 0 || t.row >= rows_ || t.col < 0 || t.col >= cols_) {
        throw DimensionMismatch("sparse entry index out of range");
      }
    }
    std::sort(entries_.begin(), entries_.end(), [](const Triplet& a, const Triplet& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    for (std::size_t i = 1; i < entries_.size(); ++i) {
      if (entries_[i].row == entries_[i - 1].row && entries_[i].col == entries_[i - 1].col) {
        throw InvalidArgument("duplicate sparse coordinate");
      }
    }
    std::erase_if(entries_, [](const Triplet& t) { return t.value == 0.0; });
    canonical_ = true;
  }

  bool canonical() const { return canonical_; }

  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows_, cols_);
    for (const Triplet& t : entries_) out(t.row, t.col) = t.value;
    return out;
  }

  static SparseMatrix from_dense(const Eigen::MatrixXd& m, double drop_tol = 0.0) {
    SparseMatrix out(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
    for (int i = 0; i < m.rows(); ++i) {
      for (int j = 0; j < m.cols(); ++j) {
        if (std::abs(m(i, j)) > drop_tol) out.insert(i, j, m(i, j));
      }
    }
    out.canonicalize();
    return out;
  }

  bool symmetric(double tol = 0.0) const {
    // Canonical order makes the transposed entry findable by binary search.
    for (const Triplet& t : entries_) {
      const double mirror = coeff(t.col, t.row);
      if (std::abs(mirror - t.value) > tol) return false;
    }
    return true;
  }

  double coeff(int row, int col) const {
    auto it = std::lower_bound(
        entries_.begin(), entries_.end(), std::pair<int, int>{row, col},
        [](const Triplet& t, const std::pair<int, int>& key) {
          return t.row != key.first ? t.row < key.first : t.col < key.second;
        });
    if (it != entries_.end() && it->row == row && it->col == col) return it->value;
    return 0.0;
  }

  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const {
    if (x.size() != cols_) throw DimensionMismatch("sparse multiply: size mismatch");
    Eigen::VectorXd y = Eigen::VectorXd::Zero(rows_);
    for (const Triplet& t : entries_) y[t.row] += t.value * x[t.col];
    return y;
  }

  Eigen::VectorXd multiply_transpose(const Eigen::VectorXd& x) const {
    if (x.size() != rows_) throw DimensionMismatch("sparse multiply_transpose: size mismatch");
    Eigen::VectorXd y = Eigen::VectorXd::Zero(cols_);
    for (const Triplet& t : entries_) y[t.col] += t.value * x[t.row];
    return y;
  }

  void scale_all(double factor) {
    for (Triplet& t : entries_) t.value *= factor;
  }

  void scale_rows(const Eigen::VectorXd& factors) {
    if (factors.size() != rows_) throw DimensionMismatch("scale_rows: size mismatch");
    for (Triplet& t : entries_) t.value *= factors[t.row];
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Triplet> entries_;
  bool canonical_ = true;
};

}  // namespace adaptqp

#endif
