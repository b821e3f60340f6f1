#ifndef ADAPTQP_LDLT_HPP
#define ADAPTQP_LDLT_HPP

#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "adaptqp/errors.hpp"

namespace adaptqp {

/// Dense LDL' factorization with symmetric max-diagonal pivoting.
///
/// Intended for symmetric quasi-definite matrices (positive-definite upper
/// block, negative-definite lower block), which admit an LDL' factorization
/// with 1x1 pivots under any symmetric permutation.
class DenseLdlt {
 public:
  void factorize(const Eigen::MatrixXd& k, double zero_pivot_tol = 1e-12) {
    const int n = static_cast<int>(k.rows());
    if (k.cols() != n) throw DimensionMismatch("LDLT needs a square matrix");
    w_ = k;
    perm_.resize(n);
    std::iota(perm_.begin(), perm_.end(), 0);

    const double scale = std::max(1.0, w_.diagonal().cwiseAbs().maxCoeff());
    const double tol = zero_pivot_tol * scale;

    for (int step = 0; step < n; ++step) {
      int pivot = step;
      double best = std::abs(w_(step, step));
      for (int j = step + 1; j < n; ++j) {
        const double cand = std::abs(w_(j, j));
        if (cand > best) {
          best = cand;
          pivot = j;
        }
      }
      if (pivot != step) {
        w_.row(step).swap(w_.row(pivot));
        w_.col(step).swap(w_.col(pivot));
        std::swap(perm_[step], perm_[pivot]);
      }
      const double d = w_(step, step);
      if (std::abs(d) <= tol) throw SingularSystem("zero pivot in LDLT factorization");
      for (int i = step + 1; i < n; ++i) w_(i, step) /= d;
      // full trailing update so later symmetric swaps stay consistent
      for (int j = step + 1; j < n; ++j) {
        const double ljd = w_(j, step) * d;
        for (int i = step + 1; i < n; ++i) w_(i, j) -= w_(i, step) * ljd;
      }
    }
    size_ = n;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
    if (static_cast<int>(b.size()) != size_) throw DimensionMismatch("LDLT solve: size mismatch");
    Eigen::VectorXd y(size_);
    for (int i = 0; i < size_; ++i) y[i] = b[perm_[i]];
    // L y
    for (int j = 0; j < size_; ++j) {
      for (int i = j + 1; i < size_; ++i) y[i] -= w_(i, j) * y[j];
    }
    // D
    for (int i = 0; i < size_; ++i) y[i] /= w_(i, i);
    // L'
    for (int j = size_ - 1; j >= 0; --j) {
      for (int i = j + 1; i < size_; ++i) y[j] -= w_(i, j) * y[i];
    }
    Eigen::VectorXd x(size_);
    for (int i = 0; i < size_; ++i) x[perm_[i]] = y[i];
    return x;
  }

  int size() const { return size_; }

 private:
  Eigen::MatrixXd w_;  // L below the diagonal, D on it
  std::vector<int> perm_;
  int size_ = 0;
};

}  // namespace adaptqp

#endif
