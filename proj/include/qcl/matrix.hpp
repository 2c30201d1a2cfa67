#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "qcl/diagnostics.hpp"
#include "qcl/scalar.hpp"

namespace qcl {

// Dense complex matrix, row-major. Small sizes only; everything is O(n^3)
// textbook code on purpose.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, Scalar(0)) {}

  static ComplexMatrix identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = Scalar(1);
    return m;
  }

  static ComplexMatrix column(const std::vector<Scalar>& v) {
    ComplexMatrix m(v.size(), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Scalar& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const Scalar& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  ComplexMatrix operator*(const ComplexMatrix& o) const {
    if (cols_ != o.rows_) throw InternalError("matrix product shape mismatch");
    ComplexMatrix r(rows_, o.cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t k = 0; k < cols_; ++k) {
        Scalar a = (*this)(i, k);
        if (a == Scalar(0)) continue;
        for (std::size_t j = 0; j < o.cols_; ++j) r(i, j) += a * o(k, j);
      }
    return r;
  }

  ComplexMatrix operator+(const ComplexMatrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw InternalError("matrix sum shape mismatch");
    ComplexMatrix r = *this;
    for (std::size_t i = 0; i < data_.size(); ++i) r.data_[i] += o.data_[i];
    return r;
  }

  ComplexMatrix operator-(const ComplexMatrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw InternalError("matrix diff shape mismatch");
    ComplexMatrix r = *this;
    for (std::size_t i = 0; i < data_.size(); ++i) r.data_[i] -= o.data_[i];
    return r;
  }

  ComplexMatrix operator*(const Scalar& a) const {
    ComplexMatrix r = *this;
    for (auto& x : r.data_) x *= a;
    return r;
  }

  ComplexMatrix dagger() const {
    ComplexMatrix r(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) r(j, i) = std::conj((*this)(i, j));
    return r;
  }

  ComplexMatrix kron(const ComplexMatrix& o) const {
    ComplexMatrix r(rows_ * o.rows_, cols_ * o.cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) {
        Scalar a = (*this)(i, j);
        if (a == Scalar(0)) continue;
        for (std::size_t k = 0; k < o.rows_; ++k)
          for (std::size_t l = 0; l < o.cols_; ++l)
            r(i * o.rows_ + k, j * o.cols_ + l) = a * o(k, l);
      }
    return r;
  }

  ComplexMatrix direct_sum(const ComplexMatrix& o) const {
    ComplexMatrix r(rows_ + o.rows_, cols_ + o.cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) r(i, j) = (*this)(i, j);
    for (std::size_t i = 0; i < o.rows_; ++i)
      for (std::size_t j = 0; j < o.cols_; ++j) r(rows_ + i, cols_ + j) = o(i, j);
    return r;
  }

  double max_abs() const {
    double m = 0;
    for (auto& x : data_) m = std::max(m, std::abs(x));
    return m;
  }

  bool is_isometry(double eps) const { return (dagger() * (*this) - identity(cols_)).max_abs() <= eps; }
  bool is_unitary(double eps) const {
    return rows_ == cols_ && is_isometry(eps) && ((*this) * dagger() - identity(rows_)).max_abs() <= eps;
  }

  bool is_isometry() const { return is_isometry(tolerance()); }
  bool is_unitary() const { return is_unitary(tolerance()); }

  const std::vector<Scalar>& data() const { return data_; }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<Scalar> data_;
};

// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations.
// Ascending order.
inline std::vector<double> hermitian_eigenvalues(ComplexMatrix h) {
  const std::size_t n = h.rows();
  if (n != h.cols()) throw InternalError("eigenvalues of a non-square matrix");
  auto offdiag = [&] {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += std::norm(h(i, j));
    return s;
  };
  for (int sweep = 0; sweep < 100 && offdiag() > 1e-24; ++sweep) {
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        Scalar apq = h(p, q);
        double mag = std::abs(apq);
        if (mag < 1e-18) continue;
        Scalar phase = apq / mag;
        double app = h(p, p).real(), aqq = h(q, q).real();
        double tau = (aqq - app) / (2.0 * mag);
        double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        Scalar s = phase * (t * c);
        // apply the rotation on the right (columns p,q) and left (rows p,q)
        for (std::size_t i = 0; i < n; ++i) {
          Scalar hip = h(i, p), hiq = h(i, q);
          h(i, p) = c * hip - std::conj(s) * hiq;
          h(i, q) = s * hip + c * hiq;
        }
        for (std::size_t j = 0; j < n; ++j) {
          Scalar hpj = h(p, j), hqj = h(q, j);
          h(p, j) = c * hpj - s * hqj;
          h(q, j) = std::conj(s) * hpj + c * hqj;
        }
      }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = h(i, i).real();
  std::sort(ev.begin(), ev.end());
  return ev;
}

}  // namespace qcl
