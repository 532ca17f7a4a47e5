#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace perfquant::linalg {

/// Dense row-major matrix. Only what the deconvolution needs.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::vector<double> multiply(std::span<const double> x) const;
  Matrix transpose() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);

/// A = U * diag(singular) * V^T with singular values sorted descending.
struct Svd {
  Matrix u;
  std::vector<double> singular;
  Matrix v;
};

/// One-sided (Hestenes) Jacobi SVD of a square or tall matrix.
Svd jacobi_svd(const Matrix& a, int max_sweeps = 60);

}  // namespace perfquant::linalg
