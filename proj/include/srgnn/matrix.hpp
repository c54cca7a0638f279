#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace srgnn {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double value = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, value) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  void resize(std::size_t rows, std::size_t cols) {
    rows_ = rows;
    cols_ = cols;
    data_.assign(rows * cols, 0.0);
  }
  void fill(double v);

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  /// Rows gathered in the order given.
  Matrix gather_rows(std::span<const std::uint32_t> idx) const;
  Matrix transpose() const;

  static Matrix identity(std::size_t n);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double max_abs_diff(const Matrix& a, const Matrix& b);

/// Compressed sparse row matrix. Column indices within a row are ascending.
struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> indptr{0};
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  std::size_t nnz() const { return indices.size(); }
  std::span<const std::uint32_t> row_indices(std::size_t i) const {
    return {indices.data() + indptr[i], indptr[i + 1] - indptr[i]};
  }
  std::span<const double> row_values(std::size_t i) const {
    return {values.data() + indptr[i], indptr[i + 1] - indptr[i]};
  }
  /// Value at (i, j) or 0. Binary search within the row.
  double at(std::size_t i, std::size_t j) const;

  CsrMatrix transpose() const;
  Matrix to_dense() const;
  static CsrMatrix from_dense(const Matrix& m);
};

}  // namespace srgnn
