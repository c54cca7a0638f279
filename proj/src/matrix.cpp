#include "srgnn/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace srgnn {

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Matrix Matrix::gather_rows(std::span<const std::uint32_t> idx) const {
  Matrix out(idx.size(), cols_);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= rows_) throw std::out_of_range("gather_rows: row index out of range");
    std::copy_n(data_.data() + idx[r] * cols_, cols_, out.data() + r * cols_);
  }
  return out;
}

Matrix Matrix::transpose() const {
  Matrix out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
  return out;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    m = std::max(m, std::abs(a.values()[k] - b.values()[k]));
  return m;
}

double CsrMatrix::at(std::size_t i, std::size_t j) const {
  auto cols_in_row = row_indices(i);
  auto it = std::lower_bound(cols_in_row.begin(), cols_in_row.end(), static_cast<std::uint32_t>(j));
  if (it == cols_in_row.end() || *it != j) return 0.0;
  return values[indptr[i] + static_cast<std::size_t>(it - cols_in_row.begin())];
}

CsrMatrix CsrMatrix::transpose() const {
  CsrMatrix t;
  t.rows = cols;
  t.cols = rows;
  t.indptr.assign(cols + 1, 0);
  for (auto c : indices) ++t.indptr[c + 1];
  for (std::size_t c = 0; c < cols; ++c) t.indptr[c + 1] += t.indptr[c];
  t.indices.resize(nnz());
  t.values.resize(nnz());
  std::vector<std::size_t> cursor(t.indptr.begin(), t.indptr.end() - 1);
  // Row-major scan keeps the transposed column indices ascending.
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t k = indptr[i]; k < indptr[i + 1]; ++k) {
      const std::size_t dst = cursor[indices[k]]++;
      t.indices[dst] = static_cast<std::uint32_t>(i);
      t.values[dst] = values[k];
    }
  }
  return t;
}

Matrix CsrMatrix::to_dense() const {
  Matrix out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t k = indptr[i]; k < indptr[i + 1]; ++k) out(i, indices[k]) = values[k];
  return out;
}

CsrMatrix CsrMatrix::from_dense(const Matrix& m) {
  CsrMatrix s;
  s.rows = m.rows();
  s.cols = m.cols();
  s.indptr.assign(1, 0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (m(i, j) != 0.0) {
        s.indices.push_back(static_cast<std::uint32_t>(j));
        s.values.push_back(m(i, j));
      }
    }
    s.indptr.push_back(s.indices.size());
  }
  return s;
}

}  // namespace srgnn
