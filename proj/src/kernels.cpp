#include "srgnn/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace srgnn::kernels {
namespace {

void check(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

// Row kernels shared by the parallel and the serial paths.

inline void spmm_row(const CsrMatrix& a, const Matrix& b, std::size_t i, double* out) {
  const std::size_t n = b.cols();
  for (std::size_t k = a.indptr[i]; k < a.indptr[i + 1]; ++k) {
    const double v = a.values[k];
    const double* brow = b.data() + static_cast<std::size_t>(a.indices[k]) * n;
    for (std::size_t j = 0; j < n; ++j) out[j] += v * brow[j];
  }
}

inline void gemm_row(const Matrix& a, const Matrix& b, std::size_t i, double* out) {
  const std::size_t n = b.cols();
  const double* arow = a.data() + i * a.cols();
  for (std::size_t k = 0; k < a.cols(); ++k) {
    const double v = arow[k];
    if (v == 0.0) continue;
    const double* brow = b.data() + k * n;
    for (std::size_t j = 0; j < n; ++j) out[j] += v * brow[j];
  }
}

inline void gemm_tn_row(const Matrix& a, const Matrix& b, std::size_t i, double* out) {
  const std::size_t n = b.cols();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double v = a(r, i);
    if (v == 0.0) continue;
    const double* brow = b.data() + r * n;
    for (std::size_t j = 0; j < n; ++j) out[j] += v * brow[j];
  }
}

inline void gemm_nt_row(const Matrix& a, const Matrix& b, std::size_t i, double* out) {
  const double* arow = a.data() + i * a.cols();
  for (std::size_t j = 0; j < b.rows(); ++j) {
    const double* brow = b.data() + j * b.cols();
    double s = 0.0;
    for (std::size_t k = 0; k < a.cols(); ++k) s += arow[k] * brow[k];
    out[j] = s;
  }
}

inline void distance_row(const Matrix& x, const Matrix& y, std::size_t i, double* out) {
  const double* xrow = x.data() + i * x.cols();
  for (std::size_t j = 0; j < y.rows(); ++j) {
    const double* yrow = y.data() + j * y.cols();
    double s = 0.0;
    for (std::size_t k = 0; k < x.cols(); ++k) {
      const double d = xrow[k] - yrow[k];
      s += d * d;
    }
    out[j] = std::sqrt(s);
  }
}

template <class RowFn>
Matrix parallel_rows(std::size_t rows, std::size_t cols, RowFn fn) {
  Matrix out(rows, cols);
  const auto n = static_cast<long long>(rows);
#pragma omp parallel for schedule(dynamic, 16)
  for (long long i = 0; i < n; ++i) fn(static_cast<std::size_t>(i), out.data() + i * cols);
  return out;
}

}  // namespace

Matrix spmm(const CsrMatrix& a, const Matrix& b) {
  check(a.cols == b.rows(), "spmm: inner dimension mismatch");
  return parallel_rows(a.rows, b.cols(), [&](std::size_t i, double* o) { spmm_row(a, b, i, o); });
}

Matrix gemm(const Matrix& a, const Matrix& b) {
  check(a.cols() == b.rows(), "gemm: inner dimension mismatch");
  return parallel_rows(a.rows(), b.cols(), [&](std::size_t i, double* o) { gemm_row(a, b, i, o); });
}

Matrix gemm_tn(const Matrix& a, const Matrix& b) {
  check(a.rows() == b.rows(), "gemm_tn: inner dimension mismatch");
  return parallel_rows(a.cols(), b.cols(), [&](std::size_t i, double* o) { gemm_tn_row(a, b, i, o); });
}

Matrix gemm_nt(const Matrix& a, const Matrix& b) {
  check(a.cols() == b.cols(), "gemm_nt: inner dimension mismatch");
  return parallel_rows(a.rows(), b.rows(), [&](std::size_t i, double* o) { gemm_nt_row(a, b, i, o); });
}

Matrix pairwise_distances(const Matrix& x, const Matrix& y) {
  check(x.cols() == y.cols(), "pairwise_distances: dimension mismatch");
  return parallel_rows(x.rows(), y.rows(), [&](std::size_t i, double* o) { distance_row(x, y, i, o); });
}

namespace reference {

// Textbook loops, kept independent of the row kernels above.

Matrix spmm(const CsrMatrix& a, const Matrix& b) {
  check(a.cols == b.rows(), "spmm: inner dimension mismatch");
  Matrix out(a.rows, b.cols());
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = a.indptr[i]; k < a.indptr[i + 1]; ++k)
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += a.values[k] * b(a.indices[k], j);
  return out;
}

Matrix gemm(const Matrix& a, const Matrix& b) {
  check(a.cols() == b.rows(), "gemm: inner dimension mismatch");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

Matrix gemm_tn(const Matrix& a, const Matrix& b) { return gemm(a.transpose(), b); }

Matrix gemm_nt(const Matrix& a, const Matrix& b) { return gemm(a, b.transpose()); }

Matrix pairwise_distances(const Matrix& x, const Matrix& y) {
  check(x.cols() == y.cols(), "pairwise_distances: dimension mismatch");
  Matrix out(x.rows(), y.rows());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < y.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < x.cols(); ++k) s += (x(i, k) - y(j, k)) * (x(i, k) - y(j, k));
      out(i, j) = std::sqrt(s);
    }
  return out;
}

}  // namespace reference
}  // namespace srgnn::kernels
