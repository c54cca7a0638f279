#pragma once

// Data-parallel linear-algebra kernels used by propagation, training and the
// kernel-mean-matching setup. Every kernel parallelizes over output rows only
// and never splits a reduction across threads, so results do not depend on the
// thread count. The `reference` namespace holds plain serial loops used as
// test oracles and benchmark baselines.

#include "srgnn/matrix.hpp"

namespace srgnn::kernels {

/// a * b with a sparse.
Matrix spmm(const CsrMatrix& a, const Matrix& b);
/// a * b.
Matrix gemm(const Matrix& a, const Matrix& b);
/// transpose(a) * b.
Matrix gemm_tn(const Matrix& a, const Matrix& b);
/// a * transpose(b).
Matrix gemm_nt(const Matrix& a, const Matrix& b);
/// Euclidean (not squared) distances between rows of x and rows of y.
Matrix pairwise_distances(const Matrix& x, const Matrix& y);

namespace reference {
Matrix spmm(const CsrMatrix& a, const Matrix& b);
Matrix gemm(const Matrix& a, const Matrix& b);
Matrix gemm_tn(const Matrix& a, const Matrix& b);
Matrix gemm_nt(const Matrix& a, const Matrix& b);
Matrix pairwise_distances(const Matrix& x, const Matrix& y);
}  // namespace reference

}  // namespace srgnn::kernels
