#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "srgnn/matrix.hpp"

namespace srgnn {

/// Interval [lower, upper] containing every coordinate of a sample.
struct Support {
  double lower = -1.0;
  double upper = 1.0;
};

/// Tightest support covering both samples (raw-feature diagnostics).
Support empirical_support(const Matrix& p, const Matrix& q);

/// Coordinate-wise mean followed by the population central moments c_2..c_K
/// (divide by m). Result has K vectors of length d.
std::vector<std::vector<double>> central_moments(const Matrix& rows, std::size_t max_moment);

/// Central moment discrepancy truncated at `max_moment`:
///   |b-a|^-1 ||mean_p - mean_q|| + sum_k |b-a|^-k ||c_k(p) - c_k(q)||.
/// Throws std::invalid_argument on a degenerate support, dimension mismatch,
/// empty samples, or entries outside the support (tolerance 1e-9).
double cmd(const Matrix& p, const Matrix& q, std::size_t max_moment = 5, Support support = {});

enum class KernelDistance { euclidean, squared };

/// Mixture of exponential kernels sum_i exp(-w_i * dist(x, y)).
struct KernelConfig {
  std::array<double, 3> bandwidths{1.0, 0.1, 0.01};
  /// The mixture is written on the plain L2 distance; `squared` gives the
  /// conventional Gaussian form for comparison.
  KernelDistance distance = KernelDistance::euclidean;
};

Matrix gaussian_kernel_matrix(const Matrix& xs, const Matrix& ys, const KernelConfig& cfg = {});

/// Biased (V-statistic) squared MMD: mean(K_pp) - 2 mean(K_pq) + mean(K_qq).
double mmd(const Matrix& p, const Matrix& q, const KernelConfig& cfg = {});

/// Pearson correlation; NaN when fewer than two points or zero variance.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace srgnn
