#include "srgnn/discrepancy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "srgnn/kernels.hpp"

namespace srgnn {

Support empirical_support(const Matrix& p, const Matrix& q) {
  Support s{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Matrix* m : {&p, &q})
    for (double v : m->values()) {
      s.lower = std::min(s.lower, v);
      s.upper = std::max(s.upper, v);
    }
  return s;
}

std::vector<std::vector<double>> central_moments(const Matrix& rows, std::size_t max_moment) {
  if (max_moment < 1) throw std::invalid_argument("central_moments: need at least one moment");
  if (rows.rows() == 0) throw std::invalid_argument("central_moments: empty sample");
  const std::size_t m = rows.rows(), d = rows.cols();
  std::vector<std::vector<double>> out(max_moment, std::vector<double>(d, 0.0));
  auto& mean = out[0];
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += rows(i, j);
  for (auto& v : mean) v /= static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = rows(i, j) - mean[j];
      double pw = c;
      for (std::size_t k = 2; k <= max_moment; ++k) {
        pw *= c;
        out[k - 1][j] += pw;
      }
    }
  for (std::size_t k = 1; k < max_moment; ++k)
    for (auto& v : out[k]) v /= static_cast<double>(m);
  return out;
}

namespace {

void check_in_support(const Matrix& s, Support sup, const char* which) {
  constexpr double tol = 1e-9;
  for (double v : s.values())
    if (v < sup.lower - tol || v > sup.upper + tol)
      throw std::invalid_argument(std::string("cmd: sample '") + which + "' has entries outside the support");
}

}  // namespace

double cmd(const Matrix& p, const Matrix& q, std::size_t max_moment, Support support) {
  if (p.cols() != q.cols()) throw std::invalid_argument("cmd: dimension mismatch");
  const double span = std::abs(support.upper - support.lower);
  if (!(span > 0.0)) throw std::invalid_argument("cmd: degenerate support (a = b)");
  check_in_support(p, support, "p");
  check_in_support(q, support, "q");
  const auto mp = central_moments(p, max_moment);
  const auto mq = central_moments(q, max_moment);
  double total = 0.0;
  double scale = 1.0;
  for (std::size_t k = 0; k < max_moment; ++k) {
    scale *= span;
    double sq = 0.0;
    for (std::size_t j = 0; j < p.cols(); ++j) {
      const double diff = mp[k][j] - mq[k][j];
      sq += diff * diff;
    }
    total += std::sqrt(sq) / scale;
  }
  return total;
}

Matrix gaussian_kernel_matrix(const Matrix& xs, const Matrix& ys, const KernelConfig& cfg) {
  Matrix k = kernels::pairwise_distances(xs, ys);
  for (double& v : k.values()) {
    const double dist = cfg.distance == KernelDistance::squared ? v * v : v;
    double s = 0.0;
    for (double w : cfg.bandwidths) s += std::exp(-w * dist);
    v = s;
  }
  return k;
}

double mmd(const Matrix& p, const Matrix& q, const KernelConfig& cfg) {
  if (p.cols() != q.cols()) throw std::invalid_argument("mmd: dimension mismatch");
  if (p.rows() == 0 || q.rows() == 0) throw std::invalid_argument("mmd: empty sample");
  auto mean_of = [](const Matrix& m) {
    double s = 0.0;
    for (double v : m.values()) s += v;
    return s / static_cast<double>(m.size());
  };
  return mean_of(gaussian_kernel_matrix(p, p, cfg)) - 2.0 * mean_of(gaussian_kernel_matrix(p, q, cfg)) +
         mean_of(gaussian_kernel_matrix(q, q, cfg));
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace srgnn
