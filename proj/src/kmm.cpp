#include "srgnn/kmm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace srgnn {

KmmBounds apply_bounds_default(std::size_t m, std::optional<double> lower, std::optional<double> upper) {
  if (m < 1) throw std::invalid_argument("kmm bounds: need at least one training example");
  KmmBounds b;
  if (lower) {
    b.lower = *lower;
    if (!upper) b.upper = b.lower > 0.0 ? 1.0 / b.lower : b.upper;
  }
  if (upper) b.upper = *upper;
  if (!(b.lower >= 0.0)) throw std::invalid_argument("kmm bounds: B_l must be non-negative");
  if (!(b.upper > b.lower)) throw std::invalid_argument("kmm bounds: B_u must exceed B_l");
  return b;
}

void KmmProblem::validate() const {
  if (train_rows.rows() < 1 || target_rows.rows() < 1)
    throw std::invalid_argument("kmm: both samples must be non-empty");
  if (train_rows.cols() != target_rows.cols()) throw std::invalid_argument("kmm: dimension mismatch");
  if (labels.size() != train_rows.rows()) throw std::invalid_argument("kmm: one label per training row required");
  if (!(bounds.lower <= 1.0 && 1.0 <= bounds.upper && bounds.lower >= 0.0))
    throw std::invalid_argument("kmm: bounds must satisfy 0 <= B_l <= 1 <= B_u");
}

double KmmQuadratic::objective(std::span<const double> beta) const {
  const std::size_t m = kappa.size();
  double quad = 0.0, lin = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < m; ++j) row += kernel(i, j) * beta[j];
    quad += beta[i] * row;
    lin += kappa[i] * beta[i];
  }
  return quad - 2.0 * lin + constant;
}

std::vector<double> KmmQuadratic::gradient(std::span<const double> beta) const {
  const std::size_t m = kappa.size();
  std::vector<double> g(m);
  for (std::size_t i = 0; i < m; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < m; ++j) row += kernel(i, j) * beta[j];
    g[i] = 2.0 * row - 2.0 * kappa[i];
  }
  return g;
}

KmmQuadratic build_qp(const KmmProblem& p) {
  p.validate();
  const double m = static_cast<double>(p.train_rows.rows());
  const double mt = static_cast<double>(p.target_rows.rows());
  KmmQuadratic q;
  q.kernel = gaussian_kernel_matrix(p.train_rows, p.train_rows, p.kernel);
  for (double& v : q.kernel.values()) v /= m * m;
  const Matrix cross = gaussian_kernel_matrix(p.train_rows, p.target_rows, p.kernel);
  q.kappa.assign(p.train_rows.rows(), 0.0);
  for (std::size_t i = 0; i < cross.rows(); ++i) {
    double s = 0.0;
    for (double v : cross.row(i)) s += v;
    q.kappa[i] = s / (m * mt);
  }
  const Matrix target = gaussian_kernel_matrix(p.target_rows, p.target_rows, p.kernel);
  double s = 0.0;
  for (double v : target.values()) s += v;
  q.constant = s / (mt * mt);
  return q;
}

std::vector<double> project_feasible(std::span<const double> y, std::span<const int> labels, KmmBounds bounds) {
  if (y.size() != labels.size()) throw std::invalid_argument("project_feasible: length mismatch");
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);

  std::vector<double> out(y.begin(), y.end());
  constexpr std::size_t max_rounds = 100'000;
  for (const auto& [c, idx] : groups) {
    const std::size_t k = idx.size();
    const double target_sum = static_cast<double>(k);
    std::vector<double> x(k), inc_box(k, 0.0), z(k);
    for (std::size_t t = 0; t < k; ++t) x[t] = y[idx[t]];
    for (std::size_t round = 0; round < max_rounds; ++round) {
      // Box, with Dykstra's correction. The iterate can sit still for several
      // rounds while the correction moves, so both are watched.
      double change = 0.0;
      for (std::size_t t = 0; t < k; ++t) {
        const double v = x[t] + inc_box[t];
        z[t] = std::clamp(v, bounds.lower, bounds.upper);
        const double inc = v - z[t];
        change = std::max(change, std::abs(inc - inc_box[t]));
        inc_box[t] = inc;
      }
      // Hyperplane sum = |class|; affine, so it needs no correction.
      double sum = 0.0;
      for (std::size_t t = 0; t < k; ++t) sum += z[t];
      const double shift = (sum - target_sum) / static_cast<double>(k);
      double violation = 0.0;
      for (std::size_t t = 0; t < k; ++t) {
        const double next = z[t] - shift;
        change = std::max(change, std::abs(next - x[t]));
        violation = std::max({violation, bounds.lower - next, next - bounds.upper});
        x[t] = next;
      }
      if (change <= 1e-14 && violation <= 1e-12) break;
    }
    for (std::size_t t = 0; t < k; ++t) out[idx[t]] = x[t];
  }
  return out;
}

namespace {

double largest_eigenvalue(const Matrix& k) {
  const std::size_t m = k.rows();
  std::vector<double> v(m, 1.0 / std::sqrt(static_cast<double>(m))), w(m);
  double lambda = 0.0;
  for (int it = 0; it < 50; ++it) {
    double norm = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += k(i, j) * v[j];
      w[i] = s;
      norm += s * s;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    lambda = norm;
    for (std::size_t i = 0; i < m; ++i) v[i] = w[i] / norm;
  }
  return lambda;
}

}  // namespace

InstanceWeights solve_weights(const KmmProblem& p, double tol, std::size_t max_iter) {
  const KmmQuadratic qp = build_qp(p);
  const std::size_t m = qp.kappa.size();
  // Hessian is 2K.
  double lipschitz = std::max(2.0 * largest_eigenvalue(qp.kernel), 1e-300);
  // 2 trace(K) bounds 2 lambda_max, so backtracking never needs to go past it;
  // beyond that a failed check is rounding noise.
  double trace = 0.0;
  for (std::size_t i = 0; i < m; ++i) trace += qp.kernel(i, i);
  const double lipschitz_cap = std::max(2.0 * trace, lipschitz);

  // Accelerated projected gradient with function-value restarts.
  InstanceWeights w;
  w.beta.assign(m, 1.0);
  double f = qp.objective(w.beta);
  std::vector<double> y = w.beta, step(m), next;
  double t = 1.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    const auto g = qp.gradient(y);
    const double fy = qp.objective(y);
    double f_next = 0.0;
    // Backtracking on the quadratic upper bound at y; the power-iteration
    // estimate of the Lipschitz constant can be slightly low.
    for (;;) {
      for (std::size_t i = 0; i < m; ++i) step[i] = y[i] - g[i] / lipschitz;
      next = project_feasible(step, p.labels, p.bounds);
      double lin = 0.0, dist = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        lin += g[i] * (next[i] - y[i]);
        dist += (next[i] - y[i]) * (next[i] - y[i]);
      }
      f_next = qp.objective(next);
      if (f_next <= fy + lin + 0.5 * lipschitz * dist + 1e-15 * std::abs(fy) || lipschitz >= lipschitz_cap) {
        w.projected_gradient_norm = lipschitz * std::sqrt(dist);
        break;
      }
      lipschitz = std::min(2.0 * lipschitz, lipschitz_cap);
    }
    w.iterations = it + 1;
    if (w.projected_gradient_norm <= tol) {
      w.converged = true;
      if (f_next <= f) w.beta = next;
      break;
    }
    if (f_next > f && t > 1.0) {
      // Momentum overshot: restart from the last iterate. A plain step is
      // always taken; near the optimum its decrease is below rounding.
      y = w.beta;
      t = 1.0;
      continue;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    for (std::size_t i = 0; i < m; ++i) y[i] = next[i] + (t - 1.0) / t_next * (next[i] - w.beta[i]);
    t = t_next;
    w.beta = next;
    f = f_next;
  }
  w.objective = qp.objective(w.beta);
  return w;
}

}  // namespace srgnn
