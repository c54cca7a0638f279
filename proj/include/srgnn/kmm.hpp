#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "srgnn/discrepancy.hpp"
#include "srgnn/matrix.hpp"

namespace srgnn {

/// Box for instance weights, closed on both ends.
struct KmmBounds {
  double lower = 0.2;
  double upper = 5.0;
};

/// Default (0.2, 5.0); B_u defaults to 1 / B_l. Overrides are validated:
/// throws std::invalid_argument unless 0 <= B_l < B_u.
KmmBounds apply_bounds_default(std::size_t m, std::optional<double> lower = {},
                               std::optional<double> upper = {});

struct KmmProblem {
  Matrix train_rows;         ///< M x d, biased sample
  Matrix target_rows;        ///< M' x d, IID sample
  std::vector<int> labels;   ///< class per train row
  KmmBounds bounds;
  KernelConfig kernel;

  /// Throws unless M, M' >= 1, dimensions agree, and B_l <= 1 <= B_u (the
  /// all-ones vector must satisfy the per-class sum constraint).
  void validate() const;
};

/// f(beta) = beta' K beta - 2 kappa' beta + constant, equal to the squared
/// distance between the weighted train mean embedding and the target mean
/// embedding. K_ij = k(h_i, h_j) / M^2, kappa_i = sum_j k(h_i, h'_j) / (M M'),
/// constant = sum_jl k(h'_j, h'_l) / M'^2.
struct KmmQuadratic {
  Matrix kernel;
  std::vector<double> kappa;
  double constant = 0.0;

  double objective(std::span<const double> beta) const;
  std::vector<double> gradient(std::span<const double> beta) const;
};

KmmQuadratic build_qp(const KmmProblem& p);

struct InstanceWeights {
  std::vector<double> beta;
  double objective = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  double projected_gradient_norm = 0.0;
};

/// Euclidean projection onto {B_l <= beta_i <= B_u} intersected with
/// {sum_{i in class c} beta_i = |class c|} for every class, by Dykstra's
/// alternating projections (each class block is independent).
std::vector<double> project_feasible(std::span<const double> y, std::span<const int> labels, KmmBounds bounds);

/// Accelerated projected gradient with backtracking and restarts, started from
/// the all-ones vector. Stops once the gradient-mapping norm L * ||y - P(y - grad / L)||
/// at the extrapolated point y is at most `tol`; otherwise returns with
/// converged = false after `max_iter` steps.
InstanceWeights solve_weights(const KmmProblem& p, double tol = 1e-9, std::size_t max_iter = 20'000);

}  // namespace srgnn
