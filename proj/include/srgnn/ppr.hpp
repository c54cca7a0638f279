#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "srgnn/graph.hpp"

namespace srgnn {

struct PprParams {
  double alpha = 0.1;      ///< teleport probability
  double epsilon = 1e-3;   ///< residual tolerance, scaled by degree
  std::size_t gamma = 100; ///< number of top entries kept

  /// Throws std::invalid_argument unless 0 < alpha < 1, epsilon > 0, gamma >= 1.
  void validate() const;

  /// Settings used for the single-class visualization sampler: gamma 20, epsilon 0.005.
  static PprParams appendix();
};

using NodeMass = std::pair<NodeId, double>;

/// Sparse personalized PageRank vector. `entries` and `residual` are sorted by node
/// id and hold strictly positive values only.
struct PprVector {
  NodeId seed = 0;
  std::vector<NodeMass> entries;
  std::vector<NodeMass> residual;

  double mass(NodeId u) const;
  double total_mass() const;
};

/// Largest connected component the dense solver accepts by default.
inline constexpr std::size_t kExactPprMaxNodes = 50'000;

/// Row `seed` of alpha (I - (1 - alpha) Ã)^{-1}, by a dense Cholesky solve on the
/// seed's connected component (entries outside it are exactly zero).
///
/// With the symmetric normalization the rows are not probability vectors; the
/// conserved quantity is sum_v pi(v) sqrt(d_v / d_seed) = 1, d = degree + 1. On
/// regular components this reduces to sum_v pi(v) = 1.
///
/// Throws std::length_error if the component exceeds `max_nodes`.
PprVector exact_ppr(const NormalizedAdjacency& adj, NodeId seed, double alpha,
                    std::size_t max_nodes = kExactPprMaxNodes);

/// Called after every push with the current estimate and residual (dense, length n).
using PushObserver = std::function<void(std::span<const double> estimate, std::span<const double> residual)>;

/// Local push on Ã. Nodes whose residual reaches epsilon * d_u are pushed in FIFO
/// order; a push moves alpha * r(u) into the estimate and spreads
/// (1 - alpha) * r(u) * Ã(:, u) back into the residual, preserving
/// pi = p + alpha (I - (1 - alpha) Ã)^{-1} r. On return r(u) < epsilon * d_u for all u.
PprVector push_ppr(const NormalizedAdjacency& adj, NodeId seed, const PprParams& params,
                   const PushObserver& observer = {});

/// Entries sorted by mass descending, ties by ascending node id, cut to gamma.
std::vector<NodeMass> topk_truncate(const PprVector& v, std::size_t gamma);

/// Dense exact PPR rows for every node, factorized once per connected component
/// and shared read-only between threads.
class ExactPprTable {
 public:
  ExactPprTable(const NormalizedAdjacency& adj, double alpha, std::size_t max_nodes = kExactPprMaxNodes);
  ~ExactPprTable();
  ExactPprTable(ExactPprTable&&) noexcept;
  ExactPprTable& operator=(ExactPprTable&&) noexcept;

  double alpha() const { return alpha_; }
  std::size_t num_nodes() const { return num_nodes_; }

  /// Writes the dense row for `seed` (length num_nodes) into `out`.
  void row(NodeId seed, std::span<double> out) const;
  PprVector vector(NodeId seed) const;

 private:
  struct Block;
  double alpha_;
  std::size_t num_nodes_;
  std::vector<std::uint32_t> block_of_;
  std::vector<std::uint32_t> index_in_block_;
  std::vector<Block> blocks_;
};

}  // namespace srgnn
