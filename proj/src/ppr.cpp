#include "srgnn/ppr.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace srgnn {

void PprParams::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("ppr: alpha must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("ppr: epsilon must be positive");
  if (gamma < 1) throw std::invalid_argument("ppr: gamma must be at least 1");
}

PprParams PprParams::appendix() { return PprParams{0.1, 0.005, 20}; }

double PprVector::mass(NodeId u) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), u,
                             [](const NodeMass& e, NodeId id) { return e.first < id; });
  return it != entries.end() && it->first == u ? it->second : 0.0;
}

double PprVector::total_mass() const {
  double s = 0.0;
  for (const auto& e : entries) s += e.second;
  return s;
}

namespace {

std::vector<NodeId> component_of(const CsrMatrix& a, NodeId seed) {
  std::vector<char> seen(a.rows, 0);
  std::vector<NodeId> out{seed};
  seen[seed] = 1;
  for (std::size_t head = 0; head < out.size(); ++head)
    for (NodeId v : a.row_indices(out[head]))
      if (!seen[v]) {
        seen[v] = 1;
        out.push_back(v);
      }
  std::sort(out.begin(), out.end());
  return out;
}

// I - (1 - alpha) Ã restricted to `nodes` (sorted).
Eigen::MatrixXd system_matrix(const CsrMatrix& a, const std::vector<NodeId>& nodes, double alpha) {
  const auto m = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    auto cols = a.row_indices(nodes[static_cast<std::size_t>(i)]);
    auto vals = a.row_values(nodes[static_cast<std::size_t>(i)]);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      auto it = std::lower_bound(nodes.begin(), nodes.end(), cols[k]);
      sys(i, it - nodes.begin()) -= (1.0 - alpha) * vals[k];
    }
  }
  return sys;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("ppr: alpha must lie in (0, 1)");
}

void check_size(std::size_t size, std::size_t max_nodes) {
  if (size > max_nodes)
    throw std::length_error("exact ppr: component of " + std::to_string(size) +
                            " nodes exceeds the dense-solve guard of " + std::to_string(max_nodes));
}

}  // namespace

PprVector exact_ppr(const NormalizedAdjacency& adj, NodeId seed, double alpha, std::size_t max_nodes) {
  check_alpha(alpha);
  if (seed >= adj.num_nodes()) throw std::out_of_range("exact_ppr: seed out of range");
  const auto nodes = component_of(adj.matrix, seed);
  check_size(nodes.size(), max_nodes);

  Eigen::LLT<Eigen::MatrixXd> llt(system_matrix(adj.matrix, nodes, alpha));
  // I - (1 - alpha) Ã has spectrum in [alpha, 2 - alpha]: always positive definite.
  if (llt.info() != Eigen::Success) throw std::runtime_error("exact_ppr: system is not positive definite");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nodes.size()));
  const auto pos = std::lower_bound(nodes.begin(), nodes.end(), seed) - nodes.begin();
  rhs(pos) = alpha;
  const Eigen::VectorXd x = llt.solve(rhs);

  PprVector v;
  v.seed = seed;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double val = x(static_cast<Eigen::Index>(i));
    if (val > 0.0) v.entries.emplace_back(nodes[i], val);
  }
  return v;
}

PprVector push_ppr(const NormalizedAdjacency& adj, NodeId seed, const PprParams& params,
                   const PushObserver& observer) {
  params.validate();
  const std::size_t n = adj.num_nodes();
  if (seed >= n) throw std::out_of_range("push_ppr: seed out of range");
  const CsrMatrix& a = adj.matrix;
  const double alpha = params.alpha;
  const double eps = params.epsilon;

  std::vector<double> p(n, 0.0), r(n, 0.0);
  std::vector<char> queued(n, 0);
  std::vector<NodeId> touched{seed};
  std::vector<char> is_touched(n, 0);
  is_touched[seed] = 1;
  std::deque<NodeId> queue;

  r[seed] = 1.0;
  if (r[seed] >= eps * adj.degree[seed]) {
    queue.push_back(seed);
    queued[seed] = 1;
  }
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    queued[u] = 0;
    const double rho = r[u];
    r[u] = 0.0;
    p[u] += alpha * rho;
    const double spread = (1.0 - alpha) * rho;
    auto cols = a.row_indices(u);
    auto vals = a.row_values(u);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const NodeId v = cols[k];
      r[v] += spread * vals[k];
      if (!is_touched[v]) {
        is_touched[v] = 1;
        touched.push_back(v);
      }
      if (!queued[v] && r[v] >= eps * adj.degree[v]) {
        queued[v] = 1;
        queue.push_back(v);
      }
    }
    if (observer) observer(p, r);
  }

  std::sort(touched.begin(), touched.end());
  PprVector v;
  v.seed = seed;
  for (NodeId u : touched) {
    if (p[u] > 0.0) v.entries.emplace_back(u, p[u]);
    if (r[u] > 0.0) v.residual.emplace_back(u, r[u]);
  }
  return v;
}

std::vector<NodeMass> topk_truncate(const PprVector& v, std::size_t gamma) {
  if (gamma < 1) throw std::invalid_argument("topk_truncate: gamma must be at least 1");
  std::vector<NodeMass> out;
  for (const auto& e : v.entries)
    if (e.second > 0.0) out.push_back(e);
  auto by_mass = [](const NodeMass& x, const NodeMass& y) {
    return x.second != y.second ? x.second > y.second : x.first < y.first;
  };
  if (out.size() > gamma) {
    std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(gamma), out.end(), by_mass);
    out.resize(gamma);
  } else {
    std::sort(out.begin(), out.end(), by_mass);
  }
  return out;
}

// ---------------------------------------------------------------------------

struct ExactPprTable::Block {
  std::vector<NodeId> nodes;
  Eigen::MatrixXd rows;  // alpha * inverse, symmetric
};

ExactPprTable::ExactPprTable(const NormalizedAdjacency& adj, double alpha, std::size_t max_nodes)
    : alpha_(alpha), num_nodes_(adj.num_nodes()) {
  check_alpha(alpha);
  constexpr auto unset = std::numeric_limits<std::uint32_t>::max();
  block_of_.assign(num_nodes_, unset);
  index_in_block_.assign(num_nodes_, 0);
  for (NodeId s = 0; s < num_nodes_; ++s) {
    if (block_of_[s] != unset) continue;
    Block b;
    b.nodes = component_of(adj.matrix, s);
    check_size(b.nodes.size(), max_nodes);
    const auto id = static_cast<std::uint32_t>(blocks_.size());
    for (std::size_t i = 0; i < b.nodes.size(); ++i) {
      block_of_[b.nodes[i]] = id;
      index_in_block_[b.nodes[i]] = static_cast<std::uint32_t>(i);
    }
    const auto m = static_cast<Eigen::Index>(b.nodes.size());
    Eigen::LLT<Eigen::MatrixXd> llt(system_matrix(adj.matrix, b.nodes, alpha));
    if (llt.info() != Eigen::Success) throw std::runtime_error("exact ppr: system is not positive definite");
    b.rows = llt.solve(Eigen::MatrixXd::Identity(m, m) * alpha);
    blocks_.push_back(std::move(b));
  }
}

ExactPprTable::~ExactPprTable() = default;
ExactPprTable::ExactPprTable(ExactPprTable&&) noexcept = default;
ExactPprTable& ExactPprTable::operator=(ExactPprTable&&) noexcept = default;

void ExactPprTable::row(NodeId seed, std::span<double> out) const {
  if (seed >= num_nodes_) throw std::out_of_range("ExactPprTable: seed out of range");
  if (out.size() != num_nodes_) throw std::invalid_argument("ExactPprTable: output length mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  const Block& b = blocks_[block_of_[seed]];
  const auto col = static_cast<Eigen::Index>(index_in_block_[seed]);
  // Column access is contiguous in Eigen's column-major storage; the matrix is symmetric.
  for (std::size_t i = 0; i < b.nodes.size(); ++i)
    out[b.nodes[i]] = std::max(0.0, b.rows(static_cast<Eigen::Index>(i), col));
}

PprVector ExactPprTable::vector(NodeId seed) const {
  std::vector<double> dense(num_nodes_);
  row(seed, dense);
  PprVector v;
  v.seed = seed;
  for (NodeId u = 0; u < num_nodes_; ++u)
    if (dense[u] > 0.0) v.entries.emplace_back(u, dense[u]);
  return v;
}

}  // namespace srgnn
