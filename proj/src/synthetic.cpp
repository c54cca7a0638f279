#include "srgnn/synthetic.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace srgnn::synthetic {

Graph path_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (NodeId u = 0; u + 1 < n; ++u) edges.emplace_back(u, u + 1);
  return Graph::from_edges(n, edges, Matrix(n, 1), std::vector<int>(n, 0), 1);
}

Graph star_graph(std::size_t leaves) {
  std::vector<Edge> edges;
  for (NodeId v = 1; v <= leaves; ++v) edges.emplace_back(0, v);
  return Graph::from_edges(leaves + 1, edges, Matrix(leaves + 1, 1), std::vector<int>(leaves + 1, 0), 1);
}

Graph two_cliques(std::size_t size) {
  std::vector<Edge> edges;
  for (std::size_t block = 0; block < 2; ++block) {
    const auto base = static_cast<NodeId>(block * size);
    for (NodeId i = 0; i < size; ++i)
      for (NodeId j = i + 1; j < size; ++j) edges.emplace_back(base + i, base + j);
  }
  return Graph::from_edges(2 * size, edges, Matrix(2 * size, 1), std::vector<int>(2 * size, 0), 1);
}

Graph random_graph(std::size_t n, double edge_prob, std::size_t num_features, std::size_t num_classes,
                   std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v)
      if (uniform_unit(rng) < edge_prob) edges.emplace_back(u, v);
  Matrix x(n, num_features);
  for (auto& v : x.values()) v = uniform_unit(rng);
  std::vector<int> y(n);
  for (auto& l : y) l = static_cast<int>(uniform_index(rng, num_classes));
  return Graph::from_edges(n, edges, std::move(x), std::move(y), num_classes);
}

Dataset citation_like(const CitationLikeParams& p, std::uint64_t seed) {
  if (p.num_classes == 0 || p.communities_per_class == 0 || p.num_nodes < p.num_classes * p.communities_per_class)
    throw std::invalid_argument("citation_like: too few nodes for the requested communities");
  if (p.valid_size + p.test_size >= p.num_nodes)
    throw std::invalid_argument("citation_like: validation + test sets exceed node count");
  Rng rng(seed);
  const std::size_t n = p.num_nodes;
  const std::size_t groups = p.num_classes * p.communities_per_class;

  // Community g belongs to class g % C; sizes are as equal as possible.
  std::vector<std::uint32_t> community(n);
  std::vector<int> labels(n);
  std::vector<std::vector<NodeId>> members(groups);
  for (NodeId u = 0; u < n; ++u) {
    community[u] = static_cast<std::uint32_t>(u % groups);
    labels[u] = static_cast<int>(community[u] % p.num_classes);
    members[community[u]].push_back(u);
  }

  // Vocabulary: one block of class words per class, one block per community,
  // the rest shared background words.
  const std::size_t class_block = std::max<std::size_t>(1, p.num_features / (4 * p.num_classes));
  const std::size_t comm_block = std::max<std::size_t>(1, p.num_features / (2 * groups));
  const std::size_t used = class_block * p.num_classes + comm_block * groups;
  if (used >= p.num_features) throw std::invalid_argument("citation_like: vocabulary too small");
  const std::size_t background = p.num_features - used;

  Matrix x(n, p.num_features);
  for (NodeId u = 0; u < n; ++u) {
    const std::size_t c = static_cast<std::size_t>(labels[u]);
    const std::size_t g = community[u];
    std::size_t hits = 0;
    for (std::size_t w = 0; w < p.words_per_node; ++w) {
      const double r = uniform_unit(rng);
      std::size_t word;
      if (r < p.class_word_share)
        word = c * class_block + uniform_index(rng, class_block);
      else if (r < p.class_word_share + p.community_word_share)
        word = p.num_classes * class_block + g * comm_block + uniform_index(rng, comm_block);
      else
        word = used + uniform_index(rng, background);
      if (x(u, word) == 0.0) ++hits;
      x(u, word) = 1.0;
    }
    for (auto& v : x.row(u)) v /= static_cast<double>(hits);
  }

  std::vector<Edge> edges;
  const auto target_edges = static_cast<std::size_t>(p.mean_degree * static_cast<double>(n) / 2.0);
  // Class -> all members, for same-class draws outside the community.
  std::vector<std::vector<NodeId>> by_class(p.num_classes);
  for (NodeId u = 0; u < n; ++u) by_class[labels[u]].push_back(u);
  while (edges.size() < target_edges) {
    const auto u = static_cast<NodeId>(uniform_index(rng, n));
    const double r = uniform_unit(rng);
    NodeId v;
    if (r < p.p_same_community) {
      const auto& m = members[community[u]];
      v = m[uniform_index(rng, m.size())];
    } else if (r < p.p_same_community + p.p_same_class) {
      const auto& m = by_class[labels[u]];
      v = m[uniform_index(rng, m.size())];
    } else {
      v = static_cast<NodeId>(uniform_index(rng, n));
    }
    if (u != v) edges.emplace_back(std::min(u, v), std::max(u, v));
    if (edges.size() == target_edges) {
      std::sort(edges.begin(), edges.end());
      edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    }
  }

  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  std::vector<NodeId> valid(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(p.valid_size));
  std::vector<NodeId> test(order.begin() + static_cast<std::ptrdiff_t>(p.valid_size),
                           order.begin() + static_cast<std::ptrdiff_t>(p.valid_size + p.test_size));

  Dataset ds;
  ds.graph = Graph::from_edges(n, edges, std::move(x), std::move(labels), p.num_classes);
  ds.split = make_split(n, std::move(valid), std::move(test));
  ds.name = "citation-like";
  return ds;
}

}  // namespace srgnn::synthetic
