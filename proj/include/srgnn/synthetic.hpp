#pragma once

// Small deterministic graphs for tests, plus a planted-community generator that
// emits citation-style datasets (sparse bag-of-words features, homophilous
// edges, localized sub-topics) for demos and pipeline checks.

#include <cstdint>

#include "srgnn/graph.hpp"
#include "srgnn/rng.hpp"

namespace srgnn::synthetic {

/// 0 - 1 - ... - (n-1). Features: n x 1 zeros unless provided. Labels all 0.
Graph path_graph(std::size_t n);
/// Node 0 is the hub.
Graph star_graph(std::size_t leaves);
/// Two disjoint cliques of `size` nodes each; all labels 0.
Graph two_cliques(std::size_t size);
/// G(n, p) with uniform features in [0, 1) and uniform labels.
Graph random_graph(std::size_t n, double edge_prob, std::size_t num_features, std::size_t num_classes,
                   std::uint64_t seed);

struct CitationLikeParams {
  std::size_t num_nodes = 2708;
  std::size_t num_classes = 7;
  std::size_t num_features = 1433;
  std::size_t communities_per_class = 6;
  double mean_degree = 3.9;
  /// Edge endpoint mix: same community / same class elsewhere / anywhere.
  double p_same_community = 0.60;
  double p_same_class = 0.08;
  std::size_t words_per_node = 18;
  double class_word_share = 0.04;
  double community_word_share = 0.25;
  std::size_t valid_size = 500;
  std::size_t test_size = 1000;
};

/// Row-normalized binary bag-of-words features; validation and test sets are
/// uniform draws.
Dataset citation_like(const CitationLikeParams& params, std::uint64_t seed);

}  // namespace srgnn::synthetic
