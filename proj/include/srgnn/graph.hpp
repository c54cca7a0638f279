#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "srgnn/matrix.hpp"

namespace srgnn {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

/// Undirected, unweighted graph with dense node features and class labels.
/// Adjacency is stored symmetrically in CSR form without self-loops.
class Graph {
 public:
  Graph() = default;

  /// Builds a graph from an undirected edge list. Each edge may appear in
  /// either orientation; duplicates collapse. Throws std::invalid_argument on
  /// self-loops, out-of-range endpoints, bad label or feature shapes.
  static Graph from_edges(std::size_t num_nodes, std::span<const Edge> edges, Matrix features,
                          std::vector<int> labels, std::size_t num_classes);

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_classes() const { return num_classes_; }
  std::size_t num_features() const { return features_.cols(); }
  /// Unique undirected edges.
  std::size_t num_edges() const { return indices_.size() / 2; }

  std::size_t degree(NodeId u) const { return indptr_[u + 1] - indptr_[u]; }
  std::span<const NodeId> neighbors(NodeId u) const {
    return {indices_.data() + indptr_[u], degree(u)};
  }
  bool has_edge(NodeId u, NodeId v) const;

  const Matrix& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  int label(NodeId u) const { return labels_[u]; }

  /// Unique undirected edges with u < v, ascending.
  std::vector<Edge> edge_list() const;

 private:
  std::size_t num_nodes_ = 0;
  std::size_t num_classes_ = 0;
  std::vector<std::size_t> indptr_{0};
  std::vector<NodeId> indices_;
  Matrix features_;
  std::vector<int> labels_;
};

/// The GCN propagation operator D^{-1/2}(A + I)D^{-1/2}, D the degree matrix of
/// A + I.
struct NormalizedAdjacency {
  CsrMatrix matrix;
  /// Degree in A + I (graph degree plus one).
  std::vector<double> degree;

  std::size_t num_nodes() const { return matrix.rows; }
};

NormalizedAdjacency normalize_adjacency(const Graph& g);

/// Ã^k X via k sparse-dense products.
Matrix sgc_features(const NormalizedAdjacency& adj, const Matrix& x, std::size_t k);

struct DatasetSplit {
  std::vector<NodeId> valid;
  std::vector<NodeId> test;
  /// Every node in neither valid nor test.
  std::vector<NodeId> train_pool;
};

struct Dataset {
  Graph graph;
  DatasetSplit split;
  std::string name;
};

class IngestError : public std::runtime_error {
 public:
  enum class Kind {
    missing_file,
    malformed,
    node_out_of_range,
    self_loop,
    feature_size,
    label_out_of_range,
    missing_label,
    count_mismatch,
    bad_split,
  };
  IngestError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Reads the neutral dataset directory (meta.json, graph.tsv, features.f32,
/// labels.tsv, splits.json).
Dataset ingest_dataset(const std::filesystem::path& directory);

/// Writes the neutral dataset directory. Features are narrowed to f32.
/// Extra keys in `meta_extra` (a JSON object text, may be empty) are merged
/// into meta.json.
void write_dataset(const std::filesystem::path& directory, const Graph& g,
                   const DatasetSplit& split, const std::string& meta_extra = {});

/// Completes a split from its validation and test sets. Throws IngestError
/// (bad_split) when they overlap or reference missing nodes.
DatasetSplit make_split(std::size_t num_nodes, std::vector<NodeId> valid, std::vector<NodeId> test);

/// Connected component id per node, ids assigned in order of the smallest node.
std::vector<std::uint32_t> connected_components(const Graph& g);

}  // namespace srgnn
