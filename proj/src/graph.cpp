#include "srgnn/graph.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <queue>
#include <sstream>

#include <json.hpp>

#include "srgnn/kernels.hpp"

namespace srgnn {

using nlohmann::json;
namespace fs = std::filesystem;

Graph Graph::from_edges(std::size_t num_nodes, std::span<const Edge> edges, Matrix features,
                        std::vector<int> labels, std::size_t num_classes) {
  if (features.rows() != num_nodes)
    throw std::invalid_argument("feature rows do not match node count");
  if (labels.size() != num_nodes) throw std::invalid_argument("label count does not match node count");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes)
      throw std::invalid_argument("label out of range [0, num_classes)");

  std::vector<Edge> directed;
  directed.reserve(edges.size() * 2);
  for (auto [u, v] : edges) {
    if (u >= num_nodes || v >= num_nodes) throw std::invalid_argument("edge endpoint out of range");
    if (u == v) throw std::invalid_argument("self-loop in raw edge list");
    directed.emplace_back(u, v);
    directed.emplace_back(v, u);
  }
  std::sort(directed.begin(), directed.end());
  directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

  Graph g;
  g.num_nodes_ = num_nodes;
  g.num_classes_ = num_classes;
  g.indptr_.assign(num_nodes + 1, 0);
  g.indices_.reserve(directed.size());
  for (auto [u, v] : directed) {
    ++g.indptr_[u + 1];
    g.indices_.push_back(v);
  }
  for (std::size_t i = 0; i < num_nodes; ++i) g.indptr_[i + 1] += g.indptr_[i];
  g.features_ = std::move(features);
  g.labels_ = std::move(labels);
  return g;
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<Edge> Graph::edge_list() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (NodeId u = 0; u < num_nodes_; ++u)
    for (NodeId v : neighbors(u))
      if (u < v) out.emplace_back(u, v);
  return out;
}

NormalizedAdjacency normalize_adjacency(const Graph& g) {
  const std::size_t n = g.num_nodes();
  NormalizedAdjacency adj;
  adj.degree.resize(n);
  for (NodeId u = 0; u < n; ++u) adj.degree[u] = static_cast<double>(g.degree(u) + 1);

  CsrMatrix& m = adj.matrix;
  m.rows = m.cols = n;
  m.indptr.assign(1, 0);
  m.indices.reserve(2 * g.num_edges() + n);
  m.values.reserve(2 * g.num_edges() + n);
  for (NodeId u = 0; u < n; ++u) {
    bool self_done = false;
    auto push = [&](NodeId v) {
      m.indices.push_back(v);
      // d_u * d_v is commutative in floating point, so the matrix is exactly symmetric.
      m.values.push_back(1.0 / std::sqrt(adj.degree[u] * adj.degree[v]));
    };
    for (NodeId v : g.neighbors(u)) {
      if (!self_done && v > u) {
        push(u);
        self_done = true;
      }
      push(v);
    }
    if (!self_done) push(u);
    m.indptr.push_back(m.indices.size());
  }
  return adj;
}

Matrix sgc_features(const NormalizedAdjacency& adj, const Matrix& x, std::size_t k) {
  Matrix h = x;
  for (std::size_t step = 0; step < k; ++step) h = kernels::spmm(adj.matrix, h);
  return h;
}

DatasetSplit make_split(std::size_t num_nodes, std::vector<NodeId> valid, std::vector<NodeId> test) {
  std::vector<char> tag(num_nodes, 0);
  auto mark = [&](const std::vector<NodeId>& ids, char t, const char* name) {
    for (NodeId u : ids) {
      if (u >= num_nodes)
        throw IngestError(IngestError::Kind::bad_split,
                          std::string("split '") + name + "' references node " + std::to_string(u) +
                              " outside the graph");
      if (tag[u] != 0)
        throw IngestError(IngestError::Kind::bad_split,
                          "node " + std::to_string(u) + " appears twice across validation/test splits");
      tag[u] = t;
    }
  };
  mark(valid, 1, "valid");
  mark(test, 2, "test");
  DatasetSplit s;
  s.valid = std::move(valid);
  s.test = std::move(test);
  std::sort(s.valid.begin(), s.valid.end());
  std::sort(s.test.begin(), s.test.end());
  for (NodeId u = 0; u < num_nodes; ++u)
    if (tag[u] == 0) s.train_pool.push_back(u);
  return s;
}

std::vector<std::uint32_t> connected_components(const Graph& g) {
  constexpr auto unset = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> comp(g.num_nodes(), unset);
  std::uint32_t next = 0;
  std::vector<NodeId> stack;
  for (NodeId s = 0; s < g.num_nodes(); ++s) {
    if (comp[s] != unset) continue;
    comp[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      NodeId u = stack.back();
      stack.pop_back();
      for (NodeId v : g.neighbors(u))
        if (comp[v] == unset) {
          comp[v] = next;
          stack.push_back(v);
        }
    }
    ++next;
  }
  return comp;
}

// ---------------------------------------------------------------------------
// Neutral on-disk format

namespace {

using Kind = IngestError::Kind;

fs::path require_file(const fs::path& dir, const char* name) {
  fs::path p = dir / name;
  if (!fs::is_regular_file(p))
    throw IngestError(Kind::missing_file, "missing dataset file: " + p.string());
  return p;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IngestError(Kind::malformed, p.filename().string() + ": " + e.what());
  }
}

// Parses "a<TAB>b" with non-negative integers a, b.
bool parse_pair(const std::string& line, long long& a, long long& b) {
  const char* p = line.data();
  const char* end = p + line.size();
  auto skip_ws = [&] {
    while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
  };
  skip_ws();
  auto r1 = std::from_chars(p, end, a);
  if (r1.ec != std::errc() || r1.ptr == p) return false;
  p = r1.ptr;
  if (p == end || (*p != '\t' && *p != ' ')) return false;
  skip_ws();
  auto r2 = std::from_chars(p, end, b);
  if (r2.ec != std::errc() || r2.ptr == p) return false;
  p = r2.ptr;
  skip_ws();
  return p == end;
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

std::vector<NodeId> id_list(const json& j, const char* key, std::size_t n) {
  if (!j.contains(key) || !j[key].is_array())
    throw IngestError(Kind::malformed, std::string("splits.json: missing array '") + key + "'");
  std::vector<NodeId> out;
  for (const auto& v : j[key]) {
    if (!v.is_number_integer()) throw IngestError(Kind::malformed, "splits.json: non-integer node id");
    const auto id = v.get<long long>();
    if (id < 0 || static_cast<std::size_t>(id) >= n)
      throw IngestError(Kind::node_out_of_range,
                        std::string("splits.json: node id ") + std::to_string(id) + " out of range in '" + key + "'");
    out.push_back(static_cast<NodeId>(id));
  }
  return out;
}

}  // namespace

Dataset ingest_dataset(const fs::path& dir) {
  const fs::path meta_path = require_file(dir, "meta.json");
  const fs::path graph_path = require_file(dir, "graph.tsv");
  const fs::path feat_path = require_file(dir, "features.f32");
  const fs::path label_path = require_file(dir, "labels.tsv");
  const fs::path split_path = require_file(dir, "splits.json");

  const json meta = read_json(meta_path);
  std::size_t n = 0, f = 0, c = 0;
  try {
    n = meta.at("num_nodes").get<std::size_t>();
    f = meta.at("num_features").get<std::size_t>();
    c = meta.at("num_classes").get<std::size_t>();
  } catch (const json::exception& e) {
    throw IngestError(Kind::malformed, std::string("meta.json: ") + e.what());
  }
  if (c == 0) throw IngestError(Kind::malformed, "meta.json: num_classes must be positive");

  std::vector<Edge> edges;
  {
    std::ifstream in(graph_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (blank(line)) continue;
      long long a, b;
      if (!parse_pair(line, a, b) || a < 0 || b < 0)
        throw IngestError(Kind::malformed, "graph.tsv:" + std::to_string(lineno) + ": expected 'src<TAB>dst'");
      if (static_cast<std::size_t>(a) >= n || static_cast<std::size_t>(b) >= n)
        throw IngestError(Kind::node_out_of_range,
                          "graph.tsv:" + std::to_string(lineno) + ": node id out of range [0, " +
                              std::to_string(n) + ")");
      if (a == b)
        throw IngestError(Kind::self_loop, "graph.tsv:" + std::to_string(lineno) + ": self-loop in raw edge list");
      edges.emplace_back(static_cast<NodeId>(a), static_cast<NodeId>(b));
    }
  }

  Matrix features(n, f);
  {
    const auto bytes = fs::file_size(feat_path);
    if (bytes != n * f * sizeof(float))
      throw IngestError(Kind::feature_size, "features.f32: expected " + std::to_string(n * f * sizeof(float)) +
                                                " bytes (num_nodes x num_features x 4), found " +
                                                std::to_string(bytes));
    std::ifstream in(feat_path, std::ios::binary);
    std::vector<float> buf(n * f);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes));
    if constexpr (std::endian::native == std::endian::big) {
      for (auto& v : buf) {
        std::uint32_t u;
        std::memcpy(&u, &v, 4);
        u = __builtin_bswap32(u);
        std::memcpy(&v, &u, 4);
      }
    }
    for (std::size_t k = 0; k < buf.size(); ++k) features.values()[k] = static_cast<double>(buf[k]);
  }

  std::vector<int> labels(n, -1);
  {
    std::ifstream in(label_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (blank(line)) continue;
      long long node, y;
      if (!parse_pair(line, node, y))
        throw IngestError(Kind::malformed, "labels.tsv:" + std::to_string(lineno) + ": expected 'node_id<TAB>label'");
      if (node < 0 || static_cast<std::size_t>(node) >= n)
        throw IngestError(Kind::node_out_of_range, "labels.tsv:" + std::to_string(lineno) + ": node id out of range");
      if (y < 0 || static_cast<std::size_t>(y) >= c)
        throw IngestError(Kind::label_out_of_range, "labels.tsv:" + std::to_string(lineno) + ": label " +
                                                        std::to_string(y) + " out of range [0, " +
                                                        std::to_string(c) + ")");
      labels[node] = static_cast<int>(y);
    }
    for (std::size_t u = 0; u < n; ++u)
      if (labels[u] < 0)
        throw IngestError(Kind::missing_label, "labels.tsv: node " + std::to_string(u) + " has no label");
  }

  const json splits = read_json(split_path);
  DatasetSplit split = make_split(n, id_list(splits, "valid", n), id_list(splits, "test", n));

  Dataset ds;
  ds.graph = Graph::from_edges(n, edges, std::move(features), std::move(labels), c);
  ds.split = std::move(split);
  ds.name = meta.value("name", dir.filename().string());
  if (meta.contains("num_edges") && meta["num_edges"].get<std::size_t>() != ds.graph.num_edges())
    throw IngestError(Kind::count_mismatch, "meta.json: num_edges " + meta["num_edges"].dump() +
                                                " does not match graph.tsv (" +
                                                std::to_string(ds.graph.num_edges()) + " unique edges)");
  return ds;
}

void write_dataset(const fs::path& dir, const Graph& g, const DatasetSplit& split,
                   const std::string& meta_extra) {
  fs::create_directories(dir);
  json meta = meta_extra.empty() ? json::object() : json::parse(meta_extra);
  meta["num_nodes"] = g.num_nodes();
  meta["num_features"] = g.num_features();
  meta["num_classes"] = g.num_classes();
  meta["num_edges"] = g.num_edges();
  std::ofstream(dir / "meta.json") << meta.dump(2) << '\n';

  {
    std::ofstream out(dir / "graph.tsv");
    for (auto [u, v] : g.edge_list()) out << u << '\t' << v << '\n';
  }
  {
    std::vector<float> buf(g.features().size());
    for (std::size_t k = 0; k < buf.size(); ++k) buf[k] = static_cast<float>(g.features().values()[k]);
    std::ofstream out(dir / "features.f32", std::ios::binary);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  {
    std::ofstream out(dir / "labels.tsv");
    for (NodeId u = 0; u < g.num_nodes(); ++u) out << u << '\t' << g.label(u) << '\n';
  }
  json s;
  s["valid"] = split.valid;
  s["test"] = split.test;
  std::ofstream(dir / "splits.json") << s.dump() << '\n';
}

}  // namespace srgnn
