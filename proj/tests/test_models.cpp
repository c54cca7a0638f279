#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numeric>

#include "gradient_check.hpp"
#include "srgnn/kernels.hpp"
#include "srgnn/models.hpp"
#include "srgnn/synthetic.hpp"
#include "support.hpp"

using namespace srgnn;

namespace {

Graph edgeless(std::size_t n, std::size_t f, std::uint64_t seed) {
  return Graph::from_edges(n, {}, testing::random_matrix(n, f, seed), std::vector<int>(n, 0), 2);
}

Matrix dense_appnp(const NormalizedAdjacency& adj, const Matrix& h, double alpha, std::size_t k) {
  const auto n = static_cast<Eigen::Index>(adj.num_nodes());
  const Matrix a = adj.matrix.to_dense();
  Eigen::MatrixXd am(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) am(i, j) = a(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  Eigen::MatrixXd poly = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  for (std::size_t i = 0; i < k; ++i) {
    poly += alpha * std::pow(1.0 - alpha, static_cast<double>(i)) * power;
    power = power * am;
  }
  poly += std::pow(1.0 - alpha, static_cast<double>(k)) * power;
  Matrix out(h.rows(), h.cols());
  for (Eigen::Index i = 0; i < n; ++i)
    for (std::size_t c = 0; c < h.cols(); ++c) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) s += poly(i, j) * h(static_cast<std::size_t>(j), c);
      out(static_cast<std::size_t>(i), c) = s;
    }
  return out;
}

}  // namespace

TEST_SUITE("models") {
  TEST_CASE("kind names") {
    for (ModelKind k : {ModelKind::mlp, ModelKind::gcn, ModelKind::sgc, ModelKind::appnp})
      CHECK(model_kind_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(model_kind_from_string("gat"), std::invalid_argument);
  }

  TEST_CASE("spec validation and depth") {
    ModelSpec s;
    for (std::size_t d = 2; d <= 8; ++d) {
      s.set_depth(d, 16);
      CHECK(s.depth() == d);
    }
    ModelSpec bad{ModelKind::appnp, {8}};
    bad.appnp_alpha = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.appnp_alpha = 0.1;
    bad.appnp_steps = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }

  TEST_CASE("gcn on an edgeless graph equals the mlp") {
    const Graph g = edgeless(9, 4, 1);
    const NormalizedAdjacency adj = normalize_adjacency(g);
    const CsrMatrix x = CsrMatrix::from_dense(g.features());
    const Model gcn({ModelKind::gcn, {6, 5}}, 4, 2);
    const Model mlp({ModelKind::mlp, {6, 5}}, 4, 2);
    Rng rng(2);
    const ModelParams p = gcn.init(rng);
    const ForwardState a = gcn.forward(p, adj, x, false, 0.0, nullptr);
    const ForwardState b = mlp.forward(p, adj, x, false, 0.0, nullptr);
    CHECK(a.logits == b.logits);
    CHECK(a.z() == b.z());
  }

  TEST_CASE("symmetric nodes share every hidden row") {
    Matrix x(2, 3, 0.4);
    const std::vector<Edge> e{{0, 1}};
    const Graph g = Graph::from_edges(2, e, x, {0, 1}, 2);
    const NormalizedAdjacency adj = normalize_adjacency(g);
    const Model gcn({ModelKind::gcn, {4, 4}}, 3, 2);
    Rng rng(3);
    const ForwardState s = gcn.forward(gcn.init(rng), adj, CsrMatrix::from_dense(x), false, 0.0, nullptr);
    for (const Matrix& h : s.stack.outputs)
      for (std::size_t j = 0; j < h.cols(); ++j) CHECK(h(0, j) == h(1, j));
  }

  TEST_CASE("linear gcn equals the dense product") {
    const Graph g = synthetic::path_graph(4);
    const Matrix x = testing::random_matrix(4, 3, 4);
    const Graph gx = Graph::from_edges(4, g.edge_list(), x, {0, 0, 1, 1}, 2);
    const NormalizedAdjacency adj = normalize_adjacency(gx);
    const Model lin({ModelKind::gcn, {}}, 3, 2);
    Rng rng(5);
    ModelParams p = lin.init(rng);
    p.layers[0].bias = {0.1, -0.3};
    const ForwardState s = lin.forward(p, adj, CsrMatrix::from_dense(x), false, 0.0, nullptr);
    const Matrix a = adj.matrix.to_dense();
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t c = 0; c < 2; ++c) {
        double v = p.layers[0].bias[c];
        for (std::size_t j = 0; j < 4; ++j)
          for (std::size_t f = 0; f < 3; ++f) v += a(i, j) * x(j, f) * p.layers[0].weight(f, c);
        CHECK(std::abs(s.logits(i, c) - v) < 1e-14);
      }
  }

  TEST_CASE("appnp propagation") {
    const Matrix h = testing::random_matrix(3, 2, 6);
    const NormalizedAdjacency path = normalize_adjacency(synthetic::path_graph(3));
    CHECK(appnp_propagate(path, h, 1.0, 1) == h);
    const NormalizedAdjacency none = normalize_adjacency(edgeless(3, 1, 7));
    CHECK(max_abs_diff(appnp_propagate(none, h, 0.3, 7), h) < 1e-15);
    CHECK(max_abs_diff(appnp_propagate(path, h, 0.1, 10), dense_appnp(path, h, 0.1, 10)) < 1e-10);

    const NormalizedAdjacency rnd = normalize_adjacency(synthetic::random_graph(15, 0.2, 1, 1, 8));
    const Matrix h15 = testing::random_matrix(15, 3, 9);
    CHECK(max_abs_diff(appnp_propagate(rnd, h15, 0.2, 6), dense_appnp(rnd, h15, 0.2, 6)) < 1e-10);
  }

  TEST_CASE("appnp adjoint equals forward propagation of the cotangent") {
    const NormalizedAdjacency adj = normalize_adjacency(synthetic::random_graph(14, 0.25, 1, 1, 10));
    const Matrix g = testing::random_matrix(14, 3, 11);
    const double alpha = 0.15;
    const std::size_t steps = 8;
    // Reverse sweep through P_{t+1} = (1 - alpha) Ã P_t + alpha H.
    Matrix carry = g;
    Matrix dh(14, 3);
    for (std::size_t t = steps; t-- > 0;) {
      for (std::size_t i = 0; i < dh.size(); ++i) dh.values()[i] += alpha * carry.values()[i];
      carry = kernels::spmm(adj.matrix.transpose(), carry);
      for (double& v : carry.values()) v *= 1.0 - alpha;
    }
    for (std::size_t i = 0; i < dh.size(); ++i) dh.values()[i] += carry.values()[i];
    CHECK(max_abs_diff(dh, appnp_propagate(adj, g, alpha, steps)) < 1e-13);
  }

  TEST_CASE("zero cotangents give zero gradients") {
    const Graph g = synthetic::random_graph(10, 0.3, 4, 3, 12);
    const NormalizedAdjacency adj = normalize_adjacency(g);
    for (ModelKind k : {ModelKind::mlp, ModelKind::gcn, ModelKind::sgc, ModelKind::appnp}) {
      const Model m({k, {5}}, 4, 3);
      Rng rng(13);
      const ModelParams p = m.init(rng);
      const CsrMatrix in = m.prepare_inputs(adj, CsrMatrix::from_dense(g.features()));
      const ForwardState s = m.forward(p, adj, in, false, 0.0, nullptr);
      const ModelParams grads = m.backward(p, adj, s, Matrix(10, 3), Matrix(10, 5), 0.0, false);
      for (const double* v : grads.flat()) CHECK(*v == 0.0);
      CHECK_THROWS_AS(m.backward(p, adj, s, Matrix(9, 3), Matrix(), 0.0, false), std::invalid_argument);
    }
  }

  TEST_CASE("gradients match finite differences for every model and term") {
    for (ModelKind k : {ModelKind::mlp, ModelKind::gcn, ModelKind::sgc, ModelKind::appnp})
      for (testing::LossTerm t : {testing::LossTerm::ce, testing::LossTerm::cmd_reg, testing::LossTerm::l2}) {
        INFO(to_string(k), " ", testing::term_name(t));
        CHECK(testing::max_relative_gradient_error(k, t) < 1e-4);
      }
  }

  TEST_CASE("relabeling nodes permutes the logits") {
    const Graph g = synthetic::random_graph(16, 0.25, 5, 3, 14);
    std::vector<NodeId> perm(16);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(15);
    for (std::size_t i = 16; i > 1; --i) std::swap(perm[i - 1], perm[uniform_index(rng, i)]);
    // Node u of g becomes node perm[u] of h.
    std::vector<Edge> edges;
    for (auto [u, v] : g.edge_list()) edges.push_back({perm[u], perm[v]});
    Matrix xh(16, 5);
    std::vector<int> lh(16);
    for (NodeId u = 0; u < 16; ++u) {
      for (std::size_t f = 0; f < 5; ++f) xh(perm[u], f) = g.features()(u, f);
      lh[perm[u]] = g.label(u);
    }
    const Graph h = Graph::from_edges(16, edges, xh, lh, 3);
    const NormalizedAdjacency ag = normalize_adjacency(g), ah = normalize_adjacency(h);
    for (ModelKind k : {ModelKind::mlp, ModelKind::gcn, ModelKind::sgc, ModelKind::appnp}) {
      const Model m({k, {6}}, 5, 3);
      Rng init(16);
      const ModelParams p = m.init(init);
      const Matrix lg =
          m.forward(p, ag, m.prepare_inputs(ag, CsrMatrix::from_dense(g.features())), false, 0.0, nullptr).logits;
      const Matrix lhm = m.forward(p, ah, m.prepare_inputs(ah, CsrMatrix::from_dense(xh)), false, 0.0, nullptr).logits;
      for (NodeId u = 0; u < 16; ++u)
        for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(lg(u, c) - lhm(perm[u], c)) < 1e-12);
    }
  }

  TEST_CASE("linearized rows") {
    const Graph g = synthetic::random_graph(12, 0.3, 4, 2, 17);
    const NormalizedAdjacency adj = normalize_adjacency(g);
    const std::vector<NodeId> nodes{0, 5, 7};
    ModelSpec sgc{ModelKind::sgc, {}};
    sgc.sgc_k = 0;
    CHECK(linearized_rows(sgc, adj, g.features(), nullptr, nodes) == g.features().gather_rows(nodes));
    sgc.sgc_k = 2;
    CHECK(linearized_rows(sgc, adj, g.features(), nullptr, nodes) ==
          sgc_features(adj, g.features(), 2).gather_rows(nodes));

    const ModelSpec appnp{ModelKind::appnp, {4}};
    CHECK_THROWS_AS(linearized_rows(appnp, adj, g.features(), nullptr, nodes), std::invalid_argument);
    const ExactPprTable table(adj, appnp.appnp_alpha);
    const Matrix rows = linearized_rows(appnp, adj, g.features(), &table, nodes);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      double s = 0.0;
      for (std::size_t v = 0; v < 12; ++v) s += rows(i, v) * std::sqrt(adj.degree[v] / adj.degree[nodes[i]]);
      CHECK(s == doctest::Approx(1.0).epsilon(1e-8));
    }
    const ExactPprTable wrong(adj, 0.3);
    CHECK_THROWS_AS(linearized_rows(appnp, adj, g.features(), &wrong, nodes), std::invalid_argument);

    // Path 0-1-2-3-4: the reflection u -> 4 - u is an automorphism.
    const NormalizedAdjacency path = normalize_adjacency(synthetic::path_graph(5));
    const ExactPprTable pt(path, 0.1);
    const std::vector<NodeId> ends{0, 4, 1, 3};
    const Matrix pr = linearized_rows(appnp, path, Matrix(5, 1), &pt, ends);
    for (std::size_t v = 0; v < 5; ++v) {
      CHECK(std::abs(pr(0, v) - pr(1, 4 - v)) < 1e-14);
      CHECK(std::abs(pr(2, v) - pr(3, 4 - v)) < 1e-14);
    }
  }
}
