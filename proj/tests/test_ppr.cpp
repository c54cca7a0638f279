#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "srgnn/ppr.hpp"
#include "srgnn/synthetic.hpp"

using namespace srgnn;

namespace {

// alpha * (I - (1 - alpha) Ã)^{-1} by a full LU on the whole graph.
Eigen::MatrixXd dense_ppr(const NormalizedAdjacency& adj, double alpha) {
  const auto n = static_cast<Eigen::Index>(adj.num_nodes());
  const Matrix a = adj.matrix.to_dense();
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) -= (1.0 - alpha) * a(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  return alpha * m.partialPivLu().inverse();
}

std::vector<double> dense(const PprVector& v, std::size_t n) {
  std::vector<double> out(n, 0.0);
  for (auto [u, m] : v.entries) out[u] = m;
  return out;
}

double l1(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

double weighted_sum(const PprVector& v, const NormalizedAdjacency& adj) {
  double s = 0.0;
  for (auto [u, m] : v.entries) s += m * std::sqrt(adj.degree[u] / adj.degree[v.seed]);
  return s;
}

}  // namespace

TEST_SUITE("ppr") {
  TEST_CASE("parameter validation") {
    CHECK_NOTHROW(PprParams{}.validate());
    CHECK_THROWS_AS((PprParams{0.0, 1e-3, 10}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((PprParams{1.0, 1e-3, 10}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((PprParams{0.1, 0.0, 10}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((PprParams{0.1, 1e-3, 0}).validate(), std::invalid_argument);
    const PprParams a = PprParams::appendix();
    CHECK(a.gamma == 20);
    CHECK(a.epsilon == 0.005);
  }

  TEST_CASE("exact ppr on hand-sized graphs") {
    const NormalizedAdjacency iso = normalize_adjacency(Graph::from_edges(1, {}, Matrix(1, 1), {0}, 1));
    const PprVector u = exact_ppr(iso, 0, 0.3);
    REQUIRE(u.entries.size() == 1);
    CHECK(u.entries[0].second == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(u.residual.empty());

    // I - 0.9 [[.5,.5],[.5,.5]] = [[.55,-.45],[-.45,.55]], inverse [[5.5,4.5],[4.5,5.5]].
    const std::vector<Edge> e{{0, 1}};
    const NormalizedAdjacency two = normalize_adjacency(Graph::from_edges(2, e, Matrix(2, 1), {0, 0}, 1));
    const PprVector v = exact_ppr(two, 0, 0.1);
    CHECK(v.mass(0) == doctest::Approx(0.55).epsilon(1e-12));
    CHECK(v.mass(1) == doctest::Approx(0.45).epsilon(1e-12));
  }

  TEST_CASE("exact ppr matches a dense inverse and conserves weighted mass") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      const Graph g = synthetic::random_graph(45, 0.05, 1, 2, seed);
      const NormalizedAdjacency adj = normalize_adjacency(g);
      const Eigen::MatrixXd oracle = dense_ppr(adj, 0.15);
      for (NodeId s = 0; s < 45; s += 4) {
        const PprVector v = exact_ppr(adj, s, 0.15);
        const auto d = dense(v, 45);
        for (std::size_t j = 0; j < 45; ++j) CHECK(std::abs(d[j] - oracle(s, static_cast<Eigen::Index>(j))) < 1e-12);
        for (auto [node, mass] : v.entries) CHECK(mass > 0.0);
        CHECK(weighted_sum(v, adj) == doctest::Approx(1.0).epsilon(1e-10));
      }
    }
  }

  TEST_CASE("on a regular component the plain sum is one") {
    const NormalizedAdjacency adj = normalize_adjacency(synthetic::two_cliques(6));
    const PprVector v = exact_ppr(adj, 2, 0.1);
    CHECK(v.total_mass() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(v.entries.size() == 6);
  }

  TEST_CASE("teleport dominance") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const NormalizedAdjacency adj = normalize_adjacency(synthetic::random_graph(30, 0.2, 1, 1, seed));
      for (NodeId s = 0; s < 30; s += 7) CHECK(exact_ppr(adj, s, 0.99).mass(s) > 0.98);
    }
  }

  TEST_CASE("component guard") {
    const NormalizedAdjacency adj = normalize_adjacency(synthetic::path_graph(10));
    CHECK_THROWS_AS(exact_ppr(adj, 0, 0.1, 5), std::length_error);
    const NormalizedAdjacency split = normalize_adjacency(synthetic::two_cliques(5));
    CHECK_NOTHROW(exact_ppr(split, 0, 0.1, 5));
  }

  TEST_CASE("push on an isolated node and with a coarse tolerance") {
    const NormalizedAdjacency iso = normalize_adjacency(Graph::from_edges(1, {}, Matrix(1, 1), {0}, 1));
    const PprVector v = push_ppr(iso, 0, {0.1, 1e-4, 10});
    CHECK(v.mass(0) >= 1.0 - 1e-4);
    for (auto [u, r] : v.residual) CHECK(r < 1e-4);

    const NormalizedAdjacency star = normalize_adjacency(synthetic::star_graph(5));
    const PprVector coarse = push_ppr(star, 0, {0.1, 0.5, 10});
    for (auto [u, m] : coarse.entries) CHECK(u == 0);
    for (auto [u, r] : coarse.residual) CHECK(r < 0.5 * star.degree[u]);
  }

  TEST_CASE("push on the star graph approaches the exact vector") {
    const NormalizedAdjacency star = normalize_adjacency(synthetic::star_graph(5));
    const auto p = dense(push_ppr(star, 0, {0.1, 1e-6, 10}), 6);
    const auto x = dense(exact_ppr(star, 0, 0.1), 6);
    CHECK(l1(p, x) <= 1e-4);
  }

  TEST_CASE("push invariants") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const Graph g = synthetic::random_graph(60, 0.06, 1, 2, seed);
      const NormalizedAdjacency adj = normalize_adjacency(g);
      const Eigen::MatrixXd oracle = dense_ppr(adj, 0.1);
      const NodeId s = static_cast<NodeId>(seed * 7 % 60);
      const PprParams params{0.1, 1e-4, 10};

      double worst = 0.0;
      bool nonnegative = true;
      const PushObserver observer = [&](std::span<const double> p, std::span<const double> r) {
        double mass = 0.0;
        for (std::size_t v = 0; v < p.size(); ++v) {
          mass += (p[v] + r[v]) * std::sqrt(adj.degree[v]);
          nonnegative = nonnegative && p[v] >= 0.0 && r[v] >= 0.0;
        }
        worst = std::max(worst, std::abs(mass - std::sqrt(adj.degree[s])));
      };
      const PprVector v = push_ppr(adj, s, params, observer);
      CHECK(worst < 1e-12);
      CHECK(nonnegative);
      for (auto [u, r] : v.residual) CHECK(r < params.epsilon * adj.degree[u]);

      // pi = p + sum_u r(u) pi_u
      std::vector<double> rebuilt = dense(v, 60);
      for (auto [u, r] : v.residual)
        for (std::size_t j = 0; j < 60; ++j) rebuilt[j] += r * oracle(u, static_cast<Eigen::Index>(j));
      for (std::size_t j = 0; j < 60; ++j) CHECK(std::abs(rebuilt[j] - oracle(s, static_cast<Eigen::Index>(j))) < 1e-12);

      CHECK(push_ppr(adj, s, params).entries == v.entries);
    }
  }

  TEST_CASE("push error shrinks with epsilon") {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const NormalizedAdjacency adj = normalize_adjacency(synthetic::random_graph(80, 0.05, 1, 2, seed));
      const auto x = dense(exact_ppr(adj, 3, 0.1), 80);
      double previous = INFINITY;
      for (double eps : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7}) {
        const double err = l1(dense(push_ppr(adj, 3, {0.1, eps, 10}), 80), x);
        CHECK(err <= previous);
        previous = err;
      }
    }
  }

  TEST_CASE("push error bound on random graphs") {
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
      const Graph g = synthetic::random_graph(120, 0.04, 1, 2, seed);
      const NormalizedAdjacency adj = normalize_adjacency(g);
      double degree_sum = 0.0;
      for (NodeId u = 0; u < g.num_nodes(); ++u) degree_sum += static_cast<double>(g.degree(u));
      const double eps = 1e-7;
      const NodeId s = static_cast<NodeId>(seed % 120);
      const double err = l1(dense(push_ppr(adj, s, {0.1, eps, 10}), 120), dense(exact_ppr(adj, s, 0.1), 120));
      CHECK(err <= eps * degree_sum);
    }
  }

  TEST_CASE("top-k ordering") {
    PprVector v;
    v.seed = 0;
    v.entries = {{0, 0.5}, {3, 0.2}, {7, 0.2}};
    const auto all = topk_truncate(v, 100);
    REQUIRE(all.size() == 3);
    CHECK(all[0].first == 0);
    CHECK(all[1].first == 3);
    CHECK(all[2].first == 7);
    CHECK(topk_truncate(v, 2).size() == 2);

    const Graph g = synthetic::star_graph(4);
    // Attach a tail so the hub has a non-neighbor: 1 - 5.
    std::vector<Edge> edges = g.edge_list();
    edges.push_back({1, 5});
    const Graph g2 = Graph::from_edges(6, edges, Matrix(6, 1), std::vector<int>(6, 0), 1);
    const auto top = topk_truncate(exact_ppr(normalize_adjacency(g2), 0, 0.1), 100);
    REQUIRE(top.size() == 6);
    CHECK(top.back().first == 5);
  }

  TEST_CASE("exact table rows equal single solves") {
    const NormalizedAdjacency adj = normalize_adjacency(synthetic::random_graph(50, 0.04, 1, 2, 9));
    const ExactPprTable table(adj, 0.2);
    CHECK(table.alpha() == 0.2);
    std::vector<double> row(50);
    for (NodeId s = 0; s < 50; s += 3) {
      table.row(s, row);
      const auto x = dense(exact_ppr(adj, s, 0.2), 50);
      for (std::size_t j = 0; j < 50; ++j) CHECK(std::abs(row[j] - x[j]) < 1e-12);
      CHECK(table.vector(s).entries.size() == exact_ppr(adj, s, 0.2).entries.size());
    }
  }
}
