#include <doctest.h>

#include <cmath>
#include <numeric>

#include "srgnn/discrepancy.hpp"
#include "srgnn/synthetic.hpp"
#include "srgnn/trainer.hpp"

using namespace srgnn;

namespace {

const Dataset& small_dataset() {
  static const Dataset d = [] {
    synthetic::CitationLikeParams p;
    p.num_nodes = 240;
    p.num_classes = 3;
    p.num_features = 60;
    p.communities_per_class = 2;
    p.valid_size = 40;
    p.test_size = 80;
    return synthetic::citation_like(p, 7);
  }();
  return d;
}

TrainSplit first_per_class(const Graph& g, std::span<const NodeId> pool, std::size_t per_class) {
  TrainSplit s;
  std::vector<std::size_t> taken(g.num_classes(), 0);
  for (NodeId u : pool)
    if (taken[static_cast<std::size_t>(g.label(u))]++ < per_class) s.nodes.push_back(u);
  return s;
}

TrainConfig quick_config() {
  TrainConfig c;
  c.epochs = 15;
  c.rng_seed = 11;
  return c;
}

}  // namespace

TEST_SUITE("trainer") {
  TEST_CASE("metrics on a constant predictor") {
    const std::vector<int> truth{0, 0, 1, 2};
    const std::vector<int> pred{0, 0, 0, 0};
    const Metrics m = classification_metrics(pred, truth, 3);
    CHECK(m.micro_f1 == doctest::Approx(0.5));
    CHECK(m.accuracy == doctest::Approx(0.5));
    // Class 0: precision 1/2, recall 1 -> 2/3; classes 1 and 2 score 0.
    CHECK(m.macro_f1 == doctest::Approx(2.0 / 9.0));
    CHECK_THROWS_AS(classification_metrics(pred, std::vector<int>{0, 1}, 3), std::invalid_argument);
  }

  TEST_CASE("metrics: perfect prediction and absent classes") {
    const std::vector<int> y{1, 1, 2};
    const Metrics m = classification_metrics(y, y, 4);
    CHECK(m.micro_f1 == 1.0);
    // Classes 0 and 3 never appear and count as 0.
    CHECK(m.macro_f1 == doctest::Approx(0.5));
  }

  TEST_CASE("config validation") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    c.dropout = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.lambda = -1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.epochs = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  }

  TEST_CASE("lambda zero removes the regularizer from the objective") {
    const Dataset& d = small_dataset();
    const TrainContext ctx(d);
    const Model m({ModelKind::gcn, {8}}, d.graph.num_features(), d.graph.num_classes());
    Rng rng(3);
    const ModelParams p = m.init(rng);
    const CsrMatrix in = m.prepare_inputs(ctx.adjacency(), ctx.features());
    const TrainSplit s = first_per_class(d.graph, d.split.train_pool, 5);
    std::vector<int> labels;
    for (NodeId u : s.nodes) labels.push_back(d.graph.label(u));
    const std::vector<NodeId> iid(d.split.train_pool.end() - 15, d.split.train_pool.end());

    ObjectiveInputs obj;
    obj.train_nodes = s.nodes;
    obj.train_labels = labels;
    obj.iid_nodes = iid;
    obj.weight_decay = 5e-4;
    const ObjectiveValue plain = evaluate_objective(m, p, ctx.adjacency(), in, obj, false, 0.0, nullptr, true);
    obj.use_cmd = true;
    obj.lambda = 0.0;
    const ObjectiveValue reg = evaluate_objective(m, p, ctx.adjacency(), in, obj, false, 0.0, nullptr, true);
    CHECK(reg.loss.reg_cmd > 0.0);
    CHECK(reg.loss.total == plain.loss.total);
    CHECK(reg.loss.total == doctest::Approx(reg.loss.ce + reg.loss.l2).epsilon(1e-15));
    const auto a = plain.grad.flat();
    const auto b = reg.grad.flat();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a[i] == *b[i]);
  }

  TEST_CASE("training is deterministic for a fixed seed") {
    const Dataset& d = small_dataset();
    const TrainContext ctx(d);
    const TrainSplit s = first_per_class(d.graph, d.split.train_pool, 5);
    TrainConfig c = quick_config();
    c.use_cmd_reg = true;
    const TrainResult a = train(ctx, s, {ModelKind::gcn, {8}}, c);
    const TrainResult b = train(ctx, s, {ModelKind::gcn, {8}}, c);
    CHECK(a.report.micro_f1 == b.report.micro_f1);
    CHECK(a.report.cmd_final == b.report.cmd_final);
    REQUIRE(a.report.loss_curve.size() == b.report.loss_curve.size());
    for (std::size_t e = 0; e < a.report.loss_curve.size(); ++e)
      CHECK(a.report.loss_curve[e].total == b.report.loss_curve[e].total);
    c.rng_seed = 12;
    const TrainResult other = train(ctx, s, {ModelKind::gcn, {8}}, c);
    CHECK(other.report.loss_curve.front().total != a.report.loss_curve.front().total);
  }

  TEST_CASE("first-epoch loss of an mlp with a zero head") {
    const Dataset& d = small_dataset();
    const TrainContext ctx(d);
    const TrainSplit s = first_per_class(d.graph, d.split.train_pool, 4);
    const ModelSpec spec{ModelKind::mlp, {6}};
    const Model m(spec, d.graph.num_features(), d.graph.num_classes());
    Rng rng(5);
    ModelParams init = m.init(rng);
    init.layers.back().weight.fill(0.0);
    TrainConfig c = quick_config();
    c.epochs = 1;
    c.dropout = 0.0;
    c.use_cmd_reg = true;
    c.lambda = 0.7;
    const TrainResult r = train(ctx, s, spec, c, {}, &init);
    REQUIRE(r.report.loss_curve.size() == 1);
    const LossBreakdown& l = r.report.loss_curve[0];
    CHECK(l.ce == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    double sq = 0.0;
    for (const auto& layer : init.layers)
      for (double w : layer.weight.values()) sq += w * w;
    CHECK(l.l2 == doctest::Approx(0.5 * c.weight_decay * sq).epsilon(1e-12));
    CHECK(l.reg_cmd > 0.0);
    CHECK(l.total == doctest::Approx(std::log(3.0) + 0.7 * l.reg_cmd + l.l2).epsilon(1e-12));
  }

  TEST_CASE("error paths") {
    const Dataset& d = small_dataset();
    const TrainContext ctx(d);
    CHECK_THROWS_AS(train(ctx, TrainSplit{}, {ModelKind::gcn, {8}}, quick_config()), TrainingError);
    const TrainSplit s = first_per_class(d.graph, d.split.train_pool, 3);
    TrainConfig c = quick_config();
    c.use_instance_reweight = true;
    CHECK_THROWS_AS(train(ctx, s, {ModelKind::gcn, {8}}, c, std::vector<double>{1.0}), std::invalid_argument);
    c = quick_config();
    c.use_cmd_reg = true;
    CHECK_THROWS_AS(train(ctx, s, {ModelKind::sgc, {}}, c), std::invalid_argument);
    c = quick_config();
    c.lr = 1e300;
    c.weight_decay = 0.0;
    CHECK_THROWS_AS(train(ctx, s, {ModelKind::gcn, {8}}, c), TrainingError);
  }

  TEST_CASE("reports: best epoch, nan cmd without encoder, json nulls") {
    const Dataset& d = small_dataset();
    const TrainContext ctx(d);
    const TrainSplit s = first_per_class(d.graph, d.split.train_pool, 5);
    const TrainResult g = train(ctx, s, {ModelKind::gcn, {8}}, quick_config());
    CHECK(g.report.best_epoch >= 1);
    CHECK(g.report.best_epoch <= 15);
    CHECK(std::isfinite(g.report.cmd_final));
    CHECK(g.report.mmd_final >= 0.0);
    const TrainResult lin = train(ctx, s, {ModelKind::sgc, {}}, quick_config());
    CHECK(std::isnan(lin.report.cmd_final));
    const auto j = to_json(lin.report);
    CHECK(j["cmd_final"].is_null());
    CHECK(j["micro_f1"].is_number());
  }

  TEST_CASE("instance weights are feasible") {
    const Dataset& d = small_dataset();
    const TrainContext ctx(d);
    const TrainSplit s = first_per_class(d.graph, d.split.train_pool, 5);
    TrainConfig c = quick_config();
    c.kmm_target_size = 100;
    for (ModelKind k : {ModelKind::sgc, ModelKind::appnp}) {
      const ModelSpec spec{k, k == ModelKind::sgc ? std::vector<std::size_t>{} : std::vector<std::size_t>{8}};
      const InstanceWeights w = compute_instance_weights(ctx, s, spec, c, 9);
      REQUIRE(w.beta.size() == s.nodes.size());
      std::vector<double> per_class(3, 0.0);
      for (std::size_t i = 0; i < s.nodes.size(); ++i) {
        CHECK(w.beta[i] >= c.kmm_bounds.lower - 1e-12);
        CHECK(w.beta[i] <= c.kmm_bounds.upper + 1e-12);
        per_class[static_cast<std::size_t>(d.graph.label(s.nodes[i]))] += w.beta[i];
      }
      for (double t : per_class) CHECK(t == doctest::Approx(5.0).epsilon(1e-9));
    }
  }

  TEST_CASE("comparison: method table and reproducibility across job counts") {
    const auto methods = comparison_methods();
    REQUIRE(methods.size() == 8);
    CHECK(methods[0].name == kReferenceMethod);
    CHECK(methods[0].split == SplitKind::iid);
    CHECK(methods.back().cmd_reg);
    CHECK(methods.back().reweight);

    const Dataset& d = small_dataset();
    const TrainContext ctx(d);
    ComparisonConfig c;
    c.labels_per_class = 5;
    c.repetitions = 2;
    c.master_seed = 21;
    c.train.epochs = 10;
    c.train.kmm_target_size = 60;
    c.methods = comparison_methods(8);
    const auto a = run_comparison(ctx, c);
    c.jobs = 3;
    const auto b = run_comparison(ctx, c);
    REQUIRE(a.size() == 8);
    for (std::size_t m = 0; m < a.size(); ++m) {
      CHECK(a[m].micro_mean == b[m].micro_mean);
      CHECK(a[m].micro_std == b[m].micro_std);
      CHECK(a[m].runs.size() == 2);
    }
    CHECK(a[0].delta_f1 == 0.0);
    CHECK(a[2].delta_f1 == doctest::Approx(a[0].micro_mean - a[2].micro_mean));
    // Biased splits come from the sampler, IID ones from a uniform draw.
    const TrainSplit bs = comparison_split(ctx, c, 0, SplitKind::biased);
    CHECK(bs.kind == SplitKind::biased);
    CHECK(bs.nodes.size() == 15);
  }

  TEST_CASE("parallel_for visits every index once and rethrows") {
    std::vector<int> hits(50, 0);
    parallel_for(50, 4, [&](std::size_t i) { hits[i]++; });
    CHECK(std::accumulate(hits.begin(), hits.end(), 0) == 50);
    CHECK_THROWS_AS(parallel_for(5, 2, [](std::size_t i) { if (i == 3) throw std::runtime_error("x"); }),
                    std::runtime_error);
  }
}
