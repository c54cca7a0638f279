#include "srgnn/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace srgnn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Sorted pool minus the excluded nodes.
std::vector<NodeId> pool_without(std::span<const NodeId> pool, std::span<const NodeId> exclude) {
  std::set<NodeId> ex(exclude.begin(), exclude.end());
  std::vector<NodeId> out;
  for (NodeId v : pool)
    if (!ex.count(v)) out.push_back(v);
  std::sort(out.begin(), out.end());
  return out;
}

// Uniform draw without replacement (partial Fisher-Yates), capped at the
// candidate count.
std::vector<NodeId> draw(std::vector<NodeId> candidates, std::size_t count, Rng& rng) {
  count = std::min(count, candidates.size());
  for (std::size_t i = 0; i < count; ++i) std::swap(candidates[i], candidates[i + uniform_index(rng, candidates.size() - i)]);
  candidates.resize(count);
  return candidates;
}

std::vector<int> labels_of(const Graph& g, std::span<const NodeId> nodes) {
  std::vector<int> out;
  out.reserve(nodes.size());
  for (NodeId v : nodes) out.push_back(g.label(v));
  return out;
}

void scatter_add(Matrix& dst, std::span<const NodeId> nodes, const Matrix& rows, double scale) {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    auto d = dst.row(nodes[i]);
    const auto s = rows.row(i);
    for (std::size_t j = 0; j < d.size(); ++j) d[j] += scale * s[j];
  }
}

std::vector<int> argmax_rows(const Matrix& logits, std::span<const NodeId> nodes) {
  std::vector<int> pred;
  pred.reserve(nodes.size());
  for (NodeId v : nodes) {
    const auto r = logits.row(v);
    pred.push_back(static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin()));
  }
  return pred;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(lambda >= 0.0)) throw std::invalid_argument("train.lambda must be non-negative");
  if (epochs < 1) throw std::invalid_argument("train.epochs must be at least 1");
  if (!(lr > 0.0)) throw std::invalid_argument("train.lr must be positive");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("train.weight_decay must be non-negative");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("train.dropout must lie in [0, 1)");
  if (cmd_moments < 1) throw std::invalid_argument("train.cmd_moments must be at least 1");
  if (!(kmm_bounds.lower >= 0.0 && kmm_bounds.lower <= 1.0 && kmm_bounds.upper >= 1.0 &&
        kmm_bounds.upper > kmm_bounds.lower))
    throw std::invalid_argument("kmm bounds must satisfy 0 <= B_l <= 1 <= B_u, B_l < B_u");
}

Metrics classification_metrics(std::span<const int> predicted, std::span<const int> truth, std::size_t num_classes) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("metrics: length mismatch");
  Metrics m;
  if (truth.empty()) return m;
  std::vector<std::size_t> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto p = static_cast<std::size_t>(predicted[i]);
    const auto t = static_cast<std::size_t>(truth[i]);
    if (p >= num_classes || t >= num_classes) throw std::invalid_argument("metrics: class out of range");
    if (p == t) {
      ++correct;
      ++tp[t];
    } else {
      ++fp[p];
      ++fn[t];
    }
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  // Single-label multiclass: pooled precision = pooled recall = accuracy.
  m.micro_f1 = m.accuracy;
  double macro = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    const double denom = static_cast<double>(2 * tp[c] + fp[c] + fn[c]);
    macro += denom > 0.0 ? 2.0 * static_cast<double>(tp[c]) / denom : 0.0;
  }
  m.macro_f1 = macro / static_cast<double>(num_classes);
  return m;
}

nlohmann::json to_json(const TrainReport& r) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isnan(v)) return nullptr;
    return v;
  };
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& l : r.loss_curve) curve.push_back({{"ce", l.ce}, {"reg_cmd", l.reg_cmd}, {"l2", l.l2}, {"total", l.total}});
  return {{"micro_f1", r.micro_f1}, {"macro_f1", r.macro_f1}, {"accuracy", r.accuracy},
          {"cmd_final", num(r.cmd_final)}, {"mmd_final", num(r.mmd_final)}, {"delta_f1", num(r.delta_f1)}, {"best_epoch", r.best_epoch},
          {"loss_curve", curve}};
}

TrainContext::TrainContext(const Dataset& data)
    : data_(&data), adj_(normalize_adjacency(data.graph)), features_(CsrMatrix::from_dense(data.graph.features())) {}

const ExactPprTable& TrainContext::ppr_table(double alpha) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = tables_.find(alpha);
  if (it == tables_.end()) it = tables_.emplace(alpha, std::make_unique<ExactPprTable>(adj_, alpha)).first;
  return *it->second;
}

ObjectiveValue evaluate_objective(const Model& model, const ModelParams& params, const NormalizedAdjacency& adj,
                                  const CsrMatrix& inputs, const ObjectiveInputs& in, bool train, double dropout,
                                  Rng* rng, bool include_l2_grad) {
  const ForwardState fs = model.forward(params, adj, inputs, train, dropout, rng);
  const CrossEntropy ce = weighted_softmax_ce(fs.logits.gather_rows(in.train_nodes), in.train_labels, in.beta);
  Matrix grad_logits(fs.logits.rows(), fs.logits.cols());
  scatter_add(grad_logits, in.train_nodes, ce.grad_logits, 1.0);

  ObjectiveValue out;
  out.loss.ce = ce.loss;
  Matrix grad_z;
  if (in.use_cmd) {
    if (!model.spec().has_encoder()) throw std::invalid_argument("CMD regularizer needs a model with hidden layers");
    const Matrix& z = fs.z();
    const CmdGradient cg =
        cmd_reg_value_grad(z.gather_rows(in.train_nodes), z.gather_rows(in.iid_nodes), in.cmd_moments);
    out.loss.reg_cmd = cg.value;
    grad_z = Matrix(z.rows(), z.cols());
    scatter_add(grad_z, in.train_nodes, cg.grad_p, in.lambda);
    scatter_add(grad_z, in.iid_nodes, cg.grad_q, in.lambda);
  }
  out.loss.l2 = l2_penalty(params, in.weight_decay);
  out.loss.total = out.loss.ce + in.lambda * out.loss.reg_cmd + out.loss.l2;
  out.grad = model.backward(params, adj, fs, grad_logits, grad_z, dropout, train);
  if (include_l2_grad) add_l2_gradient(params, in.weight_decay, out.grad);
  return out;
}

Metrics evaluate(const Model& model, const ModelParams& params, const NormalizedAdjacency& adj,
                 const CsrMatrix& inputs, const Graph& g, std::span<const NodeId> nodes) {
  const ForwardState fs = model.forward(params, adj, inputs, false, 0.0, nullptr);
  const auto pred = argmax_rows(fs.logits, nodes);
  return classification_metrics(pred, labels_of(g, nodes), g.num_classes());
}

TrainResult train(const TrainContext& ctx, const TrainSplit& split, const ModelSpec& spec, const TrainConfig& cfg,
                  std::span<const double> beta, const ModelParams* initial) {
  cfg.validate();
  const Graph& g = ctx.graph();
  const auto& pool = ctx.dataset().split.train_pool;
  if (split.nodes.empty()) throw TrainingError("empty training split");
  if (cfg.use_instance_reweight && beta.size() != split.nodes.size())
    throw std::invalid_argument("instance weights must cover exactly the split's nodes");
  if (cfg.use_cmd_reg && !spec.has_encoder()) throw std::invalid_argument("CMD regularizer needs hidden layers");

  const Model model(spec, g.num_features(), g.num_classes());
  const CsrMatrix inputs = model.prepare_inputs(ctx.adjacency(), ctx.features());
  const auto train_labels = labels_of(g, split.nodes);

  Rng init_rng(derive_seed(cfg.rng_seed, "init"));
  Rng drop_rng(derive_seed(cfg.rng_seed, "dropout"));
  Rng iid_rng(derive_seed(cfg.rng_seed, "iid-reg"));
  Rng probe_rng(derive_seed(cfg.rng_seed, "iid-probe"));

  const auto candidates = pool_without(pool, split.nodes);
  const std::size_t iid_size = cfg.iid_reg_sample_size ? cfg.iid_reg_sample_size : split.nodes.size();
  std::vector<NodeId> iid = draw(candidates, iid_size, iid_rng);
  const std::vector<NodeId> probe = draw(pool_without(candidates, iid), iid_size, probe_rng);
  if (cfg.use_cmd_reg && iid.empty()) throw TrainingError("no unlabeled pool nodes left for the IID regularizer sample");

  ModelParams params = initial ? *initial : model.init(init_rng);
  AdamState adam = AdamState::for_params(params, cfg.lr);

  ObjectiveInputs obj;
  obj.train_nodes = split.nodes;
  obj.train_labels = train_labels;
  if (cfg.use_instance_reweight) obj.beta = beta;
  obj.use_cmd = cfg.use_cmd_reg;
  obj.lambda = cfg.use_cmd_reg ? cfg.lambda : 0.0;
  obj.cmd_moments = cfg.cmd_moments;
  obj.weight_decay = cfg.weight_decay;

  const auto& valid = ctx.dataset().split.valid;
  TrainResult result;
  ModelParams best = params;
  double best_val = -1.0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.use_cmd_reg && cfg.resample_iid_each_epoch && epoch > 0) iid = draw(candidates, iid_size, iid_rng);
    obj.iid_nodes = iid;
    ObjectiveValue ov = evaluate_objective(model, params, ctx.adjacency(), inputs, obj, true, cfg.dropout, &drop_rng,
                                           false);
    if (!std::isfinite(ov.loss.total)) {
      std::ostringstream msg;
      msg << "non-finite loss at epoch " << epoch + 1 << " (ce " << ov.loss.ce << ", reg_cmd " << ov.loss.reg_cmd
          << ", l2 " << ov.loss.l2 << ")";
      throw TrainingError(msg.str());
    }
    result.report.loss_curve.push_back(ov.loss);
    adam_step(params, ov.grad, adam, cfg.weight_decay);
    if (valid.empty()) {
      best = params;
      result.report.best_epoch = epoch + 1;
      continue;
    }
    const double val = evaluate(model, params, ctx.adjacency(), inputs, g, valid).micro_f1;
    if (val > best_val) {
      best_val = val;
      best = params;
      result.report.best_epoch = epoch + 1;
    }
  }

  const auto& test = ctx.dataset().split.test;
  const Metrics m = evaluate(model, best, ctx.adjacency(), inputs, g, test);
  result.report.micro_f1 = m.micro_f1;
  result.report.macro_f1 = m.macro_f1;
  result.report.accuracy = m.accuracy;
  result.report.delta_f1 = kNaN;
  result.report.cmd_final = kNaN;
  result.report.mmd_final = kNaN;
  if (spec.has_encoder() && !probe.empty()) {
    const ForwardState fs = model.forward(best, ctx.adjacency(), inputs, false, 0.0, nullptr);
    const Matrix z_split = fs.z().gather_rows(split.nodes);
    const Matrix z_probe = fs.z().gather_rows(probe);
    result.report.cmd_final = cmd(z_split, z_probe, cfg.cmd_moments);
    result.report.mmd_final = mmd(z_split, z_probe, cfg.kernel);
  }
  result.params = std::move(best);
  return result;
}

InstanceWeights compute_instance_weights(const TrainContext& ctx, const TrainSplit& split, const ModelSpec& spec,
                                         const TrainConfig& cfg, std::uint64_t seed) {
  const Graph& g = ctx.graph();
  const auto candidates = pool_without(ctx.dataset().split.train_pool, split.nodes);
  Rng rng(seed);
  const auto target = draw(candidates, std::max(split.nodes.size(), cfg.kmm_target_size), rng);
  if (target.empty()) throw TrainingError("no unlabeled pool nodes left for instance weighting");
  const ExactPprTable* table = spec.kind == ModelKind::appnp ? &ctx.ppr_table(spec.appnp_alpha) : nullptr;
  KmmProblem p;
  p.train_rows = linearized_rows(spec, ctx.adjacency(), g.features(), table, split.nodes);
  p.target_rows = linearized_rows(spec, ctx.adjacency(), g.features(), table, target);
  p.labels = labels_of(g, split.nodes);
  p.bounds = cfg.kmm_bounds;
  p.kernel = cfg.kernel;
  return solve_weights(p);
}

std::vector<MethodSpec> base_methods(std::size_t hidden) {
  ModelSpec gcn{ModelKind::gcn, {hidden}};
  ModelSpec mlp{ModelKind::mlp, {hidden}};
  ModelSpec sgc{ModelKind::sgc, {}};
  ModelSpec appnp{ModelKind::appnp, {hidden}};
  return {
      {kReferenceMethod, gcn, SplitKind::iid, false, false},
      {"Feat.+MLP", mlp, SplitKind::biased, false, false},
      {"GCN", gcn, SplitKind::biased, false, false},
      {"SGC", sgc, SplitKind::biased, false, false},
      {"APPNP", appnp, SplitKind::biased, false, false},
  };
}

std::vector<MethodSpec> comparison_methods(std::size_t hidden) {
  auto methods = base_methods(hidden);
  ModelSpec appnp{ModelKind::appnp, {hidden}};
  methods.push_back({"SR-GNN w.o. IR", appnp, SplitKind::biased, true, false});
  methods.push_back({"SR-GNN w.o. Reg.", appnp, SplitKind::biased, false, true});
  methods.push_back({"SR-GNN", appnp, SplitKind::biased, true, true});
  return methods;
}

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < std::min(jobs, count); ++w) {
    workers.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < count;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

TrainSplit comparison_split(const TrainContext& ctx, const ComparisonConfig& cfg, std::size_t rep, SplitKind kind) {
  const Graph& g = ctx.graph();
  const auto& pool = ctx.dataset().split.train_pool;
  const std::uint64_t rep_seed = derive_seed(cfg.master_seed, rep);
  const ClassQuota quota = fixed_quota(g, pool, cfg.labels_per_class);
  if (kind == SplitKind::iid) return iid_sample(g, pool, quota, derive_seed(rep_seed, "iid-split"));
  BiasSpec spec = cfg.sampler;
  spec.per_class_quota = quota;
  spec.rng_seed = derive_seed(rep_seed, "biased-split");
  const ExactPprTable* table = g.num_nodes() <= spec.exact_max_nodes ? &ctx.ppr_table(spec.ppr.alpha) : nullptr;
  return ppr_biased_sample(g, ctx.adjacency(), pool, spec, table);
}

namespace {

std::string linearization_key(const ModelSpec& s) {
  std::ostringstream k;
  k << to_string(s.kind) << ':' << s.sgc_k << ':' << s.appnp_alpha;
  return k.str();
}

void summarize(MethodSummary& s) {
  const double n = static_cast<double>(s.runs.size());
  auto mean_std = [&](auto field, double& mean, double& sd) {
    mean = 0.0;
    for (const auto& r : s.runs) mean += field(r);
    mean /= n;
    double var = 0.0;
    for (const auto& r : s.runs) var += (field(r) - mean) * (field(r) - mean);
    sd = s.runs.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
  };
  double unused = 0.0;
  mean_std([](const TrainReport& r) { return r.micro_f1; }, s.micro_mean, s.micro_std);
  mean_std([](const TrainReport& r) { return r.macro_f1; }, s.macro_mean, s.macro_std);
  mean_std([](const TrainReport& r) { return r.cmd_final; }, s.cmd_mean, unused);
}

}  // namespace

std::vector<MethodSummary> run_comparison(const TrainContext& ctx, const ComparisonConfig& cfg) {
  cfg.train.validate();
  cfg.sampler.ppr.validate();
  if (cfg.repetitions < 1) throw std::invalid_argument("repetitions must be at least 1");
  if (cfg.methods.empty()) throw std::invalid_argument("no methods to compare");
  const std::size_t reps = cfg.repetitions;
  const std::size_t n_methods = cfg.methods.size();

  bool need_biased = false, need_iid = false;
  std::vector<std::string> keys;
  std::vector<std::size_t> key_of(n_methods, 0);
  for (std::size_t m = 0; m < n_methods; ++m) {
    const auto& method = cfg.methods[m];
    method.model.validate();
    (method.split == SplitKind::biased ? need_biased : need_iid) = true;
    if (!method.reweight) continue;
    const std::string key = linearization_key(method.model) + ':' + to_string(method.split);
    auto it = std::find(keys.begin(), keys.end(), key);
    key_of[m] = static_cast<std::size_t>(it - keys.begin());
    if (it == keys.end()) keys.push_back(key);
  }
  // Shared tables are built up front so worker threads only read them.
  if (need_biased && ctx.graph().num_nodes() <= cfg.sampler.exact_max_nodes) ctx.ppr_table(cfg.sampler.ppr.alpha);
  for (const auto& method : cfg.methods)
    if (method.reweight && method.model.kind == ModelKind::appnp) ctx.ppr_table(method.model.appnp_alpha);

  std::vector<TrainSplit> biased(reps), iid(reps);
  parallel_for(reps, cfg.jobs, [&](std::size_t r) {
    if (need_biased) biased[r] = comparison_split(ctx, cfg, r, SplitKind::biased);
    if (need_iid) iid[r] = comparison_split(ctx, cfg, r, SplitKind::iid);
  });

  std::vector<std::vector<double>> weights(reps * keys.size());
  std::vector<std::size_t> weight_owner(keys.size(), 0);
  for (std::size_t m = 0; m < n_methods; ++m)
    if (cfg.methods[m].reweight) weight_owner[key_of[m]] = m;
  parallel_for(reps * keys.size(), cfg.jobs, [&](std::size_t t) {
    const std::size_t r = t / keys.size();
    const auto& method = cfg.methods[weight_owner[t % keys.size()]];
    const TrainSplit& split = method.split == SplitKind::biased ? biased[r] : iid[r];
    weights[t] = compute_instance_weights(ctx, split, method.model, cfg.train,
                                          derive_seed(derive_seed(cfg.master_seed, r), "kmm-target"))
                     .beta;
  });

  std::vector<MethodSummary> out(n_methods);
  for (std::size_t m = 0; m < n_methods; ++m) {
    out[m].name = cfg.methods[m].name;
    out[m].runs.resize(reps);
  }
  parallel_for(reps * n_methods, cfg.jobs, [&](std::size_t t) {
    const std::size_t r = t / n_methods;
    const std::size_t m = t % n_methods;
    const auto& method = cfg.methods[m];
    TrainConfig tc = cfg.train;
    tc.rng_seed = derive_seed(derive_seed(cfg.master_seed, r), "train");
    tc.use_cmd_reg = method.cmd_reg;
    tc.use_instance_reweight = method.reweight;
    const TrainSplit& split = method.split == SplitKind::biased ? biased[r] : iid[r];
    std::span<const double> beta;
    if (method.reweight) beta = weights[r * keys.size() + key_of[m]];
    out[m].runs[r] = train(ctx, split, method.model, tc, beta).report;
  });

  const auto ref = std::find_if(out.begin(), out.end(), [](const MethodSummary& s) { return s.name == kReferenceMethod; });
  for (auto& s : out) {
    for (std::size_t r = 0; r < reps; ++r)
      s.runs[r].delta_f1 = ref == out.end() ? kNaN : ref->runs[r].micro_f1 - s.runs[r].micro_f1;
    summarize(s);
  }
  for (auto& s : out) s.delta_f1 = ref == out.end() ? kNaN : ref->micro_mean - s.micro_mean;
  return out;
}

}  // namespace srgnn
