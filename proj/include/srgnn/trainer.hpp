#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "srgnn/discrepancy.hpp"
#include "srgnn/graph.hpp"
#include "srgnn/kmm.hpp"
#include "srgnn/models.hpp"
#include "srgnn/nn.hpp"
#include "srgnn/ppr.hpp"
#include "srgnn/sampler.hpp"

namespace srgnn {

struct TrainConfig {
  double lambda = 1.0;
  std::size_t epochs = 200;
  double lr = 0.01;
  double weight_decay = 5e-4;
  double dropout = 0.5;
  bool use_cmd_reg = false;
  bool use_instance_reweight = false;
  /// 0 means "same size as the training split".
  std::size_t iid_reg_sample_size = 0;
  bool resample_iid_each_epoch = false;
  std::size_t cmd_moments = 5;
  std::uint64_t rng_seed = 0;
  KmmBounds kmm_bounds;
  /// IID nodes matched by the instance weighting; at least the split size.
  std::size_t kmm_target_size = 500;
  KernelConfig kernel;

  void validate() const;
};

struct Metrics {
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
};

/// Classes that are never predicted and never present score F1 = 0.
Metrics classification_metrics(std::span<const int> predicted, std::span<const int> truth, std::size_t num_classes);

struct TrainReport {
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  /// CMD of the selected model's Z between the split and a fresh IID probe;
  /// NaN for models without an encoder.
  double cmd_final = 0.0;
  /// Squared MMD on the same pair of samples.
  double mmd_final = 0.0;
  /// reference Micro-F1 minus this run's; NaN until set by a comparison.
  double delta_f1 = 0.0;
  std::size_t best_epoch = 0;
  std::vector<LossBreakdown> loss_curve;
};

nlohmann::json to_json(const TrainReport& r);

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Graph-level state shared read-only by every run on one dataset.
class TrainContext {
 public:
  explicit TrainContext(const Dataset& data);

  const Dataset& dataset() const { return *data_; }
  const Graph& graph() const { return data_->graph; }
  const NormalizedAdjacency& adjacency() const { return adj_; }
  const CsrMatrix& features() const { return features_; }

  /// Exact PPR table for `alpha`, built on first use. Thread-safe.
  const ExactPprTable& ppr_table(double alpha) const;

 private:
  const Dataset* data_;
  NormalizedAdjacency adj_;
  CsrMatrix features_;
  mutable std::mutex mutex_;
  mutable std::map<double, std::unique_ptr<ExactPprTable>> tables_;
};

struct ObjectiveInputs {
  std::span<const NodeId> train_nodes;
  std::span<const int> train_labels;
  std::span<const double> beta;  ///< empty = all ones
  std::span<const NodeId> iid_nodes;
  bool use_cmd = false;
  double lambda = 0.0;
  std::size_t cmd_moments = 5;
  double weight_decay = 0.0;
};

struct ObjectiveValue {
  LossBreakdown loss;
  ModelParams grad;
};

/// (1/M) sum beta_i CE_i + lambda * CMD(Z_train, Z_iid) + (wd/2) ||W||^2 and its
/// gradient. The L2 part of the gradient is only included when
/// `include_l2_grad` (the optimizer adds it itself during training).
ObjectiveValue evaluate_objective(const Model& model, const ModelParams& params, const NormalizedAdjacency& adj,
                                  const CsrMatrix& inputs, const ObjectiveInputs& in, bool train, double dropout,
                                  Rng* rng, bool include_l2_grad);

Metrics evaluate(const Model& model, const ModelParams& params, const NormalizedAdjacency& adj,
                 const CsrMatrix& inputs, const Graph& g, std::span<const NodeId> nodes);

struct TrainResult {
  ModelParams params;
  TrainReport report;
};

/// Full-batch Adam on the split; keeps the parameters of the epoch with the
/// best validation Micro-F1 and reports test metrics for them. `beta` holds one
/// weight per split node when cfg.use_instance_reweight. `initial` overrides
/// the random initialization.
TrainResult train(const TrainContext& ctx, const TrainSplit& split, const ModelSpec& spec, const TrainConfig& cfg,
                  std::span<const double> beta = {}, const ModelParams* initial = nullptr);

/// Kernel mean matching weights for the split against an IID sample of the
/// pool, using the model's linearized rows.
InstanceWeights compute_instance_weights(const TrainContext& ctx, const TrainSplit& split, const ModelSpec& spec,
                                         const TrainConfig& cfg, std::uint64_t seed);

struct MethodSpec {
  std::string name;
  ModelSpec model;
  SplitKind split = SplitKind::biased;
  bool cmd_reg = false;
  bool reweight = false;
};

/// GCN (IID), Feat.+MLP, GCN, SGC, APPNP, SR-GNN w.o. IR, SR-GNN w.o. Reg., SR-GNN.
std::vector<MethodSpec> comparison_methods(std::size_t hidden = 32);
/// The base models only (no ablations).
std::vector<MethodSpec> base_methods(std::size_t hidden = 32);

inline constexpr const char* kReferenceMethod = "GCN (IID)";

struct ComparisonConfig {
  BiasSpec sampler;
  std::size_t labels_per_class = 20;
  std::size_t repetitions = 20;
  std::uint64_t master_seed = 0;
  TrainConfig train;
  std::vector<MethodSpec> methods = comparison_methods();
  std::size_t jobs = 1;
};

struct MethodSummary {
  std::string name;
  std::vector<TrainReport> runs;
  double micro_mean = 0.0;
  double micro_std = 0.0;
  double macro_mean = 0.0;
  double macro_std = 0.0;
  double cmd_mean = 0.0;
  /// NaN when the reference method is not part of the comparison.
  double delta_f1 = 0.0;
};

/// Repetition r uses seed derive_seed(master_seed, r) for its splits and for
/// the initialization and dropout streams of every method.
std::vector<MethodSummary> run_comparison(const TrainContext& ctx, const ComparisonConfig& cfg);

/// The splits of repetition r, as used by run_comparison.
TrainSplit comparison_split(const TrainContext& ctx, const ComparisonConfig& cfg, std::size_t rep, SplitKind kind);

/// Runs fn(i) for i in [0, count) on `jobs` threads.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace srgnn
