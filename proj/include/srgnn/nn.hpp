#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "srgnn/discrepancy.hpp"
#include "srgnn/matrix.hpp"
#include "srgnn/rng.hpp"

namespace srgnn {

struct DenseLayer {
  Matrix weight;              ///< in x out
  std::vector<double> bias;   ///< out
};

/// Parameter list of a layer stack. Gradients use the same container.
struct ModelParams {
  std::vector<DenseLayer> layers;

  ModelParams zeros_like() const;
  std::size_t num_values() const;
  /// this += scale * other
  void add_scaled(const ModelParams& other, double scale);
  /// Flat view in layer order (weight, then bias), for finite differences.
  std::vector<double*> flat();
  std::vector<const double*> flat() const;
};

enum class Activation { identity, relu, tanh };

/// Glorot-uniform weights, zero bias.
DenseLayer glorot_layer(std::size_t in, std::size_t out, Rng& rng);

/// Inverted dropout in place; returns the per-entry scale (0 or 1/(1-p)).
Matrix dropout_inplace(Matrix& x, double p, Rng& rng);
void dropout_inplace(CsrMatrix& x, double p, Rng& rng);

/// Forward state of a layer stack. outputs[l] is the activated output of
/// layer l; inputs[l] the (dropped-out) dense input for l >= 1.
struct StackCache {
  CsrMatrix input;
  std::vector<Matrix> inputs;
  std::vector<Matrix> masks;
  std::vector<Matrix> outputs;
};

struct StackOptions {
  /// When set, every layer computes P (H W) + b before its activation.
  const CsrMatrix* propagation = nullptr;
  double dropout = 0.0;
  bool train = false;
};

/// Runs the stack on sparse input features. `rng` is only used when
/// opts.train and opts.dropout > 0.
const Matrix& stack_forward(const ModelParams& params, std::span<const Activation> acts, const CsrMatrix& x,
                            const StackOptions& opts, Rng* rng, StackCache& cache);

/// Reverse pass. `output_grads[l]` is the cotangent of cache.outputs[l]
/// (empty matrix = zero). Gradients are accumulated into `grads`, which must
/// be shaped like `params`.
void stack_backward(const ModelParams& params, std::span<const Activation> acts, const StackOptions& opts,
                    const StackCache& cache, std::vector<Matrix> output_grads, ModelParams& grads);

/// Activations for an encoder of `layers` layers: ReLU, ..., tanh, then a
/// linear head when `with_head`.
std::vector<Activation> encoder_activations(std::size_t encoder_layers, bool with_head);

/// Dense-input MLP. Returns the activated output of every layer.
std::vector<Matrix> mlp_forward(const ModelParams& params, const Matrix& x, double dropout_p, bool train_mode,
                                Rng& rng);

struct CrossEntropy {
  double loss = 0.0;
  Matrix grad_logits;
};

/// (1/M) sum_i beta_i * -log softmax(logits_i)[y_i]. Empty beta means all ones.
CrossEntropy weighted_softmax_ce(const Matrix& logits, std::span<const int> labels,
                                 std::span<const double> beta = {});

struct CmdGradient {
  double value = 0.0;
  Matrix grad_p;
  Matrix grad_q;
};

/// CMD between two samples and its gradient with respect to every entry of
/// both samples. A norm term that vanishes contributes a zero subgradient.
CmdGradient cmd_reg_value_grad(const Matrix& p, const Matrix& q, std::size_t max_moment = 5, Support support = {});

/// (wd / 2) * sum of squared weights. Biases are not decayed.
double l2_penalty(const ModelParams& params, double weight_decay);
/// grads += wd * W for every weight matrix.
void add_l2_gradient(const ModelParams& params, double weight_decay, ModelParams& grads);

struct AdamState {
  ModelParams first_moment;
  ModelParams second_moment;
  std::size_t step_count = 0;
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;

  static AdamState for_params(const ModelParams& params, double lr = 0.01);
};

/// One Adam update. weight_decay * W is added to the weight gradients before
/// the moment updates.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double weight_decay);

struct LossBreakdown {
  double ce = 0.0;
  double reg_cmd = 0.0;
  double l2 = 0.0;
  double total = 0.0;
};

}  // namespace srgnn
