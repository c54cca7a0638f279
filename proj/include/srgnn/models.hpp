#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "srgnn/graph.hpp"
#include "srgnn/nn.hpp"
#include "srgnn/ppr.hpp"

namespace srgnn {

enum class ModelKind { mlp, gcn, sgc, appnp };

const char* to_string(ModelKind k);
/// Throws std::invalid_argument on an unknown name.
ModelKind model_kind_from_string(const std::string& s);

struct ModelSpec {
  ModelKind kind = ModelKind::gcn;
  /// Encoder widths. The model has hidden_dims.size() + 1 layers; the last
  /// hidden layer (tanh) is Z. Empty means a purely linear model without Z.
  std::vector<std::size_t> hidden_dims{32};
  std::size_t appnp_steps = 10;
  double appnp_alpha = 0.1;
  std::size_t sgc_k = 2;

  std::size_t depth() const { return hidden_dims.size() + 1; }
  /// depth - 1 hidden layers of `width`.
  void set_depth(std::size_t depth, std::size_t width = 32);
  bool has_encoder() const { return !hidden_dims.empty(); }
  void validate() const;
};

/// P^0 = H, P^{t+1} = (1 - alpha) Ã P^t + alpha H, `steps` times. The map is a
/// polynomial in the symmetric Ã and therefore self-adjoint.
Matrix appnp_propagate(const NormalizedAdjacency& adj, const Matrix& h, double alpha, std::size_t steps);

struct ForwardState {
  StackCache stack;
  Matrix logits;
  std::size_t z_layer = 0;  ///< index into stack.outputs; only valid with an encoder

  const Matrix& z() const { return stack.outputs.at(z_layer); }
};

class Model {
 public:
  Model(ModelSpec spec, std::size_t input_dim, std::size_t num_classes);

  const ModelSpec& spec() const { return spec_; }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t num_classes() const { return num_classes_; }

  ModelParams init(Rng& rng) const;

  /// Layer-stack input: X, or Ã^k X for SGC.
  CsrMatrix prepare_inputs(const NormalizedAdjacency& adj, const CsrMatrix& x) const;

  /// `inputs` must come from prepare_inputs. Dropout only in train mode.
  ForwardState forward(const ModelParams& params, const NormalizedAdjacency& adj, const CsrMatrix& inputs,
                       bool train, double dropout, Rng* rng) const;

  /// Gradients of a loss with cotangents grad_logits (n x C) and grad_z
  /// (n x hidden, may be empty) at the cached forward state.
  ModelParams backward(const ModelParams& params, const NormalizedAdjacency& adj, const ForwardState& state,
                       const Matrix& grad_logits, const Matrix& grad_z, double dropout, bool train) const;

 private:
  std::vector<Activation> activations() const;
  StackOptions stack_options(const NormalizedAdjacency& adj, double dropout, bool train) const;

  ModelSpec spec_;
  std::size_t input_dim_;
  std::size_t num_classes_;
};

/// Rows h_i that the instance weighting matches: rows of Ã^k X for SGC, exact
/// PPR rows (teleport spec.appnp_alpha) for APPNP. `ppr` is required for APPNP.
Matrix linearized_rows(const ModelSpec& spec, const NormalizedAdjacency& adj, const Matrix& x,
                       const ExactPprTable* ppr, std::span<const NodeId> nodes);

}  // namespace srgnn
