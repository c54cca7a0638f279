#include "srgnn/models.hpp"

#include <cmath>
#include <stdexcept>

#include "srgnn/kernels.hpp"

namespace srgnn {

const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::mlp: return "mlp";
    case ModelKind::gcn: return "gcn";
    case ModelKind::sgc: return "sgc";
    case ModelKind::appnp: return "appnp";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "mlp") return ModelKind::mlp;
  if (s == "gcn") return ModelKind::gcn;
  if (s == "sgc") return ModelKind::sgc;
  if (s == "appnp") return ModelKind::appnp;
  throw std::invalid_argument("unknown model kind '" + s + "'");
}

void ModelSpec::set_depth(std::size_t depth, std::size_t width) {
  if (depth < 1) throw std::invalid_argument("model depth must be at least 1");
  hidden_dims.assign(depth - 1, width);
}

void ModelSpec::validate() const {
  for (std::size_t w : hidden_dims)
    if (w == 0) throw std::invalid_argument("hidden widths must be positive");
  if (kind == ModelKind::appnp) {
    if (!(appnp_alpha > 0.0 && appnp_alpha < 1.0 + 1e-15)) throw std::invalid_argument("appnp alpha must lie in (0, 1]");
    if (appnp_steps < 1) throw std::invalid_argument("appnp needs at least one propagation step");
  }
}

Matrix appnp_propagate(const NormalizedAdjacency& adj, const Matrix& h, double alpha, std::size_t steps) {
  if (h.rows() != adj.num_nodes()) throw std::invalid_argument("appnp_propagate: row count mismatch");
  Matrix p = h;
  for (std::size_t t = 0; t < steps; ++t) {
    Matrix next = kernels::spmm(adj.matrix, p);
    auto& nv = next.values();
    const auto& hv = h.values();
    for (std::size_t i = 0; i < nv.size(); ++i) nv[i] = (1.0 - alpha) * nv[i] + alpha * hv[i];
    p = std::move(next);
  }
  return p;
}

Model::Model(ModelSpec spec, std::size_t input_dim, std::size_t num_classes)
    : spec_(std::move(spec)), input_dim_(input_dim), num_classes_(num_classes) {
  spec_.validate();
  if (input_dim_ == 0 || num_classes_ == 0) throw std::invalid_argument("model needs inputs and classes");
}

std::vector<Activation> Model::activations() const {
  return encoder_activations(spec_.hidden_dims.size(), true);
}

StackOptions Model::stack_options(const NormalizedAdjacency& adj, double dropout, bool train) const {
  StackOptions o;
  o.propagation = spec_.kind == ModelKind::gcn ? &adj.matrix : nullptr;
  o.dropout = dropout;
  o.train = train;
  return o;
}

ModelParams Model::init(Rng& rng) const {
  ModelParams p;
  std::size_t in = input_dim_;
  for (std::size_t w : spec_.hidden_dims) {
    p.layers.push_back(glorot_layer(in, w, rng));
    in = w;
  }
  p.layers.push_back(glorot_layer(in, num_classes_, rng));
  return p;
}

CsrMatrix Model::prepare_inputs(const NormalizedAdjacency& adj, const CsrMatrix& x) const {
  if (x.cols != input_dim_) throw std::invalid_argument("feature width does not match the model");
  if (spec_.kind != ModelKind::sgc || spec_.sgc_k == 0) return x;
  Matrix h = x.to_dense();
  for (std::size_t t = 0; t < spec_.sgc_k; ++t) h = kernels::spmm(adj.matrix, h);
  return CsrMatrix::from_dense(h);
}

ForwardState Model::forward(const ModelParams& params, const NormalizedAdjacency& adj, const CsrMatrix& inputs,
                            bool train, double dropout, Rng* rng) const {
  const auto acts = activations();
  ForwardState s;
  const Matrix& out = stack_forward(params, acts, inputs, stack_options(adj, dropout, train), rng, s.stack);
  s.logits = spec_.kind == ModelKind::appnp ? appnp_propagate(adj, out, spec_.appnp_alpha, spec_.appnp_steps) : out;
  s.z_layer = spec_.has_encoder() ? spec_.hidden_dims.size() - 1 : 0;
  return s;
}

ModelParams Model::backward(const ModelParams& params, const NormalizedAdjacency& adj, const ForwardState& state,
                            const Matrix& grad_logits, const Matrix& grad_z, double dropout, bool train) const {
  const auto acts = activations();
  const std::size_t n_layers = params.layers.size();
  if (state.stack.outputs.size() != n_layers || !grad_logits.same_shape(state.logits))
    throw std::invalid_argument("model backward: stale forward state");
  std::vector<Matrix> cot(n_layers);
  cot[n_layers - 1] =
      spec_.kind == ModelKind::appnp ? appnp_propagate(adj, grad_logits, spec_.appnp_alpha, spec_.appnp_steps)
                                     : grad_logits;
  if (!grad_z.empty()) {
    if (!spec_.has_encoder()) throw std::invalid_argument("model backward: linear model has no Z");
    cot[state.z_layer] = grad_z;
  }
  ModelParams grads = params.zeros_like();
  stack_backward(params, acts, stack_options(adj, dropout, train), state.stack, std::move(cot), grads);
  return grads;
}

Matrix linearized_rows(const ModelSpec& spec, const NormalizedAdjacency& adj, const Matrix& x,
                       const ExactPprTable* ppr, std::span<const NodeId> nodes) {
  switch (spec.kind) {
    case ModelKind::sgc:
      return sgc_features(adj, x, spec.sgc_k).gather_rows(nodes);
    case ModelKind::appnp: {
      if (ppr == nullptr) throw std::invalid_argument("linearized_rows: APPNP needs an exact PPR table");
      if (std::abs(ppr->alpha() - spec.appnp_alpha) > 1e-15)
        throw std::invalid_argument("linearized_rows: PPR table teleport differs from the model's");
      Matrix rows(nodes.size(), adj.num_nodes());
      for (std::size_t i = 0; i < nodes.size(); ++i) ppr->row(nodes[i], rows.row(i));
      return rows;
    }
    default:
      throw std::invalid_argument("linearized_rows: only SGC and APPNP are linearized");
  }
}

}  // namespace srgnn
