#include "srgnn/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "srgnn/kernels.hpp"

namespace srgnn {

ModelParams ModelParams::zeros_like() const {
  ModelParams z;
  z.layers.reserve(layers.size());
  for (const auto& l : layers)
    z.layers.push_back({Matrix(l.weight.rows(), l.weight.cols()), std::vector<double>(l.bias.size(), 0.0)});
  return z;
}

std::size_t ModelParams::num_values() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

void ModelParams::add_scaled(const ModelParams& other, double scale) {
  if (other.layers.size() != layers.size()) throw std::invalid_argument("ModelParams: layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& w = layers[l].weight.values();
    const auto& ow = other.layers[l].weight.values();
    auto& b = layers[l].bias;
    const auto& ob = other.layers[l].bias;
    if (w.size() != ow.size() || b.size() != ob.size()) throw std::invalid_argument("ModelParams: shape mismatch");
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += scale * ow[i];
    for (std::size_t i = 0; i < b.size(); ++i) b[i] += scale * ob[i];
  }
}

std::vector<double*> ModelParams::flat() {
  std::vector<double*> out;
  out.reserve(num_values());
  for (auto& l : layers) {
    for (double& v : l.weight.values()) out.push_back(&v);
    for (double& v : l.bias) out.push_back(&v);
  }
  return out;
}

std::vector<const double*> ModelParams::flat() const {
  std::vector<const double*> out;
  out.reserve(num_values());
  for (const auto& l : layers) {
    for (const double& v : l.weight.values()) out.push_back(&v);
    for (const double& v : l.bias) out.push_back(&v);
  }
  return out;
}

DenseLayer glorot_layer(std::size_t in, std::size_t out, Rng& rng) {
  DenseLayer layer{Matrix(in, out), std::vector<double>(out, 0.0)};
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  for (double& v : layer.weight.values()) v = (2.0 * uniform_unit(rng) - 1.0) * limit;
  return layer;
}

Matrix dropout_inplace(Matrix& x, double p, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout: p must lie in [0, 1)");
  Matrix mask(x.rows(), x.cols());
  const double keep = 1.0 / (1.0 - p);
  auto& xv = x.values();
  auto& mv = mask.values();
  for (std::size_t i = 0; i < xv.size(); ++i) {
    mv[i] = uniform_unit(rng) < p ? 0.0 : keep;
    xv[i] *= mv[i];
  }
  return mask;
}

void dropout_inplace(CsrMatrix& x, double p, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout: p must lie in [0, 1)");
  const double keep = 1.0 / (1.0 - p);
  for (double& v : x.values) v *= uniform_unit(rng) < p ? 0.0 : keep;
}

namespace {

void add_bias(Matrix& m, const std::vector<double>& b) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += b[j];
  }
}

void activate(Matrix& m, Activation a) {
  switch (a) {
    case Activation::identity:
      break;
    case Activation::relu:
      for (double& v : m.values()) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::tanh:
      for (double& v : m.values()) v = std::tanh(v);
      break;
  }
}

// Multiplies the cotangent of an activated output by the activation's
// derivative, written in terms of the output.
void activation_backward(Matrix& g, const Matrix& out, Activation a) {
  auto& gv = g.values();
  const auto& ov = out.values();
  switch (a) {
    case Activation::identity:
      break;
    case Activation::relu:
      for (std::size_t i = 0; i < gv.size(); ++i)
        if (!(ov[i] > 0.0)) gv[i] = 0.0;
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < gv.size(); ++i) gv[i] *= 1.0 - ov[i] * ov[i];
      break;
  }
}

void accumulate(Matrix& dst, const Matrix& src) {
  auto& d = dst.values();
  const auto& s = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

}  // namespace

const Matrix& stack_forward(const ModelParams& params, std::span<const Activation> acts, const CsrMatrix& x,
                            const StackOptions& opts, Rng* rng, StackCache& cache) {
  const std::size_t n_layers = params.layers.size();
  if (n_layers == 0) throw std::invalid_argument("stack_forward: no layers");
  if (acts.size() != n_layers) throw std::invalid_argument("stack_forward: one activation per layer required");
  const bool drop = opts.train && opts.dropout > 0.0;
  if (drop && rng == nullptr) throw std::invalid_argument("stack_forward: dropout needs an rng");
  if (opts.propagation && (opts.propagation->rows != x.rows || opts.propagation->cols != x.rows))
    throw std::invalid_argument("stack_forward: propagation matrix does not match node count");

  cache.input = x;
  if (drop) dropout_inplace(cache.input, opts.dropout, *rng);
  cache.inputs.assign(n_layers, Matrix());
  cache.masks.assign(n_layers, Matrix());
  cache.outputs.assign(n_layers, Matrix());

  std::size_t width = x.cols;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const DenseLayer& layer = params.layers[l];
    if (layer.weight.rows() != width || layer.bias.size() != layer.weight.cols())
      throw std::invalid_argument("stack_forward: dimension mismatch at layer " + std::to_string(l));
    Matrix h = l == 0 ? kernels::spmm(cache.input, layer.weight) : kernels::gemm(cache.inputs[l], layer.weight);
    if (opts.propagation) h = kernels::spmm(*opts.propagation, h);
    add_bias(h, layer.bias);
    activate(h, acts[l]);
    cache.outputs[l] = std::move(h);
    if (l + 1 < n_layers) {
      cache.inputs[l + 1] = cache.outputs[l];
      if (drop) cache.masks[l + 1] = dropout_inplace(cache.inputs[l + 1], opts.dropout, *rng);
    }
    width = layer.weight.cols();
  }
  return cache.outputs.back();
}

void stack_backward(const ModelParams& params, std::span<const Activation> acts, const StackOptions& opts,
                    const StackCache& cache, std::vector<Matrix> output_grads, ModelParams& grads) {
  const std::size_t n_layers = params.layers.size();
  if (cache.outputs.size() != n_layers || output_grads.size() != n_layers || grads.layers.size() != n_layers)
    throw std::invalid_argument("stack_backward: stale cache or gradient shape");
  Matrix upstream;
  for (std::size_t l = n_layers; l-- > 0;) {
    const Matrix& out = cache.outputs[l];
    Matrix g = std::move(upstream);
    if (g.empty()) g = Matrix(out.rows(), out.cols());
    if (!output_grads[l].empty()) {
      if (!output_grads[l].same_shape(out)) throw std::invalid_argument("stack_backward: cotangent shape mismatch");
      accumulate(g, output_grads[l]);
    }
    activation_backward(g, out, acts[l]);

    DenseLayer& dl = grads.layers[l];
    for (std::size_t i = 0; i < g.rows(); ++i) {
      auto r = g.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) dl.bias[j] += r[j];
    }
    // Propagation matrices are symmetric, so the adjoint reuses them.
    if (opts.propagation) g = kernels::spmm(*opts.propagation, g);
    const Matrix dw = l == 0 ? kernels::spmm(cache.input.transpose(), g) : kernels::gemm_tn(cache.inputs[l], g);
    accumulate(dl.weight, dw);
    if (l > 0) {
      upstream = kernels::gemm_nt(g, params.layers[l].weight);
      if (!cache.masks[l].empty()) {
        auto& uv = upstream.values();
        const auto& mv = cache.masks[l].values();
        for (std::size_t i = 0; i < uv.size(); ++i) uv[i] *= mv[i];
      }
    }
  }
}

std::vector<Activation> encoder_activations(std::size_t encoder_layers, bool with_head) {
  std::vector<Activation> acts;
  for (std::size_t i = 0; i < encoder_layers; ++i)
    acts.push_back(i + 1 == encoder_layers ? Activation::tanh : Activation::relu);
  if (with_head) acts.push_back(Activation::identity);
  return acts;
}

std::vector<Matrix> mlp_forward(const ModelParams& params, const Matrix& x, double dropout_p, bool train_mode,
                                Rng& rng) {
  const auto acts = encoder_activations(params.layers.size(), false);
  StackCache cache;
  stack_forward(params, acts, CsrMatrix::from_dense(x), {nullptr, dropout_p, train_mode}, &rng, cache);
  return cache.outputs;
}

CrossEntropy weighted_softmax_ce(const Matrix& logits, std::span<const int> labels, std::span<const double> beta) {
  const std::size_t m = logits.rows();
  const std::size_t c = logits.cols();
  if (labels.size() != m) throw std::invalid_argument("cross entropy: one label per row required");
  if (!beta.empty() && beta.size() != m) throw std::invalid_argument("cross entropy: one weight per row required");
  CrossEntropy out;
  out.grad_logits = Matrix(m, c);
  if (m == 0) return out;
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto z = logits.row(i);
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= c) throw std::invalid_argument("cross entropy: label out of range");
    const double zmax = *std::max_element(z.begin(), z.end());
    double denom = 0.0;
    for (double v : z) denom += std::exp(v - zmax);
    const double log_denom = std::log(denom);
    const double w = beta.empty() ? 1.0 : beta[i];
    out.loss += w * (log_denom - (z[y] - zmax));
    auto g = out.grad_logits.row(i);
    for (std::size_t j = 0; j < c; ++j) g[j] = w * inv_m * std::exp(z[j] - zmax - log_denom);
    g[y] -= w * inv_m;
  }
  out.loss *= inv_m;
  return out;
}

namespace {

// d/dz of sum_k coef_k . c_k(z), where c_1 is the mean and c_k (k >= 2) the
// k-th central moment, for every entry of the sample.
Matrix moment_pullback(const Matrix& z, const std::vector<std::vector<double>>& moments,
                       const std::vector<std::vector<double>>& coef) {
  const std::size_t m = z.rows();
  const std::size_t d = z.cols();
  const double inv_m = 1.0 / static_cast<double>(m);
  Matrix g(m, d);
  std::vector<double> centered(d);
  for (std::size_t i = 0; i < m; ++i) {
    const auto zi = z.row(i);
    auto gi = g.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double c = zi[j] - moments[0][j];
      double acc = coef[0][j] * inv_m;
      double power = 1.0;  // c^(k-1)
      for (std::size_t k = 2; k <= coef.size(); ++k) {
        power *= c;
        const double lower = k == 2 ? 0.0 : moments[k - 2][j];
        acc += coef[k - 1][j] * static_cast<double>(k) * inv_m * (power - lower);
      }
      gi[j] = acc;
    }
  }
  return g;
}

}  // namespace

CmdGradient cmd_reg_value_grad(const Matrix& p, const Matrix& q, std::size_t max_moment, Support support) {
  const double span = support.upper - support.lower;
  if (!(span > 0.0)) throw std::invalid_argument("cmd: degenerate support");
  if (max_moment < 1) throw std::invalid_argument("cmd: need at least one moment");
  if (p.cols() != q.cols()) throw std::invalid_argument("cmd: dimension mismatch");
  if (p.rows() == 0 || q.rows() == 0) throw std::invalid_argument("cmd: empty sample");
  for (const Matrix* s : {&p, &q})
    for (double v : s->values())
      if (v < support.lower - 1e-9 || v > support.upper + 1e-9)
        throw std::invalid_argument("cmd: sample outside the support");

  const auto mp = central_moments(p, max_moment);
  const auto mq = central_moments(q, max_moment);
  const std::size_t d = p.cols();
  std::vector<std::vector<double>> coef(max_moment, std::vector<double>(d, 0.0));
  CmdGradient out;
  double scale = 1.0;
  for (std::size_t k = 0; k < max_moment; ++k) {
    scale /= span;
    double norm2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double u = mp[k][j] - mq[k][j];
      norm2 += u * u;
    }
    const double norm = std::sqrt(norm2);
    out.value += scale * norm;
    if (norm > 0.0)
      for (std::size_t j = 0; j < d; ++j) coef[k][j] = scale * (mp[k][j] - mq[k][j]) / norm;
  }
  out.grad_p = moment_pullback(p, mp, coef);
  for (auto& c : coef)
    for (double& v : c) v = -v;
  out.grad_q = moment_pullback(q, mq, coef);
  return out;
}

double l2_penalty(const ModelParams& params, double weight_decay) {
  double s = 0.0;
  for (const auto& l : params.layers)
    for (double v : l.weight.values()) s += v * v;
  return 0.5 * weight_decay * s;
}

void add_l2_gradient(const ModelParams& params, double weight_decay, ModelParams& grads) {
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& w = params.layers[l].weight.values();
    auto& g = grads.layers[l].weight.values();
    for (std::size_t i = 0; i < w.size(); ++i) g[i] += weight_decay * w[i];
  }
}

AdamState AdamState::for_params(const ModelParams& params, double lr) {
  AdamState s;
  s.first_moment = params.zeros_like();
  s.second_moment = params.zeros_like();
  s.lr = lr;
  return s;
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double weight_decay) {
  if (grads.layers.size() != params.layers.size() || state.first_moment.layers.size() != params.layers.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  auto update = [&](std::vector<double>& w, const std::vector<double>& g, std::vector<double>& m,
                    std::vector<double>& v, double wd) {
    if (g.size() != w.size() || m.size() != w.size()) throw std::invalid_argument("adam_step: shape mismatch");
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i] + wd * w[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gi;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gi * gi;
      w[i] -= state.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + state.eps_hat);
    }
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    update(params.layers[l].weight.values(), grads.layers[l].weight.values(),
           state.first_moment.layers[l].weight.values(), state.second_moment.layers[l].weight.values(),
           weight_decay);
    update(params.layers[l].bias, grads.layers[l].bias, state.first_moment.layers[l].bias,
           state.second_moment.layers[l].bias, 0.0);
  }
}

}  // namespace srgnn
