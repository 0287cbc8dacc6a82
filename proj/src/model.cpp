#include "maada/model.hpp"

#include <cmath>

#include "maada/rng.hpp"

namespace maada {

std::vector<std::size_t> ModelParams::layer_sizes() const {
  std::vector<std::size_t> sizes;
  sizes.push_back(layers.front().weight.rows());
  for (const DenseLayer& l : layers) sizes.push_back(l.weight.cols());
  return sizes;
}

ModelParams init_mlp(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2) {
    throw ConfigError("init_mlp: need at least an input and an output size");
  }
  for (std::size_t s : layer_sizes) {
    if (s == 0) throw ConfigError("init_mlp: layer sizes must be positive");
  }
  Rng rng(seed);
  ModelParams params;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const std::size_t fan_in = layer_sizes[l];
    const std::size_t fan_out = layer_sizes[l + 1];
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    DenseLayer layer{Matrix(fan_in, fan_out), Matrix(1, fan_out)};
    for (double& w : layer.weight.data()) w = rng.uniform(-s, s);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

MlpInputs declare_mlp_inputs(Tape& tape, const ModelParams& params) {
  MlpInputs ids;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const DenseLayer& layer = params.layers[l];
    ids.weights.push_back(
        tape.input("w" + std::to_string(l), layer.weight.rows(), layer.weight.cols()));
    ids.biases.push_back(tape.input("b" + std::to_string(l), 1, layer.bias.cols()));
  }
  return ids;
}

std::vector<std::string> param_names(const ModelParams& params) {
  std::vector<std::string> names;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    names.push_back("w" + std::to_string(l));
    names.push_back("b" + std::to_string(l));
  }
  return names;
}

void bind_params(Bindings& bindings, const ModelParams& params) {
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    bindings["w" + std::to_string(l)] = params.layers[l].weight;
    bindings["b" + std::to_string(l)] = params.layers[l].bias;
  }
}

Tape::Id append_mlp(Tape& tape, const MlpInputs& inputs, Tape::Id x) {
  Tape::Id h = x;
  const std::size_t batch = tape.rows(x);
  for (std::size_t l = 0; l < inputs.weights.size(); ++l) {
    Tape::Id z =
        tape.add(tape.matmul(h, inputs.weights[l]), tape.broadcast_row(inputs.biases[l], batch));
    h = (l + 1 < inputs.weights.size()) ? tape.relu(z) : z;
  }
  return h;
}

Tape::Id append_row_logsumexp(Tape& tape, Tape::Id logits) {
  const std::size_t c = tape.cols(logits);
  Tape::Id m = tape.row_max(logits);
  Tape::Id shifted = tape.sub(logits, tape.broadcast_col(m, c));
  Tape::Id s = tape.row_sum(tape.exp(shifted));
  return tape.add(m, tape.log(s));
}

Tape::Id append_softmax(Tape& tape, Tape::Id logits) {
  const std::size_t c = tape.cols(logits);
  Tape::Id lse = append_row_logsumexp(tape, logits);
  return tape.exp(tape.sub(logits, tape.broadcast_col(lse, c)));
}

Tape::Id append_cross_entropy(Tape& tape, Tape::Id logits, const std::vector<int>& labels,
                              bool reduce_mean) {
  if (labels.size() != tape.rows(logits)) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(tape.rows(logits)) + " rows");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= tape.cols(logits)) {
      throw DataError("cross_entropy: label " + std::to_string(y) + " out of range [0, " +
                      std::to_string(tape.cols(logits)) + ")");
    }
  }
  Tape::Id lse = append_row_logsumexp(tape, logits);
  Tape::Id picked = tape.pick(logits, labels);
  Tape::Id per_row = tape.sub(lse, picked);  // -log p(true class)
  return reduce_mean ? tape.mean(per_row) : tape.sum(per_row);
}

Tape::Id append_entropy_sum(Tape& tape, Tape::Id logits) {
  // H(p) = logsumexp(z) - sum_j p_j z_j per row, which avoids log(0).
  Tape::Id lse = append_row_logsumexp(tape, logits);
  Tape::Id p = append_softmax(tape, logits);
  return tape.sub(tape.sum(lse), tape.sum(tape.mul(p, logits)));
}

namespace {

void require_input_dim(const ModelParams& params, const Matrix& x) {
  if (x.cols() != params.input_dim()) {
    throw DimensionError("model: input has " + std::to_string(x.cols()) + " columns, expected " +
                         std::to_string(params.input_dim()));
  }
}

Matrix single_row(std::span<const double> x) {
  return Matrix(1, x.size(), std::vector<double>(x.begin(), x.end()));
}

}  // namespace

Matrix predict_logits(const ModelParams& params, const Matrix& x) {
  require_input_dim(params, x);
  Tape tape;
  MlpInputs inputs = declare_mlp_inputs(tape, params);
  Tape::Id logits = append_mlp(tape, inputs, tape.constant(x));
  Bindings bindings;
  bind_params(bindings, params);
  return forward_eval(tape, logits, bindings);
}

Matrix predict_proba(const ModelParams& params, const Matrix& x) {
  require_input_dim(params, x);
  Tape tape;
  MlpInputs inputs = declare_mlp_inputs(tape, params);
  Tape::Id proba = append_softmax(tape, append_mlp(tape, inputs, tape.constant(x)));
  Bindings bindings;
  bind_params(bindings, params);
  return forward_eval(tape, proba, bindings);
}

double cross_entropy(const ModelParams& params, const Matrix& x, const std::vector<int>& labels) {
  require_input_dim(params, x);
  if (x.rows() == 0) throw DataError("cross_entropy: empty batch");
  Tape tape;
  MlpInputs inputs = declare_mlp_inputs(tape, params);
  Tape::Id loss =
      append_cross_entropy(tape, append_mlp(tape, inputs, tape.constant(x)), labels, true);
  Bindings bindings;
  bind_params(bindings, params);
  return forward_eval(tape, loss, bindings)(0, 0);
}

Matrix input_gradients_ce(const ModelParams& params, const Matrix& x,
                          const std::vector<int>& labels) {
  require_input_dim(params, x);
  if (x.rows() == 0) throw DataError("input_gradients_ce: empty batch");
  Tape tape;
  Tape::Id xin = tape.input("x", x.rows(), x.cols());
  MlpInputs inputs = declare_mlp_inputs(tape, params);
  // Sum reduction: rows are independent, so row i of the gradient is the
  // gradient of that point's own loss.
  Tape::Id loss = append_cross_entropy(tape, append_mlp(tape, inputs, xin), labels, false);
  Bindings bindings;
  bind_params(bindings, params);
  bindings["x"] = x;
  return backward_grad(tape, loss, bindings, {"x"}).at("x");
}

Matrix input_gradients_entropy(const ModelParams& params, const Matrix& x) {
  require_input_dim(params, x);
  if (x.rows() == 0) throw DataError("input_gradients_entropy: empty batch");
  Tape tape;
  Tape::Id xin = tape.input("x", x.rows(), x.cols());
  MlpInputs inputs = declare_mlp_inputs(tape, params);
  Tape::Id loss = append_entropy_sum(tape, append_mlp(tape, inputs, xin));
  Bindings bindings;
  bind_params(bindings, params);
  bindings["x"] = x;
  return backward_grad(tape, loss, bindings, {"x"}).at("x");
}

std::vector<double> input_gradient(const ModelParams& params, std::span<const double> x,
                                   int label) {
  Matrix g = input_gradients_ce(params, single_row(x), {label});
  return std::vector<double>(g.data().begin(), g.data().end());
}

std::vector<double> entropy_input_gradient(const ModelParams& params,
                                           std::span<const double> x) {
  Matrix g = input_gradients_entropy(params, single_row(x));
  return std::vector<double>(g.data().begin(), g.data().end());
}

void apply_gradient_step(ModelParams& params, const std::map<std::string, Matrix>& gradients,
                         double learning_rate) {
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const Matrix& gw = gradients.at("w" + std::to_string(l));
    const Matrix& gb = gradients.at("b" + std::to_string(l));
    Matrix& w = params.layers[l].weight;
    Matrix& b = params.layers[l].bias;
    for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] -= learning_rate * gw.data()[i];
    for (std::size_t i = 0; i < b.size(); ++i) b.data()[i] -= learning_rate * gb.data()[i];
  }
}

}  // namespace maada
