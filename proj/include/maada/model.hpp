#ifndef MAADA_MODEL_HPP
#define MAADA_MODEL_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "maada/matrix.hpp"
#include "maada/tape.hpp"

namespace maada {

struct DenseLayer {
  Matrix weight;  // fan_in x fan_out
  Matrix bias;    // 1 x fan_out
};

// Feed-forward classifier: rectifier on hidden layers, identity on the
// output layer, softmax applied by the prediction/loss helpers.
struct ModelParams {
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const { return layers.front().weight.rows(); }
  std::size_t output_dim() const { return layers.back().weight.cols(); }
  std::vector<std::size_t> layer_sizes() const;
};

// Glorot-uniform weights, zero biases, deterministic per seed.
ModelParams init_mlp(const std::vector<std::size_t>& layer_sizes, std::uint64_t seed);

Matrix predict_logits(const ModelParams& params, const Matrix& x);
Matrix predict_proba(const ModelParams& params, const Matrix& x);

// Mean softmax cross-entropy over the batch; labels must lie in [0, C).
double cross_entropy(const ModelParams& params, const Matrix& x, const std::vector<int>& labels);

// Gradient of the per-point cross-entropy with respect to the input point.
std::vector<double> input_gradient(const ModelParams& params, std::span<const double> x,
                                   int label);

// Gradient of the per-point prediction entropy; label-free surrogate used
// for unlabeled points.
std::vector<double> entropy_input_gradient(const ModelParams& params, std::span<const double> x);

// Batched variants; row i of the result is the gradient for row i of x.
Matrix input_gradients_ce(const ModelParams& params, const Matrix& x,
                          const std::vector<int>& labels);
Matrix input_gradients_entropy(const ModelParams& params, const Matrix& x);

// In-place gradient-descent step over every parameter tensor.
void apply_gradient_step(ModelParams& params, const std::map<std::string, Matrix>& gradients,
                         double learning_rate);

// --- tape builders -----------------------------------------------------
// Parameter tensors are tape inputs named w0, b0, w1, ... so one tape can
// evaluate several model applications against shared parameters.

struct MlpInputs {
  std::vector<Tape::Id> weights;
  std::vector<Tape::Id> biases;
};

MlpInputs declare_mlp_inputs(Tape& tape, const ModelParams& params);
std::vector<std::string> param_names(const ModelParams& params);
void bind_params(Bindings& bindings, const ModelParams& params);

Tape::Id append_mlp(Tape& tape, const MlpInputs& inputs, Tape::Id x);
// Row-wise logsumexp of the logits, computed max-shifted.
Tape::Id append_row_logsumexp(Tape& tape, Tape::Id logits);
Tape::Id append_softmax(Tape& tape, Tape::Id logits);
// Cross-entropy over the batch; `reduce_mean` picks mean vs sum reduction.
Tape::Id append_cross_entropy(Tape& tape, Tape::Id logits, const std::vector<int>& labels,
                              bool reduce_mean);
// Sum over the batch of per-row prediction entropies.
Tape::Id append_entropy_sum(Tape& tape, Tape::Id logits);

}  // namespace maada

#endif
