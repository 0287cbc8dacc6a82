#ifndef MAADA_TRAINER_HPP
#define MAADA_TRAINER_HPP

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "maada/dataset.hpp"
#include "maada/losses.hpp"
#include "maada/model.hpp"

namespace maada {

// Training hyperparameters. layer_sizes holds the hidden layer widths; the
// input and output widths come from the data.
struct TrainConfig {
  std::vector<std::size_t> layer_sizes{64, 64};
  double alpha = 0.1;  // on-manifold step
  double beta = 0.1;   // off-manifold step
  LossWeights weights{1.0, 1.0, 0.1};
  int k = 10;  // graph neighbours
  int m = 1;   // tangent dimension
  int chart_refresh_every = 1;
  double learning_rate = 0.05;
  int epochs = 200;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double norm_floor = 1e-12;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  LossBreakdown losses;
  double source_accuracy = 0.0;
  std::optional<double> target_accuracy;  // present when the target is fully labeled
  double wall_clock_ms = 0.0;
};

struct MetricsLog {
  std::vector<EpochRecord> records;
};

struct TrainResult {
  ModelParams params;
  MetricsLog log;
};

// Geometry-regularized training loop: per iteration it samples a batch from
// each domain, decomposes per-point loss gradients against the current
// tangent charts, builds the perturbed batches, and takes one descent step
// on the weighted objective. Deterministic per (config, seed). Target labels
// are never trained on; when present they only feed the per-epoch accuracy.
TrainResult train(const TrainConfig& config, const Dataset& source, const Dataset& target);

// Plain empirical risk minimization on one labeled dataset with the same
// batching, initialization, and descent rule. Reference baseline.
TrainResult train_erm(const TrainConfig& config, const Dataset& data);

// (accuracy, mean cross-entropy); argmax ties resolve to the lowest class.
std::pair<double, double> evaluate(const ModelParams& params, const Dataset& ds);

}  // namespace maada

#endif
