#include "maada/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "maada/manifold.hpp"
#include "maada/perturb.hpp"
#include "maada/rng.hpp"

namespace maada {

namespace {

// Seed-stream tags; keeping the streams separate means optional consumers
// (target batching, say) never shift the draws of the others.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kSourceBatchStream = 1;
constexpr std::uint64_t kTargetBatchStream = 2;

std::vector<std::size_t> full_architecture(const TrainConfig& config, std::size_t input_dim,
                                           std::size_t classes) {
  std::vector<std::size_t> sizes{input_dim};
  sizes.insert(sizes.end(), config.layer_sizes.begin(), config.layer_sizes.end());
  sizes.push_back(classes);
  return sizes;
}

Matrix gather_rows(const Matrix& x, const std::vector<std::size_t>& idx) {
  Matrix out(idx.size(), x.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    auto row = x.row(idx[r]);
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = row[c];
  }
  return out;
}

// Draws from a shuffled index sequence, reshuffling on exhaustion.
class BatchCycle {
 public:
  BatchCycle(std::size_t n, Rng& rng) : rng_(rng), perm_(n) {
    std::iota(perm_.begin(), perm_.end(), 0);
    rng_.shuffle(perm_);
  }

  std::vector<std::size_t> next(std::size_t count) {
    std::vector<std::size_t> out;
    out.reserve(count);
    while (out.size() < count) {
      if (pos_ == perm_.size()) {
        rng_.shuffle(perm_);
        pos_ = 0;
      }
      out.push_back(perm_[pos_++]);
    }
    return out;
  }

 private:
  Rng& rng_;
  std::vector<std::size_t> perm_;
  std::size_t pos_ = 0;
};

}  // namespace

void TrainConfig::validate() const {
  if (layer_sizes.empty()) throw ConfigError("config: layer_sizes must name a hidden layer");
  for (std::size_t s : layer_sizes) {
    if (s == 0) throw ConfigError("config: layer_sizes entries must be positive");
  }
  if (alpha < 0.0 || beta < 0.0) throw ConfigError("config: alpha and beta must be nonnegative");
  if (!(weights.lambda_adv >= 0.0) || !(weights.lambda_cons >= 0.0) ||
      !(weights.lambda_align >= 0.0)) {
    throw ConfigError("config: loss weights must be nonnegative");
  }
  if (m < 1) throw ConfigError("config: m must be at least 1");
  if (k < m) throw ConfigError("config: k must be at least m");
  if (chart_refresh_every < 1) throw ConfigError("config: chart_refresh_every must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("config: learning_rate must be positive");
  if (epochs < 1) throw ConfigError("config: epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("config: batch_size must be at least 1");
  if (norm_floor < 0.0) throw ConfigError("config: norm_floor must be nonnegative");
}

std::pair<double, double> evaluate(const ModelParams& params, const Dataset& ds) {
  if (ds.size() == 0) throw DataError("evaluate: empty dataset");
  if (!ds.fully_labeled()) throw DataError("evaluate: dataset has unlabeled points");

  const Matrix proba = predict_proba(params, ds.x);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::size_t arg = 0;
    for (std::size_t c = 1; c < proba.cols(); ++c) {
      if (proba(i, c) > proba(i, arg)) arg = c;  // ties keep the lowest index
    }
    if (static_cast<int>(arg) == ds.labels[i]) ++correct;
  }
  const double accuracy = static_cast<double>(correct) / static_cast<double>(ds.size());
  return {accuracy, cross_entropy(params, ds.x, ds.labels)};
}

TrainResult train(const TrainConfig& config, const Dataset& source, const Dataset& target) {
  config.validate();
  source.validate();
  target.validate();
  if (!source.fully_labeled()) throw DataError("train: source must be fully labeled");
  if (target.size() > 0 && target.dim() != source.dim()) {
    throw ConfigError("train: source and target dimensions differ");
  }
  if (config.weights.lambda_align > 0.0 && target.size() == 0) {
    throw ConfigError("train: lambda_align > 0 requires a nonempty target");
  }

  const bool need_perturb_src = config.weights.lambda_adv > 0.0 ||
                                config.weights.lambda_cons > 0.0;
  const bool need_target_batch =
      (config.weights.lambda_cons > 0.0 || config.weights.lambda_align > 0.0) &&
      target.size() > 0;
  const bool need_target_charts = config.weights.lambda_cons > 0.0 && target.size() > 0;

  const std::size_t classes = static_cast<std::size_t>(source.num_classes());
  ModelParams params =
      init_mlp(full_architecture(config, source.dim(), classes), mix_seed(config.seed, kInitStream));

  Rng rng_src(mix_seed(config.seed, kSourceBatchStream));
  Rng rng_tgt(mix_seed(config.seed, kTargetBatchStream));
  BatchCycle target_cycle(std::max<std::size_t>(target.size(), 1), rng_tgt);

  const bool log_target_accuracy = target.size() > 0 && target.fully_labeled();

  std::vector<TangentChart> src_charts, tgt_charts;

  TrainResult result;
  std::vector<std::size_t> src_order(source.size());
  std::iota(src_order.begin(), src_order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();

    if ((need_perturb_src || need_target_charts) && epoch % config.chart_refresh_every == 0) {
      if (need_perturb_src) src_charts = all_charts(source.x, config.k, config.m);
      if (need_target_charts) tgt_charts = all_charts(target.x, config.k, config.m);
    }

    rng_src.shuffle(src_order);

    double sum_src = 0.0, sum_adv = 0.0, sum_cons = 0.0, sum_align = 0.0, sum_total = 0.0;
    std::size_t iterations = 0;

    // One descent step on one pair of minibatches: gradients, decomposition,
    // perturbed batches, weighted objective, parameter update.
    auto run_iteration = [&](const std::vector<std::size_t>& batch_idx) {
      const std::size_t count = batch_idx.size();
      ObjectiveSpec spec;
      spec.weights = config.weights;
      spec.x_src = gather_rows(source.x, batch_idx);
      spec.y_src.reserve(count);
      for (std::size_t idx : batch_idx) spec.y_src.push_back(source.labels[idx]);

      Matrix x_on_src, x_off_src;
      if (need_perturb_src) {
        const Matrix grads = input_gradients_ce(params, spec.x_src, spec.y_src);
        x_on_src = spec.x_src;
        x_off_src = spec.x_src;
        for (std::size_t r = 0; r < count; ++r) {
          auto [on, off] = decompose(grads.row(r), src_charts[batch_idx[r]]);
          PerturbationPair pair = make_pair(spec.x_src.row(r), std::move(on), std::move(off),
                                            config.alpha, config.beta, config.norm_floor);
          for (std::size_t c = 0; c < source.dim(); ++c) {
            x_on_src(r, c) = pair.x_on[c];
            x_off_src(r, c) = pair.x_off[c];
          }
        }
      }
      if (config.weights.lambda_adv > 0.0) spec.x_src_off = x_off_src;

      Matrix x_tgt;
      if (need_target_batch) {
        const std::vector<std::size_t> tgt_idx = target_cycle.next(count);
        x_tgt = gather_rows(target.x, tgt_idx);

        if (config.weights.lambda_cons > 0.0) {
          // Unlabeled target points take the entropy surrogate gradient.
          const Matrix tgrads = input_gradients_entropy(params, x_tgt);
          Matrix x_on_tgt = x_tgt;
          for (std::size_t r = 0; r < tgt_idx.size(); ++r) {
            auto [on, off] = decompose(tgrads.row(r), tgt_charts[tgt_idx[r]]);
            PerturbationPair pair = make_pair(x_tgt.row(r), std::move(on), std::move(off),
                                              config.alpha, 0.0, config.norm_floor);
            for (std::size_t c = 0; c < source.dim(); ++c) x_on_tgt(r, c) = pair.x_on[c];
          }
          spec.x_pool = vstack(spec.x_src, x_tgt);
          spec.x_pool_on = vstack(x_on_src, x_on_tgt);
        }
      } else if (config.weights.lambda_cons > 0.0) {
        spec.x_pool = spec.x_src;
        spec.x_pool_on = x_on_src;
      }

      if (config.weights.lambda_align > 0.0) {
        spec.x_tgt = x_tgt;
        spec.bandwidth = median_heuristic_bandwidth(predict_proba(params, spec.x_src),
                                                    predict_proba(params, x_tgt));
      }

      ObjectiveGraph graph = build_objective(params, spec);
      ObjectiveEval eval = eval_objective(graph, params);
      apply_gradient_step(params, eval.gradients, config.learning_rate);
      return eval.breakdown;
    };

    for (std::size_t start = 0; start < source.size(); start += config.batch_size) {
      const std::size_t count =
          std::min<std::size_t>(config.batch_size, source.size() - start);
      const std::vector<std::size_t> batch_idx(src_order.begin() + start,
                                               src_order.begin() + start + count);
      LossBreakdown breakdown;
      try {
        breakdown = run_iteration(batch_idx);
      } catch (const TrainingError& e) {
        throw TrainingError("epoch " + std::to_string(epoch + 1) + ", iteration " +
                            std::to_string(iterations + 1) + ": " + e.what());
      } catch (const EvalError& e) {
        throw TrainingError("epoch " + std::to_string(epoch + 1) + ", iteration " +
                            std::to_string(iterations + 1) + ": " + e.what());
      }
      sum_src += breakdown.l_src;
      sum_adv += breakdown.l_adv;
      sum_cons += breakdown.l_cons;
      sum_align += breakdown.l_align;
      sum_total += breakdown.l_total;
      ++iterations;
    }

    EpochRecord record;
    record.epoch = epoch + 1;
    const double n_it = static_cast<double>(iterations);
    record.losses.l_src = sum_src / n_it;
    record.losses.l_adv = sum_adv / n_it;
    record.losses.l_cons = sum_cons / n_it;
    record.losses.l_align = sum_align / n_it;
    record.losses.l_total = sum_total / n_it;
    try {
      record.source_accuracy = evaluate(params, source).first;
      if (log_target_accuracy) record.target_accuracy = evaluate(params, target).first;
    } catch (const EvalError& e) {
      throw TrainingError("epoch " + std::to_string(epoch + 1) +
                          ": evaluation produced a non-finite value: " + e.what());
    }
    record.wall_clock_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - epoch_start)
            .count();
    result.log.records.push_back(std::move(record));
  }

  result.params = std::move(params);
  return result;
}

TrainResult train_erm(const TrainConfig& config, const Dataset& data) {
  config.validate();
  data.validate();
  if (!data.fully_labeled()) throw DataError("train_erm: dataset must be fully labeled");

  const std::size_t classes = static_cast<std::size_t>(data.num_classes());
  ModelParams params =
      init_mlp(full_architecture(config, data.dim(), classes), mix_seed(config.seed, kInitStream));
  Rng rng_src(mix_seed(config.seed, kSourceBatchStream));

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    rng_src.shuffle(order);

    double sum_src = 0.0;
    std::size_t iterations = 0;
    for (std::size_t start = 0; start < data.size(); start += config.batch_size) {
      const std::size_t count = std::min<std::size_t>(config.batch_size, data.size() - start);
      const std::vector<std::size_t> batch_idx(order.begin() + start,
                                               order.begin() + start + count);

      Tape tape;
      MlpInputs mi = declare_mlp_inputs(tape, params);
      std::vector<int> batch_labels;
      batch_labels.reserve(count);
      for (std::size_t idx : batch_idx) batch_labels.push_back(data.labels[idx]);
      Tape::Id loss = append_cross_entropy(
          tape, append_mlp(tape, mi, tape.constant(gather_rows(data.x, batch_idx))),
          batch_labels, true);

      Bindings bindings;
      bind_params(bindings, params);
      try {
        TapeRun run(tape, loss, bindings);
        sum_src += run.scalar(loss);
        apply_gradient_step(params, run.gradients(param_names(params)), config.learning_rate);
      } catch (const EvalError& e) {
        throw TrainingError("epoch " + std::to_string(epoch + 1) + ", iteration " +
                            std::to_string(iterations + 1) + ": " + e.what());
      }
      ++iterations;
    }

    EpochRecord record;
    record.epoch = epoch + 1;
    record.losses.l_src = sum_src / static_cast<double>(iterations);
    record.losses.l_total = record.losses.l_src;
    try {
      record.source_accuracy = evaluate(params, data).first;
    } catch (const EvalError& e) {
      throw TrainingError("epoch " + std::to_string(epoch + 1) +
                          ": evaluation produced a non-finite value: " + e.what());
    }
    record.wall_clock_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - epoch_start)
            .count();
    result.log.records.push_back(std::move(record));
  }

  result.params = std::move(params);
  return result;
}

}  // namespace maada
