#include "maada/analysis.hpp"

#include <cmath>

#include "maada/perturb.hpp"

namespace maada {

namespace {

// x_on / x_off rows for every point of a cloud, charts computed fresh on
// that cloud. Labeled points perturb along the classification gradient,
// unlabeled ones along the entropy surrogate.
struct PerturbedCloud {
  Matrix x_on;
  Matrix x_off;
};

PerturbedCloud perturb_cloud(const ModelParams& params, const Dataset& ds, double alpha,
                             double beta, int k, int m) {
  const std::vector<TangentChart> charts = all_charts(ds.x, k, m);
  PerturbedCloud out{ds.x, ds.x};
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::vector<double> g =
        ds.labels[i] >= 0 ? input_gradient(params, ds.x.row(i), ds.labels[i])
                          : entropy_input_gradient(params, ds.x.row(i));
    auto [on, off] = decompose(g, charts[i]);
    PerturbationPair pair =
        make_pair(ds.x.row(i), std::move(on), std::move(off), alpha, beta, 1e-12);
    for (std::size_t c = 0; c < ds.dim(); ++c) {
      out.x_on(i, c) = pair.x_on[c];
      out.x_off(i, c) = pair.x_off[c];
    }
  }
  return out;
}

}  // namespace

RiskSplit risk_split(const ModelParams& params, const Dataset& target_test, double beta, int k,
                     int m) {
  if (!target_test.fully_labeled()) {
    throw DataError("risk_split: target test set must be labeled");
  }
  RiskSplit split;
  split.on_manifold_error = cross_entropy(params, target_test.x, target_test.labels);
  const PerturbedCloud perturbed = perturb_cloud(params, target_test, 0.0, beta, k, m);
  split.off_manifold_sensitivity =
      loss_adv(params, target_test.x, target_test.labels, perturbed.x_off);
  return split;
}

std::pair<double, double> measure_epsilon_c(const ModelParams& params, const Dataset& points,
                                            double alpha, int k, int m) {
  if (points.size() == 0) throw DataError("measure_epsilon_c: empty dataset");
  const PerturbedCloud perturbed = perturb_cloud(params, points, alpha, 0.0, k, m);
  const Matrix p = predict_proba(params, points.x);
  const Matrix p_on = predict_proba(params, perturbed.x_on);

  double sum = 0.0;
  double max = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double gap = std::sqrt(squared_distance(p.row(i), p_on.row(i)));
    sum += gap;
    max = std::max(max, gap);
  }
  return {sum / static_cast<double>(points.size()), max};
}

double estimate_lambda_star(const TrainConfig& config, const Dataset& source,
                            const Dataset& target_oracle) {
  if (!source.fully_labeled() || !target_oracle.fully_labeled()) {
    throw DataError("estimate_lambda_star: oracle labels required on both domains");
  }
  if (source.dim() != target_oracle.dim()) {
    throw DimensionError("estimate_lambda_star: domain dimensions differ");
  }

  Dataset pooled;
  pooled.name = "pooled";
  pooled.x = vstack(source.x, target_oracle.x);
  pooled.labels = source.labels;
  pooled.labels.insert(pooled.labels.end(), target_oracle.labels.begin(),
                       target_oracle.labels.end());
  pooled.domains = source.domains;
  pooled.domains.insert(pooled.domains.end(), target_oracle.domains.begin(),
                        target_oracle.domains.end());

  const TrainResult joint = train_erm(config, pooled);
  return cross_entropy(joint.params, source.x, source.labels) +
         cross_entropy(joint.params, target_oracle.x, target_oracle.labels);
}

BoundReport bound_report(const ModelParams& params, const Dataset& source,
                         const Dataset& target, const std::optional<Dataset>& target_oracle,
                         const TrainConfig& config) {
  if (!source.fully_labeled()) throw DataError("bound_report: source must be labeled");

  BoundReport report;
  report.r_hat_s = cross_entropy(params, source.x, source.labels);

  const auto [mean_gap, max_gap] =
      measure_epsilon_c(params, source, config.alpha, config.k, config.m);
  report.epsilon_c_mean = mean_gap;
  report.epsilon_c_max = max_gap;

  report.geod = geo_discrepancy(source.x, target.x, config.k, config.m);

  if (target_oracle) {
    report.lambda_star_upper = estimate_lambda_star(config, source, *target_oracle);
  }

  // Unknown constant C: substituting any number would be invented, so the
  // term stays symbolic with the configured step and sample count filled in.
  report.c_over_eps2n = "C / (eps^2 * n) with eps = beta = " + std::to_string(config.beta) +
                        ", n = " + std::to_string(source.size()) + ", C unknown";

  report.rhs_partial = report.r_hat_s + report.epsilon_c_mean + report.geod.total +
                       (report.lambda_star_upper ? *report.lambda_star_upper : 0.0);
  return report;
}

}  // namespace maada
