#ifndef MAADA_ANALYSIS_HPP
#define MAADA_ANALYSIS_HPP

#include <optional>
#include <string>
#include <utility>

#include "maada/manifold.hpp"
#include "maada/trainer.hpp"

namespace maada {

// Empirical split of the target risk into the error on the raw points and
// the sensitivity to off-manifold perturbation.
struct RiskSplit {
  double on_manifold_error = 0.0;
  double off_manifold_sensitivity = 0.0;
};

// on term: mean cross-entropy on the raw labeled points. off term: mean of
// the perturbed-point cross-entropy plus the squared probability shift,
// with x_off built from freshly computed charts at step beta.
RiskSplit risk_split(const ModelParams& params, const Dataset& target_test, double beta, int k,
                     int m);

// Distribution of |f(x) - f(x_on)| over the point set (probability outputs);
// returns (mean, max). Labeled points use the classification gradient,
// unlabeled ones the entropy surrogate.
std::pair<double, double> measure_epsilon_c(const ModelParams& params, const Dataset& points,
                                            double alpha, int k, int m);

// Upper bound on the ideal-joint-hypothesis risk: trains a fresh model on
// the pooled labeled data with the same architecture and budget, and
// returns its summed source + target cross-entropy risks.
double estimate_lambda_star(const TrainConfig& config, const Dataset& source,
                            const Dataset& target_oracle);

// Every empirically measurable term of the transfer bound. The sample-
// complexity term has unknown constants and is reported symbolically only.
struct BoundReport {
  double r_hat_s = 0.0;
  double epsilon_c_mean = 0.0;
  double epsilon_c_max = 0.0;
  GeoDBreakdown geod;
  std::optional<double> lambda_star_upper;  // present only with oracle labels
  std::string c_over_eps2n;                 // symbolic, not numeric
  double rhs_partial = 0.0;
};

BoundReport bound_report(const ModelParams& params, const Dataset& source,
                         const Dataset& target, const std::optional<Dataset>& target_oracle,
                         const TrainConfig& config);

}  // namespace maada

#endif
