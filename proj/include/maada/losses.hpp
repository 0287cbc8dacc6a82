#ifndef MAADA_LOSSES_HPP
#define MAADA_LOSSES_HPP

#include <map>
#include <string>
#include <vector>

#include "maada/model.hpp"

namespace maada {

struct LossWeights {
  double lambda_adv = 0.0;
  double lambda_cons = 0.0;
  double lambda_align = 0.0;
};

struct LossBreakdown {
  double l_src = 0.0;
  double l_adv = 0.0;
  double l_cons = 0.0;
  double l_align = 0.0;
  double l_total = 0.0;
};

// Supervised classification loss: mean cross-entropy on labeled points.
double loss_src(const ModelParams& params, const Matrix& x, const std::vector<int>& labels);

// Off-manifold adversarial regularizer: mean of the perturbed-point
// cross-entropy plus the squared probability shift. Skipped points carry
// x_off = x.
double loss_adv(const ModelParams& params, const Matrix& x, const std::vector<int>& labels,
                const Matrix& x_off);

// On-manifold consistency: mean squared probability shift, label-free.
double loss_cons(const ModelParams& params, const Matrix& x, const Matrix& x_on);

// Biased-estimator squared MMD with a Gaussian kernel.
double mmd_rbf(const Matrix& a, const Matrix& b, double bandwidth);
// Same with the median-heuristic bandwidth over the pooled rows.
double mmd_rbf_median(const Matrix& a, const Matrix& b);
// Median pairwise Euclidean distance over the pooled rows, floored at 1e-6.
double median_heuristic_bandwidth(const Matrix& a, const Matrix& b);

// Domain alignment on probability embeddings: MMD plus the squared distance
// of the batch-mean embeddings.
double loss_align(const ModelParams& params, const Matrix& x_src, const Matrix& x_tgt);

// Weighted total; throws TrainingError naming any non-finite component.
LossBreakdown loss_total(double l_src, double l_adv, double l_cons, double l_align,
                         const LossWeights& weights);

// --- differentiable objective -------------------------------------------
// The full training objective as one tape, so a single backward pass yields
// every parameter gradient. Perturbed inputs enter as constants; gradients
// do not flow through their construction or through bandwidth selection.

struct ObjectiveSpec {
  Matrix x_src;
  std::vector<int> y_src;
  Matrix x_src_off;   // used when weights.lambda_adv > 0
  Matrix x_pool;      // source + target rows, used when weights.lambda_cons > 0
  Matrix x_pool_on;
  Matrix x_tgt;       // used when weights.lambda_align > 0
  LossWeights weights;
  double bandwidth = 0.0;  // kernel bandwidth when lambda_align > 0
};

struct ObjectiveGraph {
  Tape tape;
  Tape::Id total = -1;
  Tape::Id l_src = -1;
  Tape::Id l_adv = -1;   // -1 when the term is disabled
  Tape::Id l_cons = -1;
  Tape::Id l_align = -1;
  std::vector<std::string> params;
  LossWeights weights;
  // Node ranges per term, for diagnostics when evaluation fails.
  std::vector<std::pair<std::string, std::pair<Tape::Id, Tape::Id>>> term_ranges;
};

// Terms with zero weight are not built: they contribute nothing to the
// value or gradient, and their absence keeps the disabled objective
// bit-identical to plain empirical risk minimization.
ObjectiveGraph build_objective(const ModelParams& params, const ObjectiveSpec& spec);

struct ObjectiveEval {
  LossBreakdown breakdown;
  std::map<std::string, Matrix> gradients;
};

// Forward (and optionally backward) pass; non-finite values surface as
// TrainingError naming the offending term.
ObjectiveEval eval_objective(const ObjectiveGraph& graph, const ModelParams& params,
                             bool with_gradients = true);

}  // namespace maada

#endif
