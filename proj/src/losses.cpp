#include "maada/losses.hpp"

#include <algorithm>
#include <cmath>

namespace maada {

namespace {

void require_batches_match(const Matrix& a, const Matrix& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": " + a.shape_str() + " vs " + b.shape_str());
  }
}

// Mean squared probability shift between two model applications, appended
// to an existing tape: mean_i |p(a_i) - p(b_i)|^2.
Tape::Id append_consistency(Tape& tape, const MlpInputs& mi, const Matrix& a, const Matrix& b) {
  Tape::Id pa = append_softmax(tape, append_mlp(tape, mi, tape.constant(a)));
  Tape::Id pb = append_softmax(tape, append_mlp(tape, mi, tape.constant(b)));
  Tape::Id sq = tape.sum(tape.square(tape.sub(pa, pb)));
  return tape.scale(sq, 1.0 / static_cast<double>(a.rows()));
}

Tape::Id append_mean_kernel(Tape& tape, Tape::Id a, Tape::Id b, double neg_inv_two_sigma_sq) {
  const std::size_t na = tape.rows(a);
  const std::size_t nb = tape.rows(b);
  Tape::Id ra = tape.row_sum(tape.square(a));
  Tape::Id rb = tape.row_sum(tape.square(b));
  Tape::Id gram = tape.matmul(a, tape.transpose(b));
  Tape::Id d2 = tape.sub(
      tape.add(tape.broadcast_col(ra, nb), tape.broadcast_row(tape.transpose(rb), na)),
      tape.scale(gram, 2.0));
  return tape.mean(tape.exp(tape.scale(d2, neg_inv_two_sigma_sq)));
}

// Squared MMD (biased) plus squared mean-embedding distance; the MMD part
// is clamped at zero so rounding cannot push the term negative.
Tape::Id append_align(Tape& tape, Tape::Id p_src, Tape::Id p_tgt, double bandwidth) {
  const double c = -1.0 / (2.0 * bandwidth * bandwidth);
  Tape::Id kaa = append_mean_kernel(tape, p_src, p_src, c);
  Tape::Id kbb = append_mean_kernel(tape, p_tgt, p_tgt, c);
  Tape::Id kab = append_mean_kernel(tape, p_src, p_tgt, c);
  Tape::Id mmd = tape.relu(tape.sub(tape.add(kaa, kbb), tape.scale(kab, 2.0)));

  const std::size_t ns = tape.rows(p_src);
  const std::size_t nt = tape.rows(p_tgt);
  Tape::Id ones_s = tape.constant(Matrix(1, ns, std::vector<double>(ns, 1.0)));
  Tape::Id ones_t = tape.constant(Matrix(1, nt, std::vector<double>(nt, 1.0)));
  Tape::Id mu_s = tape.scale(tape.matmul(ones_s, p_src), 1.0 / static_cast<double>(ns));
  Tape::Id mu_t = tape.scale(tape.matmul(ones_t, p_tgt), 1.0 / static_cast<double>(nt));
  Tape::Id mean_sq = tape.sum(tape.square(tape.sub(mu_s, mu_t)));
  return tape.add(mmd, mean_sq);
}

}  // namespace

double loss_src(const ModelParams& params, const Matrix& x, const std::vector<int>& labels) {
  return cross_entropy(params, x, labels);
}

double loss_adv(const ModelParams& params, const Matrix& x, const std::vector<int>& labels,
                const Matrix& x_off) {
  require_batches_match(x, x_off, "loss_adv");
  if (x.rows() == 0) throw DataError("loss_adv: empty batch");
  Tape tape;
  MlpInputs mi = declare_mlp_inputs(tape, params);
  Tape::Id ce_off =
      append_cross_entropy(tape, append_mlp(tape, mi, tape.constant(x_off)), labels, true);
  Tape::Id out = tape.add(ce_off, append_consistency(tape, mi, x_off, x));
  Bindings bindings;
  bind_params(bindings, params);
  return forward_eval(tape, out, bindings)(0, 0);
}

double loss_cons(const ModelParams& params, const Matrix& x, const Matrix& x_on) {
  require_batches_match(x, x_on, "loss_cons");
  if (x.rows() == 0) throw DataError("loss_cons: empty batch");
  Tape tape;
  MlpInputs mi = declare_mlp_inputs(tape, params);
  Tape::Id out = append_consistency(tape, mi, x_on, x);
  Bindings bindings;
  bind_params(bindings, params);
  return forward_eval(tape, out, bindings)(0, 0);
}

double mmd_rbf(const Matrix& a, const Matrix& b, double bandwidth) {
  if (a.rows() == 0 || b.rows() == 0) throw DataError("mmd_rbf: empty sample");
  if (a.cols() != b.cols()) {
    throw DimensionError("mmd_rbf: " + a.shape_str() + " vs " + b.shape_str());
  }
  if (!(bandwidth > 0.0)) throw ConfigError("mmd_rbf: bandwidth must be positive");

  const double c = -1.0 / (2.0 * bandwidth * bandwidth);
  auto mean_kernel = [&](const Matrix& u, const Matrix& v) {
    double acc = 0.0;
    for (std::size_t i = 0; i < u.rows(); ++i)
      for (std::size_t j = 0; j < v.rows(); ++j)
        acc += std::exp(c * squared_distance(u.row(i), v.row(j)));
    return acc / static_cast<double>(u.rows() * v.rows());
  };
  return mean_kernel(a, a) + mean_kernel(b, b) - 2.0 * mean_kernel(a, b);
}

double median_heuristic_bandwidth(const Matrix& a, const Matrix& b) {
  const Matrix pooled = vstack(a, b);
  std::vector<double> dists;
  for (std::size_t i = 0; i < pooled.rows(); ++i)
    for (std::size_t j = i + 1; j < pooled.rows(); ++j)
      dists.push_back(std::sqrt(squared_distance(pooled.row(i), pooled.row(j))));
  if (dists.empty()) return 1e-6;
  std::sort(dists.begin(), dists.end());
  const std::size_t mid = dists.size() / 2;
  const double median =
      dists.size() % 2 == 1 ? dists[mid] : 0.5 * (dists[mid - 1] + dists[mid]);
  return std::max(median, 1e-6);
}

double mmd_rbf_median(const Matrix& a, const Matrix& b) {
  return mmd_rbf(a, b, median_heuristic_bandwidth(a, b));
}

double loss_align(const ModelParams& params, const Matrix& x_src, const Matrix& x_tgt) {
  if (x_src.rows() == 0 || x_tgt.rows() == 0) throw DataError("loss_align: empty batch");
  const Matrix p_src = predict_proba(params, x_src);
  const Matrix p_tgt = predict_proba(params, x_tgt);
  const double mmd = std::max(mmd_rbf_median(p_src, p_tgt), 0.0);

  const std::size_t c = p_src.cols();
  double mean_sq = 0.0;
  for (std::size_t j = 0; j < c; ++j) {
    double mu_s = 0.0, mu_t = 0.0;
    for (std::size_t i = 0; i < p_src.rows(); ++i) mu_s += p_src(i, j);
    for (std::size_t i = 0; i < p_tgt.rows(); ++i) mu_t += p_tgt(i, j);
    mu_s /= static_cast<double>(p_src.rows());
    mu_t /= static_cast<double>(p_tgt.rows());
    mean_sq += (mu_s - mu_t) * (mu_s - mu_t);
  }
  return mmd + mean_sq;
}

LossBreakdown loss_total(double l_src, double l_adv, double l_cons, double l_align,
                         const LossWeights& weights) {
  const std::pair<const char*, double> named[] = {
      {"l_src", l_src}, {"l_adv", l_adv}, {"l_cons", l_cons}, {"l_align", l_align}};
  for (const auto& [name, value] : named) {
    if (!std::isfinite(value)) {
      throw TrainingError(std::string("loss_total: non-finite component ") + name);
    }
  }
  if (!(weights.lambda_adv >= 0.0) || !(weights.lambda_cons >= 0.0) ||
      !(weights.lambda_align >= 0.0)) {
    throw ConfigError("loss_total: weights must be nonnegative and finite");
  }
  LossBreakdown bd;
  bd.l_src = l_src;
  bd.l_adv = l_adv;
  bd.l_cons = l_cons;
  bd.l_align = l_align;
  bd.l_total = ((l_src + weights.lambda_adv * l_adv) + weights.lambda_cons * l_cons) +
               weights.lambda_align * l_align;
  return bd;
}

ObjectiveGraph build_objective(const ModelParams& params, const ObjectiveSpec& spec) {
  if (spec.x_src.rows() == 0) throw DataError("build_objective: empty source batch");
  if (spec.y_src.size() != spec.x_src.rows()) {
    throw DimensionError("build_objective: label count does not match the source batch");
  }

  ObjectiveGraph graph;
  graph.params = param_names(params);
  graph.weights = spec.weights;
  Tape& t = graph.tape;
  MlpInputs mi = declare_mlp_inputs(t, params);

  auto mark = [&](const char* name, Tape::Id first) {
    graph.term_ranges.emplace_back(
        name, std::pair{first, static_cast<Tape::Id>(t.node_count() - 1)});
  };

  Tape::Id first = static_cast<Tape::Id>(t.node_count());
  Tape::Id logits_src = append_mlp(t, mi, t.constant(spec.x_src));
  graph.l_src = append_cross_entropy(t, logits_src, spec.y_src, true);
  mark("l_src", first);
  Tape::Id total = graph.l_src;

  if (spec.weights.lambda_adv > 0.0) {
    require_batches_match(spec.x_src, spec.x_src_off, "build_objective: x_src_off");
    first = static_cast<Tape::Id>(t.node_count());
    Tape::Id ce_off =
        append_cross_entropy(t, append_mlp(t, mi, t.constant(spec.x_src_off)), spec.y_src, true);
    graph.l_adv = t.add(ce_off, append_consistency(t, mi, spec.x_src_off, spec.x_src));
    mark("l_adv", first);
    total = t.add(total, t.scale(graph.l_adv, spec.weights.lambda_adv));
  }

  if (spec.weights.lambda_cons > 0.0) {
    require_batches_match(spec.x_pool, spec.x_pool_on, "build_objective: x_pool_on");
    if (spec.x_pool.rows() == 0) throw DataError("build_objective: empty consistency pool");
    first = static_cast<Tape::Id>(t.node_count());
    graph.l_cons = append_consistency(t, mi, spec.x_pool_on, spec.x_pool);
    mark("l_cons", first);
    total = t.add(total, t.scale(graph.l_cons, spec.weights.lambda_cons));
  }

  if (spec.weights.lambda_align > 0.0) {
    if (spec.x_tgt.rows() == 0) throw DataError("build_objective: empty target batch");
    if (!(spec.bandwidth > 0.0)) {
      throw ConfigError("build_objective: alignment requires a positive bandwidth");
    }
    first = static_cast<Tape::Id>(t.node_count());
    Tape::Id p_src = append_softmax(t, append_mlp(t, mi, t.constant(spec.x_src)));
    Tape::Id p_tgt = append_softmax(t, append_mlp(t, mi, t.constant(spec.x_tgt)));
    graph.l_align = append_align(t, p_src, p_tgt, spec.bandwidth);
    mark("l_align", first);
    total = t.add(total, t.scale(graph.l_align, spec.weights.lambda_align));
  }

  graph.total = total;
  return graph;
}

ObjectiveEval eval_objective(const ObjectiveGraph& graph, const ModelParams& params,
                             bool with_gradients) {
  Bindings bindings;
  bind_params(bindings, params);
  try {
    TapeRun run(graph.tape, graph.total, bindings);
    ObjectiveEval out;
    out.breakdown.l_src = run.scalar(graph.l_src);
    out.breakdown.l_adv = graph.l_adv >= 0 ? run.scalar(graph.l_adv) : 0.0;
    out.breakdown.l_cons = graph.l_cons >= 0 ? run.scalar(graph.l_cons) : 0.0;
    out.breakdown.l_align = graph.l_align >= 0 ? run.scalar(graph.l_align) : 0.0;
    out.breakdown.l_total = run.scalar(graph.total);
    if (with_gradients) out.gradients = run.gradients(graph.params);
    return out;
  } catch (const EvalError& e) {
    std::string term = "objective";
    for (const auto& [name, range] : graph.term_ranges) {
      if (e.node() >= range.first && e.node() <= range.second) {
        term = name;
        break;
      }
    }
    throw TrainingError("non-finite value in " + term + ": " + e.what());
  }
}

}  // namespace maada
