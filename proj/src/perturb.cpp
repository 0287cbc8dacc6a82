#include "maada/perturb.hpp"

#include <string>

namespace maada {

std::pair<std::vector<double>, std::vector<double>> decompose(std::span<const double> gradient,
                                                              const TangentChart& chart) {
  if (gradient.size() != chart.basis.rows()) {
    throw DimensionError("decompose: gradient length " + std::to_string(gradient.size()) +
                         ", chart dimension " + std::to_string(chart.basis.rows()));
  }
  std::vector<double> on = project_tangent(chart, gradient);
  std::vector<double> off(gradient.size());
  for (std::size_t i = 0; i < gradient.size(); ++i) {
    off[i] = gradient[i] - on[i];
    // Re-anchor the tangent part on the rounded residual; the second
    // subtraction is exact (Fast2Sum), so delta_on + delta_off reconstructs
    // the gradient bit for bit instead of drifting by one ulp.
    on[i] = gradient[i] - off[i];
  }
  return {std::move(on), std::move(off)};
}

PerturbationPair make_pair(std::span<const double> x, std::vector<double> delta_on,
                           std::vector<double> delta_off, double alpha, double beta,
                           double norm_floor) {
  if (alpha < 0.0 || beta < 0.0) {
    throw ConfigError("make_pair: step sizes must be nonnegative");
  }
  if (delta_on.size() != x.size() || delta_off.size() != x.size()) {
    throw DimensionError("make_pair: component length does not match the anchor");
  }

  PerturbationPair pair;
  pair.anchor.assign(x.begin(), x.end());
  pair.x_on = pair.anchor;
  pair.x_off = pair.anchor;

  const double on_norm = l2_norm(delta_on);
  if (on_norm >= norm_floor && on_norm > 0.0) {
    for (std::size_t i = 0; i < x.size(); ++i)
      pair.x_on[i] = x[i] + alpha * (delta_on[i] / on_norm);
  } else {
    pair.on_skipped = true;
  }

  const double off_norm = l2_norm(delta_off);
  if (off_norm >= norm_floor && off_norm > 0.0) {
    for (std::size_t i = 0; i < x.size(); ++i)
      pair.x_off[i] = x[i] + beta * (delta_off[i] / off_norm);
  } else {
    pair.off_skipped = true;
  }

  pair.delta_on = std::move(delta_on);
  pair.delta_off = std::move(delta_off);
  return pair;
}

}  // namespace maada
