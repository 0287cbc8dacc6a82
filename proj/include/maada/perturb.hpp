#ifndef MAADA_PERTURB_HPP
#define MAADA_PERTURB_HPP

#include <span>
#include <utility>
#include <vector>

#include "maada/manifold.hpp"

namespace maada {

// On/off-manifold split of a loss gradient plus the perturbed inputs built
// from it. delta_on lies in the chart's span, delta_off is the orthogonal
// remainder, and delta_on + delta_off reconstructs the gradient exactly.
struct PerturbationPair {
  std::vector<double> anchor;
  std::vector<double> delta_on;
  std::vector<double> delta_off;
  std::vector<double> x_on;
  std::vector<double> x_off;
  bool on_skipped = false;   // gradient component below the norm floor
  bool off_skipped = false;
};

// Splits a gradient into its tangent projection and the residual.
std::pair<std::vector<double>, std::vector<double>> decompose(std::span<const double> gradient,
                                                              const TangentChart& chart);

// x_on = x + alpha * delta_on / |delta_on| (and likewise x_off with beta);
// a component whose norm falls below norm_floor leaves the anchor unchanged
// and sets the corresponding skip flag.
PerturbationPair make_pair(std::span<const double> x, std::vector<double> delta_on,
                           std::vector<double> delta_off, double alpha, double beta,
                           double norm_floor);

}  // namespace maada

#endif
