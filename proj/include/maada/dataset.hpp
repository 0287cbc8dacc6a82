#ifndef MAADA_DATASET_HPP
#define MAADA_DATASET_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "maada/matrix.hpp"

namespace maada {

enum class Domain : std::uint8_t { kSource, kTarget };

std::string domain_name(Domain d);

// Point cloud with integer labels (-1 = unlabeled) and a domain tag per
// point.
struct Dataset {
  Matrix x;
  std::vector<int> labels;
  std::vector<Domain> domains;
  std::string name;

  std::size_t size() const { return x.rows(); }
  std::size_t dim() const { return x.cols(); }
  bool fully_labeled() const;
  // Largest label + 1, at least 2.
  int num_classes() const;
  void validate() const;
};

// Two interleaved half-circles of radius 1 with the standard offsets;
// classes balanced within one point, Gaussian coordinate noise.
Dataset gen_two_moons(std::size_t n, double noise, std::uint64_t seed);

// n points on a circle of the given radius, equally spaced in angle with a
// seeded random phase; unlabeled.
Dataset gen_circle(std::size_t n, double radius, std::uint64_t seed);

// 2-D rotation about the origin; optionally retags the domain and erases
// labels to -1.
Dataset rotate(const Dataset& ds, double theta, std::optional<Domain> retag, bool drop_labels);

// CSV with header x0,...,x{d-1},label,domain; 17 significant digits so the
// round trip is value-exact.
void save_csv(const Dataset& ds, const std::string& path);
Dataset load_csv(const std::string& path);

}  // namespace maada

#endif
