#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "maada/dataset.hpp"

using namespace maada;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

double arc_residual(double x, double y, int label) {
  if (label == 0) return std::abs(std::sqrt(x * x + y * y) - 1.0);
  const double dx = x - 1.0;
  const double dy = y - 0.5;
  return std::abs(std::sqrt(dx * dx + dy * dy) - 1.0);
}

}  // namespace

TEST_CASE("gen_two_moons: balance, noise-free arcs, determinism") {
  Dataset ds = gen_two_moons(100, 0.1, 7);
  REQUIRE(ds.size() == 100);
  int per_class[2] = {0, 0};
  for (int y : ds.labels) {
    REQUIRE(y >= 0);
    REQUIRE(y <= 1);
    ++per_class[y];
  }
  CHECK(per_class[0] == 50);
  CHECK(per_class[1] == 50);

  Dataset clean = gen_two_moons(64, 0.0, 3);
  for (std::size_t i = 0; i < clean.size(); ++i) {
    CHECK(arc_residual(clean.x(i, 0), clean.x(i, 1), clean.labels[i]) < 1e-12);
  }

  Dataset again = gen_two_moons(100, 0.1, 7);
  CHECK(ds.x == again.x);
  CHECK(ds.labels == again.labels);

  CHECK_THROWS_AS(gen_two_moons(1, 0.1, 0), ConfigError);
  CHECK_THROWS_AS(gen_two_moons(10, -0.1, 0), ConfigError);
}

TEST_CASE("gen_two_moons: odd count keeps classes within one point") {
  Dataset ds = gen_two_moons(101, 0.05, 1);
  int per_class[2] = {0, 0};
  for (int y : ds.labels) ++per_class[y];
  CHECK(std::abs(per_class[0] - per_class[1]) <= 1);
}

TEST_CASE("gen_circle: radius, determinism, adjacent chord length") {
  const double radius = 2.5;
  Dataset ds = gen_circle(400, radius, 5);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double r = std::sqrt(ds.x(i, 0) * ds.x(i, 0) + ds.x(i, 1) * ds.x(i, 1));
    CHECK(std::abs(r - radius) < 1e-12);
    CHECK(ds.labels[i] == -1);
  }

  Dataset a = gen_circle(4, 1.0, 11);
  Dataset b = gen_circle(4, 1.0, 11);
  CHECK(a.x == b.x);

  const double expected_chord = 2.0 * radius * std::sin(kPi / 400.0);
  for (std::size_t i = 0; i + 1 < ds.size(); ++i) {
    const double chord = std::sqrt(squared_distance(ds.x.row(i), ds.x.row(i + 1)));
    CHECK(chord == doctest::Approx(expected_chord).epsilon(1e-9));
  }

  CHECK_THROWS_AS(gen_circle(2, 1.0, 0), ConfigError);
}

TEST_CASE("rotate: identity, involution, isometry, retagging") {
  Dataset ds = gen_two_moons(50, 0.1, 9);

  Dataset same = rotate(ds, 0.0, std::nullopt, false);
  CHECK(same.x == ds.x);

  Dataset flipped = rotate(rotate(ds, kPi, std::nullopt, false), kPi, std::nullopt, false);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(flipped.x(i, 0) == doctest::Approx(ds.x(i, 0)).epsilon(1e-9).scale(1.0));
    CHECK(flipped.x(i, 1) == doctest::Approx(ds.x(i, 1)).epsilon(1e-9).scale(1.0));
  }

  Dataset turned = rotate(ds, 0.83, Domain::kTarget, true);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double before = std::sqrt(ds.x(i, 0) * ds.x(i, 0) + ds.x(i, 1) * ds.x(i, 1));
    const double after =
        std::sqrt(turned.x(i, 0) * turned.x(i, 0) + turned.x(i, 1) * turned.x(i, 1));
    CHECK(std::abs(before - after) < 1e-12);
    CHECK(turned.labels[i] == -1);
    CHECK(turned.domains[i] == Domain::kTarget);
  }
  CHECK(ds.fully_labeled());
  CHECK_FALSE(turned.fully_labeled());

  Dataset wide;
  wide.x = Matrix(2, 3);
  wide.labels = {0, 1};
  wide.domains = {Domain::kSource, Domain::kSource};
  CHECK_THROWS_AS(rotate(wide, 0.5, std::nullopt, false), ConfigError);
}

TEST_CASE("csv round trip is value-exact") {
  Dataset ds = gen_two_moons(37, 0.2, 21);
  ds.domains.assign(ds.size(), Domain::kTarget);
  const auto path = temp_file("maada_test_roundtrip.csv");
  save_csv(ds, path.string());
  Dataset back = load_csv(path.string());
  CHECK(back.x == ds.x);  // 17 significant digits round-trip exactly
  CHECK(back.labels == ds.labels);
  CHECK(back.domains == ds.domains);
  std::filesystem::remove(path);
}

TEST_CASE("csv: three-feature fixture loads with correct shapes") {
  const auto path = temp_file("maada_test_d3.csv");
  {
    std::ofstream f(path);
    f << "x0,x1,x2,label,domain\n";
    f << "1.5,-2.25,0.125,0,source\n";
    f << "0.5,0.75,-1.0,-1,target\n";
  }
  Dataset ds = load_csv(path.string());
  CHECK(ds.dim() == 3);
  CHECK(ds.size() == 2);
  CHECK(ds.x(0, 1) == -2.25);
  CHECK(ds.labels[1] == -1);
  CHECK(ds.domains[1] == Domain::kTarget);
  std::filesystem::remove(path);
}

TEST_CASE("csv: malformed inputs raise parse errors with line numbers") {
  const auto path = temp_file("maada_test_bad.csv");
  {
    std::ofstream f(path);
    f << "x0,x1,domain\n";  // label column missing
  }
  CHECK_THROWS_AS(load_csv(path.string()), ParseError);

  {
    std::ofstream f(path);
    f << "x0,x1,label,domain\n";
    f << "1.0,2.0,0,source\n";
    f << "1.0,oops,0,source\n";
  }
  try {
    load_csv(path.string());
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }

  {
    std::ofstream f(path);
    f << "x0,x1,label,domain\n";
    f << "1.0,2.0,0,mars\n";
  }
  CHECK_THROWS_AS(load_csv(path.string()), ParseError);

  CHECK_THROWS_AS(load_csv("/nonexistent/maada.csv"), ConfigError);
  std::filesystem::remove(path);
}

TEST_CASE("generators never emit -1 labels unless labels were dropped") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Dataset moons = gen_two_moons(61, 0.3, seed);
    for (int y : moons.labels) CHECK(y >= 0);
    Dataset dropped = rotate(moons, 0.1, std::nullopt, true);
    for (int y : dropped.labels) CHECK(y == -1);
  }
}
