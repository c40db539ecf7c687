#include <doctest.h>

#include <cmath>

#include "ias/errors.hpp"
#include "ias/grid.hpp"
#include "ias/rng.hpp"

using namespace ias;

TEST_CASE("grid point counts are binomial coefficients") {
  CHECK(SimplexGrid(2, 4).size() == 5);
  CHECK(SimplexGrid(3, 10).size() == 66);
  CHECK(SimplexGrid(1, 7).size() == 1);
  CHECK(SimplexGrid(1, 7).point(0)[0] == 1.0);
}

TEST_CASE("oversized grids are rejected") {
  CHECK_THROWS_AS(SimplexGrid::point_count(12, 500), ValidationError);
}

TEST_CASE("compositions are lexicographic and indexable") {
  SimplexGrid grid(3, 4);
  CHECK(grid.composition(0)[0] == 0);
  CHECK(grid.composition(0)[2] == 4);
  for (int i = 0; i < grid.size(); ++i) CHECK(grid.index_of(grid.composition(i)) == i);
  const int missing[3] = {5, 0, 0};
  CHECK(grid.index_of(std::span<const int>(missing, 3)) == -1);
}

TEST_CASE("interpolation is exact at grid points") {
  SimplexGrid grid(3, 60);
  Rng rng(3);
  std::vector<double> table(grid.size());
  for (double& v : table) v = rng.uniform();
  for (int i = 0; i < grid.size(); i += 7) CHECK(grid.interpolate(table, grid.point(i)) == table[i]);
}

TEST_CASE("interpolation at the midpoint of adjacent points is the mean") {
  SimplexGrid grid(2, 10);
  std::vector<double> table(grid.size());
  Rng rng(5);
  for (double& v : table) v = rng.uniform();
  auto a = grid.point(3);
  auto b = grid.point(4);
  std::vector<double> mid{0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
  CHECK(grid.interpolate(table, mid) == doctest::Approx(0.5 * (table[3] + table[4])).epsilon(1e-13));
}

TEST_CASE("a constant table interpolates to that constant everywhere") {
  SimplexGrid grid(4, 8);
  std::vector<double> table(grid.size(), 2.5);
  Rng rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    auto mu = rng.uniform_simplex(4);
    CHECK(grid.interpolate(table, mu) == doctest::Approx(2.5).epsilon(1e-12));
  }
}

TEST_CASE("affine functions of the belief interpolate without error") {
  SimplexGrid grid(3, 24);
  const std::vector<double> weights{0.2, 1.7, 0.9};
  std::vector<double> table(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    auto mu = grid.point(i);
    table[i] = weights[0] * mu[0] + weights[1] * mu[1] + weights[2] * mu[2];
  }
  Rng rng(9);
  for (int rep = 0; rep < 200; ++rep) {
    auto mu = rng.uniform_simplex(3);
    const double expected = weights[0] * mu[0] + weights[1] * mu[1] + weights[2] * mu[2];
    CHECK(grid.interpolate(table, mu) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("barycentric weights are a convex combination") {
  SimplexGrid grid(4, 15);
  Rng rng(13);
  for (int rep = 0; rep < 200; ++rep) {
    auto mu = rng.uniform_simplex(4);
    auto support = grid.locate(mu);
    CHECK(support.terms.size() <= 4);
    double total = 0.0;
    std::vector<double> recovered(4, 0.0);
    for (const auto& [idx, w] : support.terms) {
      CHECK(w >= 0.0);
      total += w;
      auto vertex = grid.point(idx);
      for (int t = 0; t < 4; ++t) recovered[t] += w * vertex[t];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    for (int t = 0; t < 4; ++t) CHECK(recovered[t] == doctest::Approx(mu[t]).epsilon(1e-9));
  }
}

TEST_CASE("adjacent pairs are unit moves") {
  SimplexGrid grid(3, 6);
  const auto& pairs = grid.adjacent_pairs();
  CHECK(!pairs.empty());
  for (const auto& [i, j] : pairs) {
    auto a = grid.composition(i);
    auto b = grid.composition(j);
    int moved = 0;
    for (int t = 0; t < 3; ++t) moved += std::abs(a[t] - b[t]);
    CHECK(moved == 2);
  }
}
