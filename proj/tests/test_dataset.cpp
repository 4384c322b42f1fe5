#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "isotone/dataset.hpp"

TEST_CASE("tied covariate values pool into one knot", "[dataset]") {
  const auto ds = isotone::build_dataset({1.0, 2.0}, {{0.5, 0.5}});
  REQUIRE(ds.orders[0].knot_count() == 1);
  REQUIRE(ds.orders[0].knots[0] == 0.5);
  REQUIRE(ds.orders[0].weights[0] == 2.0);
  REQUIRE(ds.orders[0].members[0] == std::vector<int>{0, 1});
}

TEST_CASE("distinct covariate values get unit weights", "[dataset]") {
  const auto ds = isotone::build_dataset({1.0, 2.0, 3.0}, {{0.3, 0.1, 0.2}});
  REQUIRE(ds.orders[0].knots == std::vector<double>{0.1, 0.2, 0.3});
  REQUIRE(ds.orders[0].weights == std::vector<double>{1.0, 1.0, 1.0});
  REQUIRE(ds.orders[0].knot_of == std::vector<int>{2, 0, 1});
}

TEST_CASE("partial ties keep member lists in row order", "[dataset]") {
  const auto ds = isotone::build_dataset({1.0, 2.0, 3.0}, {{2.0, 1.0, 2.0}});
  const auto& ord = ds.orders[0];
  REQUIRE(ord.knots == std::vector<double>{1.0, 2.0});
  REQUIRE(ord.weights == std::vector<double>{1.0, 2.0});
  REQUIRE(ord.members[0] == std::vector<int>{1});
  REQUIRE(ord.members[1] == std::vector<int>{0, 2});
}

TEST_CASE("dataset validation", "[dataset]") {
  REQUIRE_THROWS_AS(isotone::build_dataset({}, {{}}), std::invalid_argument);
  REQUIRE_THROWS_AS(isotone::build_dataset({1.0}, {}), std::invalid_argument);
  REQUIRE_THROWS_AS(isotone::build_dataset({1.0, 2.0}, {{0.5}}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(
      isotone::build_dataset({1.0, std::nan("")}, {{0.5, 0.6}}),
      std::invalid_argument);
  REQUIRE_THROWS_AS(
      isotone::build_dataset({1.0, 2.0},
                             {{0.5, std::numeric_limits<double>::infinity()}}),
      std::invalid_argument);
}

TEST_CASE("order structure partitions the rows", "[dataset]") {
  std::mt19937 gen(411);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::bernoulli_distribution coarse(0.5);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + (gen() % 40);
    std::vector<double> y(n), x1(n), x2(n);
    for (int i = 0; i < n; ++i) {
      y[i] = unif(gen);
      x1[i] = unif(gen);
      // rounding makes repeated values likely
      x2[i] = coarse(gen) ? std::round(unif(gen) * 5.0) / 5.0 : unif(gen);
    }
    const auto ds = isotone::build_dataset(y, {x1, x2});
    for (const auto& ord : ds.orders) {
      double total = 0.0;
      std::vector<char> seen(n, 0);
      for (std::size_t k = 0; k < ord.knot_count(); ++k) {
        total += ord.weights[k];
        REQUIRE(ord.weights[k] == static_cast<double>(ord.members[k].size()));
        for (int row : ord.members[k]) {
          REQUIRE(!seen[row]);
          seen[row] = 1;
          REQUIRE(ord.knot_of[row] == static_cast<int>(k));
        }
        if (k > 0) REQUIRE(ord.knots[k] > ord.knots[k - 1]);
      }
      REQUIRE(total == static_cast<double>(n));
    }
  }
}
