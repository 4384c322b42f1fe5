#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "isotone/backfit.hpp"
#include "isotone/dataset.hpp"
#include "isotone/oracle.hpp"
#include "isotone/pava.hpp"

using isotone::AdditiveFit;
using isotone::Dataset;
using isotone::OracleSpec;

namespace {

Dataset random_dataset(std::mt19937& gen, int n, int d) {
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::bernoulli_distribution tie(0.3);
  std::vector<double> y(n);
  std::vector<std::vector<double>> x(d, std::vector<double>(n));
  for (int i = 0; i < n; ++i) {
    y[i] = noise(gen);
    for (int j = 0; j < d; ++j) {
      double v = unif(gen);
      if (tie(gen)) v = std::round(v * 4.0) / 4.0;
      x[j][i] = v;
    }
  }
  return isotone::build_dataset(std::move(y), std::move(x));
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double sup = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sup = std::max(sup, std::abs(a[i] - b[i]));
  }
  return sup;
}

}  // namespace

TEST_CASE("oracle estimator with nothing known is plain pava", "[oracle]") {
  std::mt19937 gen(17);
  const Dataset ds = random_dataset(gen, 30, 2);
  OracleSpec spec;
  spec.target = 0;
  spec.known.resize(2);
  spec.known[1] = [](double) { return 0.0; };
  const auto est = isotone::oracle_estimator(ds, spec);

  const auto levels = isotone::project_isotone(ds, 0, ds.y);
  for (std::size_t k = 0; k < levels.size(); ++k) {
    REQUIRE_THAT(est.component.levels[k] + est.c,
                 Catch::Matchers::WithinAbs(levels[k], 1e-12));
  }
}

TEST_CASE("oracle estimator recovers a noiseless monotone component",
          "[oracle]") {
  std::mt19937 gen(29);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const int n = 40;
  std::vector<double> x1(n), x2(n), y(n);
  const auto m1 = [](double x) { return std::atan(3.0 * x); };
  const auto m2 = [](double x) { return 0.5 * x; };
  for (int i = 0; i < n; ++i) {
    x1[i] = unif(gen);
    x2[i] = unif(gen);
    y[i] = m1(x1[i]) + m2(x2[i]);
  }
  const auto ds = isotone::build_dataset(y, {x1, x2});
  OracleSpec spec;
  spec.target = 0;
  spec.known.resize(2);
  spec.known[1] = m2;
  const auto est = isotone::oracle_estimator(ds, spec);
  for (int i = 0; i < n; ++i) {
    REQUIRE_THAT(isotone::evaluate(est.component, x1[i]) + est.c,
                 Catch::Matchers::WithinAbs(m1(x1[i]), 1e-12));
  }
}

TEST_CASE("oracle estimator input validation", "[oracle]") {
  std::mt19937 gen(31);
  const Dataset ds = random_dataset(gen, 10, 2);
  OracleSpec spec;
  spec.target = 0;
  spec.known.resize(2);  // missing known component 1
  REQUIRE_THROWS_AS(isotone::oracle_estimator(ds, spec), std::invalid_argument);
  spec.known[1] = [](double) { return std::nan(""); };
  REQUIRE_THROWS_AS(isotone::oracle_estimator(ds, spec), std::runtime_error);
  spec.target = 5;
  REQUIRE_THROWS_AS(isotone::oracle_estimator(ds, spec), std::invalid_argument);
}

TEST_CASE("nnls reference with one covariate equals pava", "[oracle][nnls]") {
  std::mt19937 gen(47);
  const Dataset ds = random_dataset(gen, 60, 1);
  const auto ref = isotone::nnls_reference_fit(ds, 1e-10);
  REQUIRE(ref.converged);
  const auto levels = isotone::project_isotone(ds, 0, ds.y);
  std::vector<double> pooled(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i) {
    pooled[i] = levels[ds.orders[0].knot_of[i]];
  }
  REQUIRE(sup_diff(ref.fitted_sum, pooled) < 1e-6);
}

TEST_CASE("nnls reference solves the two-point crossed design",
          "[oracle][nnls]") {
  const auto ds = isotone::build_dataset({0.0, 2.0}, {{0.0, 1.0}, {1.0, 0.0}});
  const auto ref = isotone::nnls_reference_fit(ds, 1e-10);
  REQUIRE(ref.converged);
  REQUIRE_THAT(ref.fitted_sum[0], Catch::Matchers::WithinAbs(0.0, 1e-9));
  REQUIRE_THAT(ref.fitted_sum[1], Catch::Matchers::WithinAbs(2.0, 1e-9));
  double obj = 0.0;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    obj += (ds.y[i] - ref.fitted_sum[i]) * (ds.y[i] - ref.fitted_sum[i]);
  }
  REQUIRE(obj < 1e-18);
}

TEST_CASE("backfit and nnls reference agree on the joint projection",
          "[oracle][nnls]") {
  std::mt19937 gen(613);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 8 + static_cast<int>(gen() % 18);
    const int d = 2 + static_cast<int>(gen() % 2);
    const Dataset ds = random_dataset(gen, n, d);

    isotone::FitConfig cfg;
    cfg.tol = 1e-10 * std::max(isotone::response_sd(ds), 1e-6);
    cfg.max_cycles = 20000;
    const AdditiveFit fit = isotone::backfit(ds, cfg);
    const auto ref = isotone::nnls_reference_fit(ds, 1e-10);

    const auto fitted = isotone::fitted_values(fit, ds);
    REQUIRE(sup_diff(fitted, ref.fitted_sum) < 1e-6);

    // objective sandwich: the reference solves the same projection
    double obj_fit = 0.0, obj_ref = 0.0;
    for (std::size_t i = 0; i < ds.n(); ++i) {
      obj_fit += (ds.y[i] - fitted[i]) * (ds.y[i] - fitted[i]);
      obj_ref += (ds.y[i] - ref.fitted_sum[i]) * (ds.y[i] - ref.fitted_sum[i]);
    }
    const double scale2 = std::pow(std::max(isotone::response_sd(ds), 1e-6), 2);
    REQUIRE(obj_fit >= obj_ref - 1e-9 * scale2);
    REQUIRE(obj_fit - obj_ref < 1e-6 * scale2);

    const auto kkt = isotone::kkt_fixed_point_check(ds, fit, 1e-6);
    REQUIRE(kkt.pass);
  }
}

TEST_CASE("kkt certificate accepts pava and rejects perturbations",
          "[oracle][kkt]") {
  std::mt19937 gen(1001);
  const Dataset ds = random_dataset(gen, 30, 1);
  const auto levels = isotone::project_isotone(ds, 0, ds.y);

  const auto good = isotone::kkt_fixed_point_check(ds, {levels}, 1e-12);
  REQUIRE(good.pass);
  REQUIRE(good.max_violation <= 1e-12);

  auto bumped = levels;
  for (auto& v : bumped) v += 0.0;  // copy
  bumped.back() += 0.1;
  const auto bad = isotone::kkt_fixed_point_check(ds, {bumped}, 1e-3);
  REQUIRE_FALSE(bad.pass);
  REQUIRE(bad.max_violation > 1e-3);
}

TEST_CASE("kkt certificate rejects non-monotone input", "[oracle][kkt]") {
  const auto ds = isotone::build_dataset({1.0, 2.0, 3.0}, {{0.1, 0.2, 0.3}});
  REQUIRE_THROWS_AS(
      isotone::kkt_fixed_point_check(ds, {{1.0, 0.5, 2.0}}, 1e-6),
      std::invalid_argument);
  const std::vector<std::vector<double>> empty;
  REQUIRE_THROWS_AS(isotone::kkt_fixed_point_check(ds, empty, 1e-6),
                    std::invalid_argument);
}
