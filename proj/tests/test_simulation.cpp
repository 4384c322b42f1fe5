#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "isotone/rng.hpp"
#include "isotone/simulation.hpp"

using isotone::ComponentFn;
using isotone::GridSpec;
using isotone::Rng;
using isotone::SimConfig;

namespace {

// Correlation of the standard bivariate normal truncated to [-1,1]^2 by
// Simpson quadrature over the unnormalized density.
double truncated_corr_by_quadrature(double rho) {
  const int m = 200;  // intervals per axis
  const double h = 2.0 / m;
  const double inv = 1.0 / (2.0 * (1.0 - rho * rho));
  auto simpson_w = [&](int i) {
    if (i == 0 || i == m) return 1.0;
    return (i % 2 == 1) ? 4.0 : 2.0;
  };
  double z = 0.0, xy = 0.0, xx = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double x = -1.0 + i * h;
    for (int j = 0; j <= m; ++j) {
      const double y = -1.0 + j * h;
      const double w = simpson_w(i) * simpson_w(j);
      const double f = w * std::exp(-(x * x - 2.0 * rho * x * y + y * y) * inv);
      z += f;
      xy += f * x * y;
      xx += f * x * x;
    }
  }
  return (xy / z) / (xx / z);  // means vanish by symmetry
}

double empirical_corr(const std::vector<double>& a,
                      const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double va = 0.0, vb = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
    cov += (a[i] - ma) * (b[i] - mb);
  }
  return cov / std::sqrt(va * vb);
}

}  // namespace

TEST_CASE("component functions match their closed forms", "[simulation]") {
  const ComponentFn cubic = ComponentFn::cubic();
  REQUIRE_THAT(cubic(0.5), Catch::Matchers::WithinAbs(0.125, 1e-15));
  REQUIRE_THAT(cubic(-1.0), Catch::Matchers::WithinAbs(-1.0, 1e-15));

  const ComponentFn hs = ComponentFn::half_sine();
  REQUIRE_THAT(hs(1.0), Catch::Matchers::WithinAbs(1.0, 1e-15));
  REQUIRE_THAT(hs(-1.0), Catch::Matchers::WithinAbs(-1.0, 1e-15));
  REQUIRE_THAT(hs(0.0), Catch::Matchers::WithinAbs(0.0, 1e-15));

  const ComponentFn sp = ComponentFn::step_plateau();
  REQUIRE(sp(-0.8) == -0.8);
  REQUIRE(sp(-0.5) == -0.5);
  REQUIRE(sp(-0.2) == -0.5);
  REQUIRE(sp(0.0) == 0.5);
  REQUIRE(sp(0.3) == 0.5);
  REQUIRE(sp(0.5) == 0.5);
  REQUIRE(sp(0.8) == 0.8);

  // all three are nondecreasing on the support
  for (const ComponentFn& fn : {cubic, hs, sp}) {
    double prev = fn(-1.0);
    for (int i = 1; i <= 200; ++i) {
      const double x = -1.0 + 2.0 * i / 200.0;
      REQUIRE(fn(x) >= prev - 1e-15);
      prev = fn(x);
    }
  }

  REQUIRE(ComponentFn::from_name("cubic").tag == isotone::ComponentTag::cubic);
  REQUIRE_THROWS_AS(ComponentFn::from_name("quartic"), std::invalid_argument);
}

TEST_CASE("truncated sampling stays inside the box", "[simulation]") {
  Rng rng(7);
  const auto cols = isotone::sample_truncated_bvn(5000, 0.5, -1.0, 1.0, rng);
  for (int c = 0; c < 2; ++c) {
    for (double v : cols[c]) {
      REQUIRE(v >= -1.0);
      REQUIRE(v <= 1.0);
    }
  }
  REQUIRE_THROWS_AS(
      [] {
        Rng r(9);
        return isotone::sample_truncated_bvn(10, 1.0, -1.0, 1.0, r);
      }(),
      std::invalid_argument);
}

TEST_CASE("truncated sampling matches quadrature correlations",
          "[simulation]") {
  const int n = 100000;
  {
    Rng rng(123);
    const auto cols = isotone::sample_truncated_bvn(n, 0.0, -1.0, 1.0, rng);
    REQUIRE_THAT(empirical_corr(cols[0], cols[1]),
                 Catch::Matchers::WithinAbs(0.0, 0.01));
  }
  {
    Rng rng(456);
    const auto cols = isotone::sample_truncated_bvn(n, 0.9, -1.0, 1.0, rng);
    const double expected = truncated_corr_by_quadrature(0.9);
    REQUIRE_THAT(empirical_corr(cols[0], cols[1]),
                 Catch::Matchers::WithinAbs(expected, 0.02));
  }
}

TEST_CASE("generated data is exact without noise and reproducible",
          "[simulation]") {
  SimConfig cfg;
  cfg.n = 50;
  cfg.noise_sd = 0.0;
  const auto ds = isotone::generate(cfg, 3);
  for (std::size_t i = 0; i < ds.n(); ++i) {
    REQUIRE_THAT(ds.y[i],
                 Catch::Matchers::WithinAbs(
                     cfg.m1(ds.x[0][i]) + cfg.m2(ds.x[1][i]), 1e-15));
  }

  cfg.noise_sd = 0.5;
  const auto a = isotone::generate(cfg, 5);
  const auto b = isotone::generate(cfg, 5);
  REQUIRE(a.y == b.y);
  REQUIRE(a.x == b.x);
  const auto other = isotone::generate(cfg, 6);
  REQUIRE(a.y != other.y);
}

TEST_CASE("generated noise has the configured spread", "[simulation]") {
  SimConfig cfg;
  cfg.n = 100000;
  cfg.rho = 0.3;
  const auto ds = isotone::generate(cfg, 0);
  double ss = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const double e = ds.y[i] - cfg.m1(ds.x[0][i]) - cfg.m2(ds.x[1][i]);
    sum += e;
    ss += e * e;
  }
  const double n = static_cast<double>(ds.n());
  const double sd = std::sqrt(ss / n - (sum / n) * (sum / n));
  REQUIRE_THAT(sd, Catch::Matchers::WithinAbs(0.5, 0.005));
}

TEST_CASE("ise compares centered shapes on the grid", "[simulation]") {
  const GridSpec grid{};

  SECTION("perfect fit scores zero") {
    // step function equal to the centered truth at every grid point is not
    // generally possible; use a custom truth equal to the fit itself
    isotone::IsotonicFit fit;
    fit.knots = {-0.5, 0.5};
    fit.levels = {-1.0, 1.0};
    fit.block_weights = {1.0, 1.0};
    const ComponentFn truth = ComponentFn::custom(
        [fit](double x) { return isotone::evaluate(fit, x); });
    REQUIRE_THAT(isotone::ise(fit, truth, grid),
                 Catch::Matchers::WithinAbs(0.0, 1e-15));
  }

  SECTION("zero fit against the cubic matches direct quadrature") {
    isotone::IsotonicFit fit;
    fit.knots = {-0.5, 0.5};  // symmetric, so the odd truth centers to zero
    fit.levels = {0.0, 0.0};
    fit.block_weights = {1.0, 1.0};
    const double got = isotone::ise(fit, ComponentFn::cubic(), grid);

    double acc = 0.0;
    const auto xs = grid.values();
    for (double x : xs) acc += std::pow(x, 6.0);
    const double expected = 1.9 * acc / static_cast<double>(xs.size());
    REQUIRE_THAT(got, Catch::Matchers::WithinAbs(expected, 1e-15));

    // equal-weight endpoints make the grid rule overshoot a convex integrand
    const double exact = 2.0 * std::pow(0.95, 7.0) / 7.0;
    REQUIRE_THAT(got, Catch::Matchers::WithinRel(exact, 0.10));
  }

  SECTION("common shifts cancel") {
    isotone::IsotonicFit fit;
    fit.knots = {-0.7, 0.0, 0.4};
    fit.levels = {-0.3, 0.1, 0.8};
    fit.block_weights = {2.0, 1.0, 3.0};
    const double base = isotone::ise(fit, ComponentFn::cubic(), grid);

    isotone::IsotonicFit shifted = fit;
    for (double& v : shifted.levels) v += 5.0;
    const ComponentFn shifted_truth =
        ComponentFn::custom([](double x) { return x * x * x + 5.0; });
    REQUIRE_THAT(isotone::ise(shifted, shifted_truth, grid),
                 Catch::Matchers::WithinAbs(base, 1e-12));
    REQUIRE_THAT(isotone::ise(shifted, ComponentFn::cubic(), grid),
                 Catch::Matchers::WithinAbs(base, 1e-12));
  }
}

TEST_CASE("empirical ise averages squared error over the design",
          "[simulation]") {
  isotone::IsotonicFit fit;
  fit.knots = {0.0, 1.0};
  fit.levels = {0.0, 1.0};
  fit.block_weights = {1.0, 3.0};

  // truth equal to the fit at the knots scores zero regardless of shifts
  const ComponentFn same = ComponentFn::custom(
      [](double x) { return (x < 1.0) ? 0.0 : 1.0; });
  REQUIRE_THAT(isotone::empirical_ise(fit, same),
               Catch::Matchers::WithinAbs(0.0, 1e-15));
  const ComponentFn shifted = ComponentFn::custom(
      [](double x) { return (x < 1.0) ? 2.0 : 3.0; });
  REQUIRE_THAT(isotone::empirical_ise(fit, shifted),
               Catch::Matchers::WithinAbs(0.0, 1e-15));

  // hand computation: fit mean 3/4; truth {0, 2} has weighted mean 3/2;
  // centered diffs are (-3/4) - (-3/2) = 3/4 and (1/4) - (1/2) = -1/4
  const ComponentFn steep = ComponentFn::custom(
      [](double x) { return (x < 1.0) ? 0.0 : 2.0; });
  const double want = (1.0 * (0.75 * 0.75) + 3.0 * (0.25 * 0.25)) / 4.0;
  REQUIRE_THAT(isotone::empirical_ise(fit, steep),
               Catch::Matchers::WithinAbs(want, 1e-15));

  REQUIRE(isotone::ise_measure_from_name("empirical") ==
          isotone::IseMeasure::empirical);
  REQUIRE(isotone::ise_measure_from_name("grid") == isotone::IseMeasure::grid);
  REQUIRE_THROWS_AS(isotone::ise_measure_from_name("fancy"),
                    std::invalid_argument);
}

TEST_CASE("mise experiment aggregates and reproduces", "[simulation]") {
  SimConfig cfg;
  cfg.n = 50;
  cfg.reps = 3;
  cfg.master_seed = 2024;
  const auto rep = isotone::mise_experiment(cfg);
  REQUIRE(rep.reps_completed == 3);
  REQUIRE(rep.failures == 0);
  REQUIRE(rep.m1.mise_backfit > 0.0);
  REQUIRE(rep.m1.mise_oracle > 0.0);
  REQUIRE_THAT(rep.m1.ratio, Catch::Matchers::WithinAbs(
                                 rep.m1.mise_backfit / rep.m1.mise_oracle,
                                 1e-15));
  REQUIRE(rep.m2.se_backfit >= 0.0);

  const auto again = isotone::mise_experiment(cfg);
  REQUIRE(again.m1.mise_backfit == rep.m1.mise_backfit);
  REQUIRE(again.m2.mise_oracle == rep.m2.mise_oracle);
  REQUIRE(again.m1.se_ratio == rep.m1.se_ratio);
}

TEST_CASE("noise-free strictly monotone data drives both MISEs to zero",
          "[simulation]") {
  SimConfig cfg;
  cfg.n = 800;
  cfg.reps = 3;
  cfg.noise_sd = 0.0;
  cfg.master_seed = 4242;
  const auto rep = isotone::mise_experiment(cfg);
  REQUIRE(rep.failures == 0);
  REQUIRE(rep.m1.mise_backfit < 1e-3);
  REQUIRE(rep.m1.mise_oracle < 1e-3);
  REQUIRE(rep.m2.mise_backfit < 1e-3);
  REQUIRE(rep.m2.mise_oracle < 1e-3);
}

TEST_CASE("single-covariate sup difference is identically zero",
          "[simulation]") {
  SimConfig cfg;
  cfg.n_components = 1;
  cfg.n = 60;
  cfg.reps = 5;
  const auto stats = isotone::oracle_property_experiment({60}, cfg);
  REQUIRE(stats.size() == 1);
  REQUIRE(stats[0].median_sup == 0.0);
  REQUIRE(stats[0].normalized_ratio == 0.0);
}

TEST_CASE("oracle property experiment emits one stat per sample size",
          "[simulation]") {
  SimConfig cfg;
  cfg.reps = 3;
  const auto stats = isotone::oracle_property_experiment({50, 100}, cfg);
  REQUIRE(stats.size() == 2);
  REQUIRE(stats[0].n == 50);
  REQUIRE(stats[1].n == 100);
  for (const auto& st : stats) {
    REQUIRE(st.median_sup >= 0.0);
    REQUIRE(st.normalized_ratio ==
            st.median_sup / std::pow(static_cast<double>(st.n), -1.0 / 3.0));
  }
}

TEST_CASE("quantile curves with one rep reuse it for every quantile",
          "[simulation]") {
  SimConfig cfg;
  cfg.n = 40;
  cfg.reps = 1;
  const auto curves = isotone::quantile_curves(cfg, {0.25, 0.5, 0.75});
  REQUIRE(curves.entries.size() == 3);
  for (const auto& entry : curves.entries) {
    REQUIRE(entry.rep_index == 0);
    REQUIRE(entry.backfit == curves.entries[0].backfit);
  }

  // the emitted truth is the component centered by the rep's design weights
  const auto ds = isotone::generate(cfg, 0);
  const auto& ord = ds.orders[0];
  double tsum = 0.0, wsum = 0.0;
  for (std::size_t k = 0; k < ord.knot_count(); ++k) {
    tsum += ord.weights[k] * cfg.m1(ord.knots[k]);
    wsum += ord.weights[k];
  }
  const double tmean = tsum / wsum;
  for (std::size_t i = 0; i < curves.grid.size(); ++i) {
    REQUIRE_THAT(curves.entries[0].truth[i],
                 Catch::Matchers::WithinAbs(cfg.m1(curves.grid[i]) - tmean,
                                            1e-12));
  }

  REQUIRE_THROWS_AS(isotone::quantile_curves(cfg, {0.0}),
                    std::invalid_argument);
}

TEST_CASE("table presets cover the full settings grid", "[simulation]") {
  const auto& settings = isotone::table_settings();
  REQUIRE(settings.size() == 15);
  REQUIRE(settings[0].n == 200);
  REQUIRE(settings[0].rho == 0.0);
  REQUIRE(settings[14].n == 800);
  REQUIRE(settings[14].rho == -0.9);
  REQUIRE(isotone::table_preset_from_name("table1") ==
          isotone::TablePreset::table1);
  REQUIRE_THROWS_AS(isotone::table_preset_from_name("table3"),
                    std::invalid_argument);
}

TEST_CASE("simulation config validation", "[simulation]") {
  SimConfig cfg;
  cfg.n = 5;
  REQUIRE_THROWS_AS(isotone::generate(cfg, 0), std::invalid_argument);
  cfg.n = 50;
  cfg.rho = 1.0;
  REQUIRE_THROWS_AS(isotone::generate(cfg, 0), std::invalid_argument);
  cfg.rho = 0.0;
  cfg.n_components = 3;
  REQUIRE_THROWS_AS(isotone::generate(cfg, 0), std::invalid_argument);
}
