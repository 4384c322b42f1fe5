#pragma once

// Seeded Monte Carlo harness: truncated bivariate normal designs, data
// generation for the two-component benchmark model, integrated squared error
// against the true curves, MISE experiments with backfitting-vs-oracle
// ratios, sup-difference scaling runs, and quantile curve bundles.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "isotone/backfit.hpp"
#include "isotone/dataset.hpp"
#include "isotone/oracle.hpp"
#include "isotone/pava.hpp"
#include "isotone/rng.hpp"

namespace isotone {

enum class ComponentTag { cubic, half_sine, step_plateau, custom };

// Monotone nondecreasing component function, closed form or user supplied.
struct ComponentFn {
  ComponentTag tag = ComponentTag::cubic;
  std::function<double(double)> fn;  // used when tag == custom

  double operator()(double x) const {
    switch (tag) {
      case ComponentTag::cubic:
        return x * x * x;
      case ComponentTag::half_sine:
        return std::sin(std::numbers::pi * x / 2.0);
      case ComponentTag::step_plateau:
        if (x < -0.5) return x;
        if (x < 0.0) return -0.5;
        if (x <= 0.5) return 0.5;
        return x;
      case ComponentTag::custom:
        if (!fn) throw std::logic_error("isotone: custom component unset");
        return fn(x);
    }
    throw std::logic_error("isotone: unknown component tag");
  }

  static ComponentFn cubic() { return {ComponentTag::cubic, {}}; }
  static ComponentFn half_sine() { return {ComponentTag::half_sine, {}}; }
  static ComponentFn step_plateau() { return {ComponentTag::step_plateau, {}}; }
  static ComponentFn custom(std::function<double(double)> f) {
    return {ComponentTag::custom, std::move(f)};
  }

  static ComponentFn from_name(const std::string& name) {
    if (name == "cubic") return cubic();
    if (name == "half_sine") return half_sine();
    if (name == "step_plateau") return step_plateau();
    throw std::invalid_argument("isotone: unknown component function '" +
                                name + "'");
  }

  std::string name() const {
    switch (tag) {
      case ComponentTag::cubic: return "cubic";
      case ComponentTag::half_sine: return "half_sine";
      case ComponentTag::step_plateau: return "step_plateau";
      case ComponentTag::custom: return "custom";
    }
    return "unknown";
  }
};

struct GridSpec {
  double lo = -0.95;
  double hi = 0.95;
  int points = 101;

  std::vector<double> values() const {
    if (points < 2 || !(hi > lo)) {
      throw std::invalid_argument("isotone: bad grid spec");
    }
    std::vector<double> g(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
      g[static_cast<std::size_t>(i)] =
          lo + (hi - lo) * static_cast<double>(i) /
                   static_cast<double>(points - 1);
    }
    return g;
  }
};

// Error measure the MISE experiments aggregate: the design's empirical
// measure (benchmark-table default) or the Lebesgue grid rule.
enum class IseMeasure { empirical, grid };

inline IseMeasure ise_measure_from_name(const std::string& name) {
  if (name == "empirical") return IseMeasure::empirical;
  if (name == "grid") return IseMeasure::grid;
  throw std::invalid_argument("isotone: unknown ise measure '" + name + "'");
}

struct SimConfig {
  int n = 200;
  double rho = 0.0;
  double noise_sd = 0.5;
  ComponentFn m1 = ComponentFn::cubic();
  ComponentFn m2 = ComponentFn::half_sine();
  int reps = 1000;
  std::uint64_t master_seed = 1;
  std::uint64_t stream = 0;
  double trunc_lo = -1.0;
  double trunc_hi = 1.0;
  GridSpec ise_grid{};
  IseMeasure ise_measure = IseMeasure::empirical;
  FitConfig fit{};
  int n_components = 2;  // 1 or 2; 1 drops m2 and the second covariate
};

namespace detail {

inline void check_sim_config(const SimConfig& cfg) {
  if (cfg.n < 10) throw std::invalid_argument("isotone: n must be >= 10");
  if (cfg.reps < 1) throw std::invalid_argument("isotone: reps must be >= 1");
  if (!(std::abs(cfg.rho) < 1.0)) {
    throw std::invalid_argument("isotone: |rho| must be < 1");
  }
  if (!(cfg.noise_sd >= 0.0)) {
    throw std::invalid_argument("isotone: noise_sd must be >= 0");
  }
  if (!(cfg.trunc_hi > cfg.trunc_lo)) {
    throw std::invalid_argument("isotone: empty truncation interval");
  }
  if (cfg.n_components != 1 && cfg.n_components != 2) {
    throw std::invalid_argument("isotone: n_components must be 1 or 2");
  }
}

}  // namespace detail

// Rejection sampling of standard bivariate normal pairs with correlation rho
// onto [lo, hi]^2. Throws once the running acceptance rate drops below 1e-4.
inline std::array<std::vector<double>, 2> sample_truncated_bvn(int n,
                                                               double rho,
                                                               double lo,
                                                               double hi,
                                                               Rng& rng) {
  if (!(std::abs(rho) < 1.0)) {
    throw std::invalid_argument("isotone: |rho| must be < 1");
  }
  const double slope = std::sqrt(1.0 - rho * rho);
  std::array<std::vector<double>, 2> out;
  out[0].resize(static_cast<std::size_t>(n));
  out[1].resize(static_cast<std::size_t>(n));
  long long proposals = 0;
  long long accepted = 0;
  for (int i = 0; i < n;) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    const double a = z1;
    const double b = rho * z1 + slope * z2;
    ++proposals;
    if (a >= lo && a <= hi && b >= lo && b <= hi) {
      out[0][static_cast<std::size_t>(i)] = a;
      out[1][static_cast<std::size_t>(i)] = b;
      ++accepted;
      ++i;
    }
    if (proposals >= 100000 && accepted * 10000 < proposals) {
      throw std::runtime_error(
          "isotone: truncated-normal acceptance rate below 1e-4");
    }
  }
  return out;
}

// One replication's dataset: covariates from the truncated design, response
// m1(x1) + m2(x2) + noise. Deterministic in (master_seed, stream, rep).
inline Dataset generate(const SimConfig& cfg, int rep) {
  detail::check_sim_config(cfg);
  Rng rng = Rng::stream(cfg.master_seed, cfg.stream,
                        static_cast<std::uint64_t>(rep));
  std::vector<std::vector<double>> x;
  if (cfg.n_components == 2) {
    auto cols = sample_truncated_bvn(cfg.n, cfg.rho, cfg.trunc_lo,
                                     cfg.trunc_hi, rng);
    x.push_back(std::move(cols[0]));
    x.push_back(std::move(cols[1]));
  } else {
    std::vector<double> col(static_cast<std::size_t>(cfg.n));
    long long proposals = 0;
    for (int i = 0; i < cfg.n;) {
      const double z = rng.normal();
      ++proposals;
      if (z >= cfg.trunc_lo && z <= cfg.trunc_hi) {
        col[static_cast<std::size_t>(i)] = z;
        ++i;
      }
      if (proposals >= 100000 && 10000LL * i < proposals) {
        throw std::runtime_error(
            "isotone: truncated-normal acceptance rate below 1e-4");
      }
    }
    x.push_back(std::move(col));
  }
  std::vector<double> y(static_cast<std::size_t>(cfg.n));
  for (int i = 0; i < cfg.n; ++i) {
    const std::size_t ii = static_cast<std::size_t>(i);
    double mean = cfg.m1(x[0][ii]);
    if (cfg.n_components == 2) mean += cfg.m2(x[1][ii]);
    y[ii] = mean + cfg.noise_sd * rng.normal();
  }
  return build_dataset(std::move(y), std::move(x));
}

// Integrated squared error of a fitted component against the truth on a
// grid: grid mean times interval length. Fit and truth are both centered by
// the fit's empirical measure (block weights at the knots), so the result
// compares shapes and ignores any constant split.
inline double ise(const IsotonicFit& fit, const ComponentFn& truth,
                  const GridSpec& grid) {
  double wsum = 0.0, fsum = 0.0, tsum = 0.0;
  for (std::size_t k = 0; k < fit.knots.size(); ++k) {
    wsum += fit.block_weights[k];
    fsum += fit.block_weights[k] * fit.levels[k];
    tsum += fit.block_weights[k] * truth(fit.knots[k]);
  }
  const double fmean = fsum / wsum;
  const double tmean = tsum / wsum;
  double acc = 0.0;
  const std::vector<double> xs = grid.values();
  for (double x : xs) {
    const double diff = (evaluate(fit, x) - fmean) - (truth(x) - tmean);
    acc += diff * diff;
  }
  return (grid.hi - grid.lo) * acc / static_cast<double>(xs.size());
}

// Squared error under the design's empirical measure: the weighted mean over
// the fit's knots of the squared centered difference, which equals averaging
// (fit - truth)^2 over the observations behind the fit. This is the measure
// the MISE experiments aggregate.
inline double empirical_ise(const IsotonicFit& fit, const ComponentFn& truth) {
  double wsum = 0.0, fsum = 0.0, tsum = 0.0;
  for (std::size_t k = 0; k < fit.knots.size(); ++k) {
    wsum += fit.block_weights[k];
    fsum += fit.block_weights[k] * fit.levels[k];
    tsum += fit.block_weights[k] * truth(fit.knots[k]);
  }
  const double fmean = fsum / wsum;
  const double tmean = tsum / wsum;
  double acc = 0.0;
  for (std::size_t k = 0; k < fit.knots.size(); ++k) {
    const double diff =
        (fit.levels[k] - fmean) - (truth(fit.knots[k]) - tmean);
    acc += fit.block_weights[k] * diff * diff;
  }
  return acc / wsum;
}

struct ComponentMise {
  double mise_backfit = 0.0;
  double mise_oracle = 0.0;
  double ratio = 0.0;  // backfit / oracle
  double se_backfit = 0.0;
  double se_oracle = 0.0;
  double se_ratio = 0.0;
};

struct MiseReport {
  ComponentMise m1;
  ComponentMise m2;
  int reps_completed = 0;
  int failures = 0;
  SimConfig config;
};

namespace detail {

// Mean/SE aggregation over paired per-rep ISE draws; the ratio SE comes from
// the delta method with the empirical covariance.
inline ComponentMise aggregate_mise(const std::vector<double>& backfit,
                                    const std::vector<double>& oracle) {
  const std::size_t m = backfit.size();
  ComponentMise out;
  double sb = 0.0, so = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sb += backfit[i];
    so += oracle[i];
  }
  const double mb = sb / static_cast<double>(m);
  const double mo = so / static_cast<double>(m);
  out.mise_backfit = mb;
  out.mise_oracle = mo;
  out.ratio = mb / mo;
  if (m > 1) {
    double vb = 0.0, vo = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      vb += (backfit[i] - mb) * (backfit[i] - mb);
      vo += (oracle[i] - mo) * (oracle[i] - mo);
      cov += (backfit[i] - mb) * (oracle[i] - mo);
    }
    const double denom = static_cast<double>(m - 1);
    vb /= denom;
    vo /= denom;
    cov /= denom;
    out.se_backfit = std::sqrt(vb / static_cast<double>(m));
    out.se_oracle = std::sqrt(vo / static_cast<double>(m));
    const double rel = vb / (mb * mb) + vo / (mo * mo) - 2.0 * cov / (mb * mo);
    out.se_ratio = std::abs(out.ratio) *
                   std::sqrt(std::max(0.0, rel) / static_cast<double>(m));
  }
  return out;
}

}  // namespace detail

// Full backfitting-vs-oracle MISE experiment for one setting. Replications
// are aggregated in rep order, so the report is identical however the reps
// were executed.
inline MiseReport mise_experiment(const SimConfig& cfg) {
  detail::check_sim_config(cfg);
  const auto component_ise = [&](const IsotonicFit& fit,
                                 const ComponentFn& truth) {
    if (cfg.ise_measure == IseMeasure::empirical) {
      return empirical_ise(fit, truth);
    }
    return ise(fit, truth, cfg.ise_grid);
  };
  std::vector<double> b1, o1, b2, o2;
  b1.reserve(static_cast<std::size_t>(cfg.reps));
  MiseReport report;
  report.config = cfg;
  for (int rep = 0; rep < cfg.reps; ++rep) {
    try {
      const Dataset ds = generate(cfg, rep);
      const AdditiveFit fit = backfit(ds, cfg.fit);

      OracleSpec spec1;
      spec1.target = 0;
      spec1.known.resize(ds.d());
      if (cfg.n_components == 2) spec1.known[1] = cfg.m2;
      const OracleEstimate or1 = oracle_estimator(ds, spec1);

      b1.push_back(component_ise(fit.components[0], cfg.m1));
      o1.push_back(component_ise(or1.component, cfg.m1));

      if (cfg.n_components == 2) {
        OracleSpec spec2;
        spec2.target = 1;
        spec2.known.resize(ds.d());
        spec2.known[0] = cfg.m1;
        const OracleEstimate or2 = oracle_estimator(ds, spec2);
        b2.push_back(component_ise(fit.components[1], cfg.m2));
        o2.push_back(component_ise(or2.component, cfg.m2));
      }
    } catch (const std::exception&) {
      ++report.failures;
    }
  }
  report.reps_completed = static_cast<int>(b1.size());
  if (!b1.empty()) report.m1 = detail::aggregate_mise(b1, o1);
  if (!b2.empty()) report.m2 = detail::aggregate_mise(b2, o2);
  return report;
}

struct OraclePropertyStat {
  int n = 0;
  int reps = 0;
  double median_sup = 0.0;
  double normalized_ratio = 0.0;  // median_sup / n^(-1/3)
};

namespace detail {

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  if (m % 2 == 1) return v[m / 2];
  return 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

}  // namespace detail

// Sup-difference between the backfit and oracle estimates of the first
// component over an interior grid, per sample size. The boundary trim is
// n^(-1/3) scaled by the support length, and the reported ratio divides the
// median sup by n^(-1/3). Each n gets its own stream (base stream + index).
inline std::vector<OraclePropertyStat> oracle_property_experiment(
    const std::vector<int>& ns, const SimConfig& base) {
  std::vector<OraclePropertyStat> stats;
  stats.reserve(ns.size());
  for (std::size_t idx = 0; idx < ns.size(); ++idx) {
    SimConfig cfg = base;
    cfg.n = ns[idx];
    cfg.stream = base.stream + idx;
    detail::check_sim_config(cfg);

    const double rate = std::pow(static_cast<double>(cfg.n), -1.0 / 3.0);
    const double margin = (cfg.trunc_hi - cfg.trunc_lo) * rate;
    GridSpec interior{cfg.trunc_lo + margin, cfg.trunc_hi - margin, 201};
    if (!(interior.hi > interior.lo)) {
      throw std::invalid_argument("isotone: interior trim leaves no grid");
    }
    const std::vector<double> xs = interior.values();

    std::vector<double> sups;
    sups.reserve(static_cast<std::size_t>(cfg.reps));
    for (int rep = 0; rep < cfg.reps; ++rep) {
      const Dataset ds = generate(cfg, rep);
      const AdditiveFit fit = backfit(ds, cfg.fit);
      OracleSpec spec;
      spec.target = 0;
      spec.known.resize(ds.d());
      if (cfg.n_components == 2) spec.known[1] = cfg.m2;
      const OracleEstimate orc = oracle_estimator(ds, spec);
      double sup = 0.0;
      for (double x : xs) {
        sup = std::max(sup, std::abs(evaluate(fit.components[0], x) -
                                     evaluate(orc.component, x)));
      }
      sups.push_back(sup);
    }
    OraclePropertyStat st;
    st.n = cfg.n;
    st.reps = cfg.reps;
    st.median_sup = detail::median_of(std::move(sups));
    st.normalized_ratio = st.median_sup / rate;
    stats.push_back(st);
  }
  return stats;
}

struct QuantileCurveEntry {
  double quantile = 0.0;
  int rep_index = 0;
  double l2_distance = 0.0;
  std::vector<double> backfit;
  std::vector<double> oracle;
  std::vector<double> truth;
};

struct QuantileCurves {
  std::vector<double> grid;
  std::vector<QuantileCurveEntry> entries;
};

// Runs reps, ranks them by the L2 distance between the backfit and oracle
// first-component curves, and emits the grid-evaluated curve triplets of the
// reps sitting at the requested quantile ranks.
inline QuantileCurves quantile_curves(const SimConfig& cfg,
                                      const std::vector<double>& quantiles) {
  detail::check_sim_config(cfg);
  for (double q : quantiles) {
    if (!(q > 0.0 && q < 1.0)) {
      throw std::invalid_argument("isotone: quantiles must lie in (0,1)");
    }
  }
  QuantileCurves out;
  out.grid = cfg.ise_grid.values();
  const double length = cfg.ise_grid.hi - cfg.ise_grid.lo;

  struct RepCurves {
    double l2 = 0.0;
    std::vector<double> backfit, oracle, truth;
  };
  std::vector<RepCurves> reps(static_cast<std::size_t>(cfg.reps));
  for (int rep = 0; rep < cfg.reps; ++rep) {
    const Dataset ds = generate(cfg, rep);
    const AdditiveFit fit = backfit(ds, cfg.fit);
    OracleSpec spec;
    spec.target = 0;
    spec.known.resize(ds.d());
    if (cfg.n_components == 2) spec.known[1] = cfg.m2;
    const OracleEstimate orc = oracle_estimator(ds, spec);

    const IsotonicFit& bf = fit.components[0];
    double wsum = 0.0, tsum = 0.0;
    for (std::size_t k = 0; k < bf.knots.size(); ++k) {
      wsum += bf.block_weights[k];
      tsum += bf.block_weights[k] * cfg.m1(bf.knots[k]);
    }
    const double tmean = tsum / wsum;

    RepCurves& rc = reps[static_cast<std::size_t>(rep)];
    rc.backfit.reserve(out.grid.size());
    double acc = 0.0;
    for (double x : out.grid) {
      const double b = evaluate(bf, x);
      const double o = evaluate(orc.component, x);
      rc.backfit.push_back(b);
      rc.oracle.push_back(o);
      rc.truth.push_back(cfg.m1(x) - tmean);
      acc += (b - o) * (b - o);
    }
    rc.l2 = std::sqrt(length * acc / static_cast<double>(out.grid.size()));
  }

  std::vector<int> order(static_cast<std::size_t>(cfg.reps));
  for (int i = 0; i < cfg.reps; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return reps[static_cast<std::size_t>(a)].l2 <
           reps[static_cast<std::size_t>(b)].l2;
  });

  for (double q : quantiles) {
    const int rank = static_cast<int>(
        std::lround(q * static_cast<double>(cfg.reps - 1)));
    const int rep = order[static_cast<std::size_t>(rank)];
    const RepCurves& rc = reps[static_cast<std::size_t>(rep)];
    QuantileCurveEntry entry;
    entry.quantile = q;
    entry.rep_index = rep;
    entry.l2_distance = rc.l2;
    entry.backfit = rc.backfit;
    entry.oracle = rc.oracle;
    entry.truth = rc.truth;
    out.entries.push_back(std::move(entry));
  }
  return out;
}

enum class TablePreset { table1, table2 };

inline TablePreset table_preset_from_name(const std::string& name) {
  if (name == "table1") return TablePreset::table1;
  if (name == "table2") return TablePreset::table2;
  throw std::invalid_argument("isotone: unknown table preset '" + name + "'");
}

struct TableSetting {
  int n;
  double rho;
};

inline const std::vector<TableSetting>& table_settings() {
  static const std::vector<TableSetting> settings = [] {
    std::vector<TableSetting> s;
    for (int n : {200, 400, 800}) {
      for (double rho : {0.0, 0.5, -0.5, 0.9, -0.9}) s.push_back({n, rho});
    }
    return s;
  }();
  return settings;
}

struct TableRow {
  int n = 0;
  double rho = 0.0;
  ComponentMise m1;
  ComponentMise m2;
  int reps_completed = 0;
  int failures = 0;
};

// One row per (n, rho) setting; row index doubles as the stream id, so every
// cell is reproducible in isolation.
inline std::vector<TableRow> reproduce_table(TablePreset preset, int reps,
                                             std::uint64_t master_seed,
                                             const FitConfig& fit = {}) {
  std::vector<TableRow> rows;
  const auto& settings = table_settings();
  rows.reserve(settings.size());
  for (std::size_t idx = 0; idx < settings.size(); ++idx) {
    SimConfig cfg;
    cfg.n = settings[idx].n;
    cfg.rho = settings[idx].rho;
    cfg.m1 = (preset == TablePreset::table1) ? ComponentFn::cubic()
                                             : ComponentFn::step_plateau();
    cfg.m2 = ComponentFn::half_sine();
    cfg.reps = reps;
    cfg.master_seed = master_seed;
    cfg.stream = idx;
    cfg.fit = fit;
    const MiseReport rep = mise_experiment(cfg);
    TableRow row;
    row.n = cfg.n;
    row.rho = cfg.rho;
    row.m1 = rep.m1;
    row.m2 = rep.m2;
    row.reps_completed = rep.reps_completed;
    row.failures = rep.failures;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace isotone
