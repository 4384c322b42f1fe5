#pragma once

// Cyclic isotone backfitting for additive monotone models: block updates via
// weighted PAVA on partial residuals, objective tracking, a sup-norm
// stopping rule on the fitted sum, and optional residual history that exposes
// the dual (Dykstra-style) view of the iteration.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "isotone/dataset.hpp"
#include "isotone/pava.hpp"

namespace isotone {

struct FitConfig {
  // Sup-norm change of the fitted sum over one full cycle below which the
  // iteration stops. Nonpositive means automatic: 1e-8 * sd(y).
  double tol = 0.0;
  int max_cycles = 500;
  // Retain the residual vector after every block update (memory O(r*d*n)).
  bool keep_history = false;
};

inline double resolve_tol(const FitConfig& cfg, const Dataset& ds) {
  if (cfg.tol > 0.0) return cfg.tol;
  const double sd = response_sd(ds);
  return 1e-8 * (sd > 0.0 ? sd : 1.0);
}

// Component iterates during backfitting: g[j][k] is the value of component j
// at knot k of covariate j.
struct BackfitState {
  std::vector<std::vector<double>> g;
  int cycle = 0;
  std::vector<double> objective_history;
  double last_sum_change = std::numeric_limits<double>::infinity();
};

// Residuals y - sum_j g_j recorded after every block update, in update
// order: entry (r-1)*d + j holds the residual after block j of cycle r.
struct BackfitHistory {
  int d = 0;
  std::vector<std::vector<double>> residuals;
};

struct ConvergenceReport {
  int cycles = 0;
  double last_sum_change = 0.0;
  std::vector<double> objective_history;
  int monotone_decrease_violations = 0;
};

struct AdditiveFit {
  double c_hat = 0.0;
  std::vector<IsotonicFit> components;  // centered: weighted mean zero
  int n_cycles = 0;
  bool converged = false;
  double final_objective = 0.0;
  double last_sum_change = 0.0;
  std::vector<double> objective_history;
  int monotone_decrease_violations = 0;
  std::optional<BackfitHistory> history;
};

// Mean of v over the rows pooled at each knot of covariate j.
inline std::vector<double> knot_means(const Dataset& ds, int j,
                                      const std::vector<double>& v) {
  const CovariateOrder& ord = ds.orders[static_cast<std::size_t>(j)];
  std::vector<double> means(ord.knot_count());
  for (std::size_t k = 0; k < ord.knot_count(); ++k) {
    double sum = 0.0;
    for (int row : ord.members[k]) sum += v[static_cast<std::size_t>(row)];
    means[k] = sum / ord.weights[k];
  }
  return means;
}

// Least squares projection of an observation-indexed vector onto the cone of
// functions monotone in covariate j: pooled knot means, then weighted PAVA.
// Returns per-knot levels.
inline std::vector<double> project_isotone(const Dataset& ds, int j,
                                           const std::vector<double>& v) {
  const CovariateOrder& ord = ds.orders[static_cast<std::size_t>(j)];
  return pava(WeightedSeries{knot_means(ds, j, v), ord.weights});
}

inline BackfitState make_initial_state(const Dataset& ds) {
  BackfitState state;
  state.g.resize(ds.d());
  for (std::size_t j = 0; j < ds.d(); ++j) {
    state.g[j].assign(ds.orders[j].knot_count(), 0.0);
  }
  double ss = 0.0;
  for (double v : ds.y) ss += v * v;
  state.objective_history.push_back(ss);
  return state;
}

inline double objective(const Dataset& ds,
                        const std::vector<std::vector<double>>& g) {
  if (g.size() != ds.d()) {
    throw std::invalid_argument("isotone: component count mismatch");
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    double r = ds.y[i];
    for (std::size_t j = 0; j < ds.d(); ++j) {
      r -= g[j][static_cast<std::size_t>(ds.orders[j].knot_of[i])];
    }
    ss += r * r;
  }
  return ss;
}

// One cycle step: replaces g_j by the isotone projection of the partial
// residuals y - sum_{l != j} g_l and appends the new objective value.
inline void backfit_block_update(BackfitState& state, const Dataset& ds,
                                 int j) {
  if (j < 0 || static_cast<std::size_t>(j) >= ds.d()) {
    throw std::out_of_range("isotone: covariate index out of range");
  }
  std::vector<double> resid = ds.y;
  for (std::size_t l = 0; l < ds.d(); ++l) {
    if (l == static_cast<std::size_t>(j)) continue;
    const auto& knot_of = ds.orders[l].knot_of;
    const auto& gl = state.g[l];
    for (std::size_t i = 0; i < resid.size(); ++i) {
      resid[i] -= gl[static_cast<std::size_t>(knot_of[i])];
    }
  }
  state.g[static_cast<std::size_t>(j)] = project_isotone(ds, j, resid);
  state.objective_history.push_back(objective(ds, state.g));
}

namespace detail {

inline std::vector<double> residual_vector(
    const Dataset& ds, const std::vector<std::vector<double>>& g) {
  std::vector<double> r = ds.y;
  for (std::size_t j = 0; j < ds.d(); ++j) {
    const auto& knot_of = ds.orders[j].knot_of;
    const auto& gj = g[j];
    for (std::size_t i = 0; i < r.size(); ++i) {
      r[i] -= gj[static_cast<std::size_t>(knot_of[i])];
    }
  }
  return r;
}

inline int count_objective_violations(const std::vector<double>& history,
                                      double scale2) {
  int violations = 0;
  for (std::size_t i = 1; i < history.size(); ++i) {
    if (history[i] > history[i - 1] + 1e-9 * scale2) ++violations;
  }
  return violations;
}

}  // namespace detail

// Fits the additive isotone model by cycling block updates from zero until
// the fitted sum moves less than tol over a full cycle, then centers every
// component and collects the constants into c_hat.
//
// n_cycles counts cycles that moved the fitted sum by at least tol; the final
// cycle that detects convergence is not counted.
inline AdditiveFit backfit(const Dataset& ds, const FitConfig& cfg = {}) {
  if (cfg.max_cycles < 1) {
    throw std::invalid_argument("isotone: max_cycles must be >= 1");
  }
  const double tol = resolve_tol(cfg, ds);
  const int d = static_cast<int>(ds.d());

  BackfitState state = make_initial_state(ds);
  BackfitHistory history;
  history.d = d;

  std::vector<double> prev_fit(ds.n(), 0.0);
  bool converged = false;
  int effective_cycles = 0;

  for (int r = 1; r <= cfg.max_cycles; ++r) {
    for (int j = 0; j < d; ++j) {
      backfit_block_update(state, ds, j);
      if (cfg.keep_history) {
        history.residuals.push_back(detail::residual_vector(ds, state.g));
      }
    }
    state.cycle = r;
    std::vector<double> resid = detail::residual_vector(ds, state.g);
    double change = 0.0;
    for (std::size_t i = 0; i < resid.size(); ++i) {
      change = std::max(change, std::abs((ds.y[i] - resid[i]) - prev_fit[i]));
    }
    state.last_sum_change = change;
    if (change < tol) {
      converged = true;
      break;
    }
    effective_cycles = r;
    for (std::size_t i = 0; i < resid.size(); ++i) {
      prev_fit[i] = ds.y[i] - resid[i];
    }
  }

  AdditiveFit fit;
  fit.converged = converged;
  fit.n_cycles = converged ? effective_cycles : cfg.max_cycles;
  fit.last_sum_change = state.last_sum_change;
  fit.final_objective = state.objective_history.back();
  fit.objective_history = std::move(state.objective_history);
  const double sd = response_sd(ds);
  const double scale2 = (sd > 0.0 ? sd * sd : 1.0);
  fit.monotone_decrease_violations =
      detail::count_objective_violations(fit.objective_history, scale2);

  fit.components.reserve(ds.d());
  for (std::size_t j = 0; j < ds.d(); ++j) {
    IsotonicFit raw;
    raw.knots = ds.orders[j].knots;
    raw.levels = std::move(state.g[j]);
    raw.block_weights = ds.orders[j].weights;
    auto [centered, c] = center(raw);
    fit.components.push_back(std::move(centered));
    fit.c_hat += c;
  }
  if (cfg.keep_history) fit.history = std::move(history);
  return fit;
}

inline ConvergenceReport convergence_report(const AdditiveFit& fit) {
  ConvergenceReport rep;
  rep.cycles = fit.n_cycles;
  rep.last_sum_change = fit.last_sum_change;
  rep.objective_history = fit.objective_history;
  rep.monotone_decrease_violations = fit.monotone_decrease_violations;
  return rep;
}

// Residual after block k (0-based) of cycle r (1-based): y minus the
// components with blocks <= k at cycle r and the rest at cycle r-1. For r=1
// this equals the composition of the dual projections (identity minus
// isotone projection) applied through block k.
inline const std::vector<double>& dykstra_residual(const BackfitHistory& h,
                                                   int r, int k) {
  if (r < 1 || k < 0 || k >= h.d) {
    throw std::out_of_range("isotone: dykstra residual index out of range");
  }
  const std::size_t entry =
      static_cast<std::size_t>(r - 1) * static_cast<std::size_t>(h.d) +
      static_cast<std::size_t>(k);
  if (entry >= h.residuals.size()) {
    throw std::out_of_range("isotone: history does not reach cycle " +
                            std::to_string(r));
  }
  return h.residuals[entry];
}

inline const std::vector<double>& dykstra_residual(const AdditiveFit& fit,
                                                   int r, int k) {
  if (!fit.history) {
    throw std::logic_error(
        "isotone: residual history not retained; set FitConfig.keep_history");
  }
  return dykstra_residual(*fit.history, r, k);
}

// Fitted value c_hat + sum_j component_j(x_j) at a covariate row.
inline double fitted_value(const AdditiveFit& fit,
                           const std::vector<double>& row) {
  if (row.size() != fit.components.size()) {
    throw std::invalid_argument("isotone: row dimension mismatch");
  }
  double v = fit.c_hat;
  for (std::size_t j = 0; j < row.size(); ++j) {
    v += evaluate(fit.components[j], row[j]);
  }
  return v;
}

inline std::vector<double> fitted_values(const AdditiveFit& fit,
                                         const Dataset& ds) {
  std::vector<double> out(ds.n(), fit.c_hat);
  for (std::size_t j = 0; j < ds.d(); ++j) {
    const auto& knot_of = ds.orders[j].knot_of;
    const auto& levels = fit.components[j].levels;
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] += levels[static_cast<std::size_t>(knot_of[i])];
    }
  }
  return out;
}

}  // namespace isotone
