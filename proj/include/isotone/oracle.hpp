#pragma once

// Independent correctness references for the backfitting path: the oracle
// single-component estimator (all other components known), a joint-projection
// reference solver built on nonnegative least squares over step increments,
// and a blockwise fixed-point (KKT) certificate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "isotone/backfit.hpp"
#include "isotone/dataset.hpp"
#include "isotone/pava.hpp"

namespace isotone {

// Everything known except component `target`: callable true components for
// the other covariates plus the true constant.
struct OracleSpec {
  int target = 0;
  std::vector<std::function<double(double)>> known;  // size d; slot target unused
  double true_c = 0.0;
};

struct OracleEstimate {
  IsotonicFit component;  // centered
  double c = 0.0;
};

// Single-component isotonic least squares on oracle residuals
// y - true_c - sum_{l != target} m_l(x_l), pooled per knot of the target
// covariate and centered.
inline OracleEstimate oracle_estimator(const Dataset& ds,
                                       const OracleSpec& spec) {
  const std::size_t d = ds.d();
  if (spec.target < 0 || static_cast<std::size_t>(spec.target) >= d) {
    throw std::invalid_argument("isotone: oracle target out of range");
  }
  if (spec.known.size() != d) {
    throw std::invalid_argument("isotone: oracle spec needs one slot per covariate");
  }
  std::vector<double> resid(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i) {
    double r = ds.y[i] - spec.true_c;
    for (std::size_t l = 0; l < d; ++l) {
      if (l == static_cast<std::size_t>(spec.target)) continue;
      if (!spec.known[l]) {
        throw std::invalid_argument("isotone: missing true component " +
                                    std::to_string(l));
      }
      const double v = spec.known[l](ds.x[l][i]);
      if (!std::isfinite(v)) {
        throw std::runtime_error("isotone: true component " +
                                 std::to_string(l) +
                                 " evaluated to a non-finite value");
      }
      r -= v;
    }
    resid[i] = r;
  }
  const CovariateOrder& ord = ds.orders[static_cast<std::size_t>(spec.target)];
  IsotonicFit raw;
  raw.knots = ord.knots;
  raw.levels = project_isotone(ds, spec.target, resid);
  raw.block_weights = ord.weights;
  auto [centered, c] = center(raw);
  return OracleEstimate{std::move(centered), c};
}

namespace detail {

// Dense least squares on selected columns via Householder QR. Columns whose
// diagonal pivot collapses below rank_tol get a zero coefficient.
inline std::vector<double> qr_least_squares(
    const std::vector<std::vector<double>>& cols,
    const std::vector<int>& active, std::vector<double> rhs,
    double rank_tol) {
  const std::size_t n = rhs.size();
  const std::size_t p = active.size();
  std::vector<double> a(n * p);
  for (std::size_t c = 0; c < p; ++c) {
    const auto& col = cols[static_cast<std::size_t>(active[c])];
    for (std::size_t i = 0; i < n; ++i) a[c * n + i] = col[i];
  }
  std::vector<char> dependent(p, 0);
  std::vector<double> beta(p, 0.0);
  const std::size_t steps = std::min(n, p);
  for (std::size_t j = 0; j < steps; ++j) {
    double norm = 0.0;
    for (std::size_t i = j; i < n; ++i) norm += a[j * n + i] * a[j * n + i];
    norm = std::sqrt(norm);
    if (norm < rank_tol) {
      dependent[j] = 1;
      continue;
    }
    double head = a[j * n + j];
    const double alpha = (head >= 0.0) ? -norm : norm;
    std::vector<double> v(n - j);
    v[0] = head - alpha;
    for (std::size_t i = j + 1; i < n; ++i) v[i - j] = a[j * n + i];
    double vnorm2 = 0.0;
    for (double t : v) vnorm2 += t * t;
    if (vnorm2 <= 0.0) {
      dependent[j] = 1;
      continue;
    }
    a[j * n + j] = alpha;
    for (std::size_t i = j + 1; i < n; ++i) a[j * n + i] = 0.0;
    for (std::size_t c = j + 1; c < p; ++c) {
      double dot = 0.0;
      for (std::size_t i = j; i < n; ++i) dot += v[i - j] * a[c * n + i];
      const double f = 2.0 * dot / vnorm2;
      for (std::size_t i = j; i < n; ++i) a[c * n + i] -= f * v[i - j];
    }
    double dot = 0.0;
    for (std::size_t i = j; i < n; ++i) dot += v[i - j] * rhs[i];
    const double f = 2.0 * dot / vnorm2;
    for (std::size_t i = j; i < n; ++i) rhs[i] -= f * v[i - j];
  }
  for (std::size_t jj = steps; jj-- > 0;) {
    if (dependent[jj]) {
      beta[jj] = 0.0;
      continue;
    }
    double s = rhs[jj];
    for (std::size_t c = jj + 1; c < p; ++c) s -= a[c * n + jj] * beta[c];
    beta[jj] = s / a[jj * n + jj];
  }
  return beta;
}

struct NnlsSolve {
  std::vector<double> coef;
  int iterations = 0;
  bool converged = false;
  double max_gradient = 0.0;
};

// Lawson-Hanson active set: min ||A z - y||^2 subject to z >= 0.
inline NnlsSolve nnls_active_set(const std::vector<std::vector<double>>& cols,
                                 const std::vector<double>& y, double grad_tol,
                                 int max_iter) {
  const std::size_t p = cols.size();
  const std::size_t n = y.size();
  NnlsSolve out;
  out.coef.assign(p, 0.0);
  std::vector<char> passive(p, 0);
  std::vector<int> active_list;
  std::vector<double> resid = y;

  double col_scale = 0.0;
  for (const auto& col : cols) {
    double norm = 0.0;
    for (double v : col) norm += v * v;
    col_scale = std::max(col_scale, std::sqrt(norm));
  }
  const double rank_tol = 1e-11 * std::max(1.0, col_scale);

  int iter = 0;
  while (true) {
    double wmax = -std::numeric_limits<double>::infinity();
    int enter = -1;
    for (std::size_t j = 0; j < p; ++j) {
      if (passive[j]) continue;
      double w = 0.0;
      for (std::size_t i = 0; i < n; ++i) w += cols[j][i] * resid[i];
      if (w > wmax) {
        wmax = w;
        enter = static_cast<int>(j);
      }
    }
    out.max_gradient = (enter >= 0) ? wmax : 0.0;
    if (enter < 0 || wmax <= grad_tol) {
      out.converged = true;
      break;
    }
    if (++iter > max_iter) break;
    passive[static_cast<std::size_t>(enter)] = 1;
    active_list.push_back(enter);

    while (true) {
      std::vector<double> trial =
          qr_least_squares(cols, active_list, y, rank_tol);
      bool feasible = true;
      for (double t : trial) {
        if (t <= 0.0) {
          feasible = false;
          break;
        }
      }
      if (feasible) {
        for (std::size_t c = 0; c < active_list.size(); ++c) {
          out.coef[static_cast<std::size_t>(active_list[c])] = trial[c];
        }
        break;
      }
      double alpha = 1.0;
      for (std::size_t c = 0; c < active_list.size(); ++c) {
        if (trial[c] > 0.0) continue;
        const double z = out.coef[static_cast<std::size_t>(active_list[c])];
        const double denom = z - trial[c];
        if (denom > 0.0) alpha = std::min(alpha, z / denom);
      }
      std::vector<int> kept;
      for (std::size_t c = 0; c < active_list.size(); ++c) {
        const std::size_t j = static_cast<std::size_t>(active_list[c]);
        const double z = out.coef[j] + alpha * (trial[c] - out.coef[j]);
        if (trial[c] <= 0.0 && z <= rank_tol) {
          out.coef[j] = 0.0;
          passive[j] = 0;
        } else {
          out.coef[j] = z;
          kept.push_back(active_list[c]);
        }
      }
      active_list = std::move(kept);
      if (++iter > max_iter) break;
      if (active_list.empty()) break;
    }
    if (iter > max_iter) break;

    resid = y;
    for (int j : active_list) {
      const double z = out.coef[static_cast<std::size_t>(j)];
      const auto& col = cols[static_cast<std::size_t>(j)];
      for (std::size_t i = 0; i < n; ++i) resid[i] -= z * col[i];
    }
  }
  out.iterations = iter;
  return out;
}

}  // namespace detail

struct NnlsReferenceFit {
  std::vector<double> fitted_sum;       // length n
  std::vector<std::vector<double>> g;   // per covariate, per knot, base 0
  double intercept = 0.0;
  int iterations = 0;
  int attempts = 0;
  bool converged = false;
};

// Joint projection of y onto H_1 + ... + H_d by a route disjoint from
// PAVA/backfitting: each component is a base level plus nonnegative
// increments between consecutive knots, the shared base level is one free
// intercept (split into +/- columns), and the resulting NNLS problem is
// solved by the classic active-set method. Intended for small instances.
inline NnlsReferenceFit nnls_reference_fit(const Dataset& ds, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("isotone: tol must be > 0");
  const std::size_t n = ds.n();

  std::vector<std::vector<double>> cols;
  cols.emplace_back(n, 1.0);
  cols.emplace_back(n, -1.0);
  // (covariate, step index) behind each increment column
  std::vector<std::pair<int, int>> col_step;
  for (std::size_t j = 0; j < ds.d(); ++j) {
    const auto& ord = ds.orders[j];
    for (std::size_t k = 1; k < ord.knot_count(); ++k) {
      std::vector<double> col(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        if (ord.knot_of[i] >= static_cast<int>(k)) col[i] = 1.0;
      }
      cols.push_back(std::move(col));
      col_step.emplace_back(static_cast<int>(j), static_cast<int>(k));
    }
  }

  double grad_scale = 0.0;
  for (const auto& col : cols) {
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i) w += col[i] * ds.y[i];
    grad_scale = std::max(grad_scale, std::abs(w));
  }
  grad_scale = std::max(1.0, grad_scale);

  NnlsReferenceFit out;
  const int max_iter = 10 * static_cast<int>(cols.size()) + 50;
  detail::NnlsSolve solve;
  double eps = tol * grad_scale;
  for (int attempt = 0; attempt < 3; ++attempt) {
    out.attempts = attempt + 1;
    solve = detail::nnls_active_set(cols, ds.y, eps, max_iter);
    if (solve.converged) break;
    eps *= 32.0;  // jitter the stationarity tolerance and retry
  }
  out.converged = solve.converged;
  out.iterations = solve.iterations;
  if (!out.converged) {
    throw std::runtime_error(
        "isotone: nnls active-set cycling guard exceeded (max gradient " +
        std::to_string(solve.max_gradient) + ")");
  }

  out.intercept = solve.coef[0] - solve.coef[1];
  out.g.resize(ds.d());
  for (std::size_t j = 0; j < ds.d(); ++j) {
    out.g[j].assign(ds.orders[j].knot_count(), 0.0);
  }
  for (std::size_t c = 0; c < col_step.size(); ++c) {
    const auto [j, k] = col_step[c];
    out.g[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] +=
        solve.coef[c + 2];
  }
  for (auto& gj : out.g) {
    for (std::size_t k = 1; k < gj.size(); ++k) gj[k] += gj[k - 1];
  }
  out.fitted_sum.assign(n, out.intercept);
  for (std::size_t j = 0; j < ds.d(); ++j) {
    const auto& knot_of = ds.orders[j].knot_of;
    for (std::size_t i = 0; i < n; ++i) {
      out.fitted_sum[i] += out.g[j][static_cast<std::size_t>(knot_of[i])];
    }
  }
  return out;
}

struct KktReport {
  bool pass = false;
  double max_violation = 0.0;
};

// Blockwise stationarity certificate: for each j, re-projects the partial
// residuals y - offset - sum_{l != j} g_l onto covariate j's cone and
// reports the largest deviation from g_j. Passing certifies the fitted sum
// is the global joint projection.
inline KktReport kkt_fixed_point_check(const Dataset& ds,
                                       const std::vector<std::vector<double>>& g,
                                       double tol, double offset = 0.0) {
  if (g.size() != ds.d()) {
    throw std::invalid_argument("isotone: component count mismatch");
  }
  for (std::size_t j = 0; j < ds.d(); ++j) {
    if (g[j].size() != ds.orders[j].knot_count()) {
      throw std::invalid_argument("isotone: component " + std::to_string(j) +
                                  " knot count mismatch");
    }
    for (std::size_t k = 1; k < g[j].size(); ++k) {
      if (g[j][k] < g[j][k - 1]) {
        throw std::invalid_argument("isotone: component " + std::to_string(j) +
                                    " is not monotone");
      }
    }
  }
  KktReport rep;
  for (std::size_t j = 0; j < ds.d(); ++j) {
    std::vector<double> resid(ds.n());
    for (std::size_t i = 0; i < ds.n(); ++i) {
      double r = ds.y[i] - offset;
      for (std::size_t l = 0; l < ds.d(); ++l) {
        if (l == j) continue;
        r -= g[l][static_cast<std::size_t>(ds.orders[l].knot_of[i])];
      }
      resid[i] = r;
    }
    const std::vector<double> proj =
        project_isotone(ds, static_cast<int>(j), resid);
    for (std::size_t k = 0; k < proj.size(); ++k) {
      rep.max_violation =
          std::max(rep.max_violation, std::abs(proj[k] - g[j][k]));
    }
  }
  rep.pass = rep.max_violation <= tol;
  return rep;
}

inline KktReport kkt_fixed_point_check(const Dataset& ds,
                                       const AdditiveFit& fit, double tol) {
  std::vector<std::vector<double>> g;
  g.reserve(fit.components.size());
  for (const auto& comp : fit.components) g.push_back(comp.levels);
  return kkt_fixed_point_check(ds, g, tol, fit.c_hat);
}

}  // namespace isotone
