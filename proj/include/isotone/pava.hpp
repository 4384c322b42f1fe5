#pragma once

// Weighted isotonic least squares on a single ordering: the PAVA production
// algorithm, a direct max-min reference solver, and monotone step-function
// fits with evaluation and centering.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace isotone {

// Ordered responses with positive weights. The caller supplies values already
// sorted by the covariate; weights carry tied-observation pooling.
struct WeightedSeries {
  std::vector<double> values;
  std::vector<double> weights;
};

inline WeightedSeries unit_series(std::vector<double> values) {
  WeightedSeries s;
  s.weights.assign(values.size(), 1.0);
  s.values = std::move(values);
  return s;
}

namespace detail {

inline void check_series(const WeightedSeries& s) {
  if (s.values.empty()) {
    throw std::invalid_argument("isotone: empty series");
  }
  if (s.weights.size() != s.values.size()) {
    throw std::invalid_argument("isotone: values/weights length mismatch");
  }
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    if (!std::isfinite(s.values[i])) {
      throw std::invalid_argument("isotone: non-finite value at index " +
                                  std::to_string(i));
    }
    if (!(s.weights[i] > 0.0) || !std::isfinite(s.weights[i])) {
      throw std::invalid_argument("isotone: nonpositive weight at index " +
                                  std::to_string(i));
    }
  }
}

}  // namespace detail

// Weighted isotonic least squares: the unique nondecreasing minimizer of
// sum_i w_i (y_i - g_i)^2, computed with a block-merging stack in O(k)
// amortized. Adjacent blocks pool while the left mean is >= the right mean;
// the comparison is exact, no epsilon.
inline std::vector<double> pava(const WeightedSeries& s) {
  detail::check_series(s);
  const std::size_t k = s.values.size();
  std::vector<double> wsum, wvsum;
  std::vector<std::size_t> count;
  wsum.reserve(k);
  wvsum.reserve(k);
  count.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    wsum.push_back(s.weights[i]);
    wvsum.push_back(s.weights[i] * s.values[i]);
    count.push_back(1);
    while (wsum.size() > 1) {
      const std::size_t b = wsum.size() - 1;
      if (wvsum[b - 1] / wsum[b - 1] < wvsum[b] / wsum[b]) break;
      wsum[b - 1] += wsum[b];
      wvsum[b - 1] += wvsum[b];
      count[b - 1] += count[b];
      wsum.pop_back();
      wvsum.pop_back();
      count.pop_back();
    }
  }
  std::vector<double> fit(k);
  std::size_t pos = 0;
  for (std::size_t b = 0; b < wsum.size(); ++b) {
    const double level = wvsum[b] / wsum[b];
    for (std::size_t j = 0; j < count[b]; ++j) fit[pos++] = level;
  }
  return fit;
}

// Direct evaluation of the max-min form: fit_i is the maximum over s <= i of
// the minimum over t >= i of the weighted mean of values s..t. Cubic in k;
// kept deliberately naive as the independent reference for pava.
inline std::vector<double> max_min_reference(const WeightedSeries& s) {
  detail::check_series(s);
  const std::size_t k = s.values.size();
  std::vector<double> cw(k + 1, 0.0), cwv(k + 1, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    cw[i + 1] = cw[i] + s.weights[i];
    cwv[i + 1] = cwv[i] + s.weights[i] * s.values[i];
  }
  std::vector<double> fit(k);
  for (std::size_t i = 0; i < k; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t lo = 0; lo <= i; ++lo) {
      double worst = std::numeric_limits<double>::infinity();
      for (std::size_t hi = i; hi < k; ++hi) {
        worst =
            std::min(worst, (cwv[hi + 1] - cwv[lo]) / (cw[hi + 1] - cw[lo]));
      }
      best = std::max(best, worst);
    }
    fit[i] = best;
  }
  return fit;
}

// Monotone step function on one covariate: strictly increasing knots,
// nondecreasing levels, and the pooled observation weight behind each knot.
struct IsotonicFit {
  std::vector<double> knots;
  std::vector<double> levels;
  std::vector<double> block_weights;

  std::size_t size() const { return knots.size(); }
};

// Left-block step rule: the level of the largest knot <= x, with constant
// extrapolation on both sides.
inline double evaluate(const IsotonicFit& fit, double x) {
  if (fit.knots.empty()) throw std::invalid_argument("isotone: empty fit");
  if (fit.levels.size() != fit.knots.size()) {
    throw std::invalid_argument("isotone: knots/levels length mismatch");
  }
  auto it = std::upper_bound(fit.knots.begin(), fit.knots.end(), x);
  if (it == fit.knots.begin()) return fit.levels.front();
  return fit.levels[static_cast<std::size_t>(it - fit.knots.begin()) - 1];
}

inline double weighted_level_mean(const IsotonicFit& fit) {
  if (fit.knots.empty()) throw std::invalid_argument("isotone: empty fit");
  double w = 0.0, wl = 0.0;
  for (std::size_t i = 0; i < fit.levels.size(); ++i) {
    w += fit.block_weights[i];
    wl += fit.block_weights[i] * fit.levels[i];
  }
  return wl / w;
}

// Splits a fit into a zero-weighted-mean part and its mean, so an additive
// model can carry constants separately from the shapes.
inline std::pair<IsotonicFit, double> center(const IsotonicFit& fit) {
  const double c = weighted_level_mean(fit);
  IsotonicFit out = fit;
  for (double& level : out.levels) level -= c;
  return {std::move(out), c};
}

}  // namespace isotone
