#pragma once

// Observation container for additive fitting: response, covariate columns,
// and per-covariate sorted knot structure with ties pooled.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace isotone {

// Sorted unique values of one covariate column. members[k] lists the
// observation rows sitting at knot k; weights[k] is their count.
struct CovariateOrder {
  std::vector<double> knots;
  std::vector<double> weights;
  std::vector<std::vector<int>> members;
  std::vector<int> knot_of;  // row -> knot index

  std::size_t knot_count() const { return knots.size(); }
};

struct Dataset {
  std::vector<double> y;
  std::vector<std::vector<double>> x;  // column-major: x[j][i]
  std::vector<CovariateOrder> orders;

  std::size_t n() const { return y.size(); }
  std::size_t d() const { return x.size(); }
};

inline CovariateOrder build_order(const std::vector<double>& column) {
  const std::size_t n = column.size();
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return column[a] < column[b]; });
  CovariateOrder ord;
  ord.knot_of.assign(n, -1);
  std::size_t p = 0;
  while (p < n) {
    std::size_t q = p;
    while (q < n && column[idx[q]] == column[idx[p]]) ++q;
    ord.knots.push_back(column[idx[p]]);
    ord.weights.push_back(static_cast<double>(q - p));
    ord.members.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(p),
                             idx.begin() + static_cast<std::ptrdiff_t>(q));
    const int knot = static_cast<int>(ord.knots.size()) - 1;
    for (std::size_t r = p; r < q; ++r) ord.knot_of[idx[r]] = knot;
    p = q;
  }
  return ord;
}

inline Dataset build_dataset(std::vector<double> y,
                             std::vector<std::vector<double>> x_columns) {
  if (y.empty()) throw std::invalid_argument("isotone: empty response");
  if (x_columns.empty()) throw std::invalid_argument("isotone: no covariates");
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i])) {
      throw std::invalid_argument("isotone: non-finite response at row " +
                                  std::to_string(i));
    }
  }
  for (std::size_t j = 0; j < x_columns.size(); ++j) {
    if (x_columns[j].size() != y.size()) {
      throw std::invalid_argument("isotone: covariate " + std::to_string(j) +
                                  " length does not match response");
    }
    for (std::size_t i = 0; i < x_columns[j].size(); ++i) {
      if (!std::isfinite(x_columns[j][i])) {
        throw std::invalid_argument("isotone: non-finite covariate " +
                                    std::to_string(j) + " at row " +
                                    std::to_string(i));
      }
    }
  }
  Dataset ds;
  ds.y = std::move(y);
  ds.x = std::move(x_columns);
  ds.orders.reserve(ds.x.size());
  for (const auto& col : ds.x) ds.orders.push_back(build_order(col));
  return ds;
}

// Population standard deviation of the response; scale for tolerances.
inline double response_sd(const Dataset& ds) {
  const std::size_t n = ds.n();
  double mean = 0.0;
  for (double v : ds.y) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : ds.y) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(n));
}

}  // namespace isotone
