#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "priorvqa/error.hpp"

namespace priorvqa {

namespace detail {

inline void check_pair(std::span<const double> x, std::span<const double> y,
                       const char* what) {
  if (x.size() != y.size()) {
    throw DimensionError(std::string(what) + ": lengths " + std::to_string(x.size()) +
                         " and " + std::to_string(y.size()) + " differ");
  }
  if (x.size() < 2) throw DimensionError(std::string(what) + " needs n >= 2");
}

}  // namespace detail

// Sample Pearson correlation, clamped into [-1, 1] against rounding.
inline double pearson_lcc(std::span<const double> x, std::span<const double> y) {
  detail::check_pair(x, y, "pearson_lcc");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw DegenerateVarianceError("pearson_lcc: an input has zero variance");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// 1-based ranks; tied values share the mean of the ranks they span.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i + 1;
    while (j < order.size() && v[order[j]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + 1 + j);  // mean of i+1 .. j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

inline double spearman_srocc(std::span<const double> x, std::span<const double> y) {
  detail::check_pair(x, y, "spearman_srocc");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  try {
    return pearson_lcc(rx, ry);
  } catch (const DegenerateVarianceError&) {
    throw DegenerateVarianceError("spearman_srocc: an input is all ties");
  }
}

}  // namespace priorvqa
