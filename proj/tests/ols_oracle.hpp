// SPDX-License-Identifier: Apache-2.0
//
// Brute-force least squares through the normal equations and Gauss-Jordan elimination,
// plus simulated processes with known coupling.
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "seq2graph/data.hpp"

namespace oracle {

// Residual sum of squares of y regressed on the columns of X (row-major n x k).
inline double rss(const std::vector<std::vector<double>>& X, const std::vector<double>& y) {
  const std::size_t n = X.size(), k = X.front().size();
  std::vector<std::vector<double>> a(k, std::vector<double>(k + 1, 0.0));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) a[i][j] += X[r][i] * X[r][j];
      a[i][k] += X[r][i] * y[r];
    }
  }
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < k; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    std::swap(a[col], a[pivot]);
    for (std::size_t r = 0; r < k; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= k; ++c) a[r][c] -= f * a[col][c];
    }
  }
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    double fit = 0.0;
    for (std::size_t i = 0; i < k; ++i) fit += X[r][i] * a[i][k] / a[i][i];
    total += (y[r] - fit) * (y[r] - fit);
  }
  return total;
}

// F statistic of adding `candidate` lags to the autoregression of `target`.
inline double granger_f(const seq2graph::data::TimeSeriesFrame& f, std::size_t target,
                        std::size_t candidate, std::size_t p) {
  std::vector<std::vector<double>> xr, xu;
  std::vector<double> y;
  for (std::size_t t = p; t < f.length(); ++t) {
    std::vector<double> r = {1.0};
    for (std::size_t l = 1; l <= p; ++l) r.push_back(f.at(t - l, target));
    std::vector<double> u = r;
    for (std::size_t l = 1; l <= p; ++l) u.push_back(f.at(t - l, candidate));
    xr.push_back(r);
    xu.push_back(u);
    y.push_back(f.at(t, target));
  }
  const double n = static_cast<double>(y.size());
  const double rr = rss(xr, y), ru = rss(xu, y);
  return ((rr - ru) / static_cast<double>(p)) / (ru / (n - 2.0 * p - 1.0));
}

// x_t = 0.4 x_{t-1} + noise, y_t = 0.3 y_{t-1} + coupling * x_{t-1} + noise.
inline seq2graph::data::TimeSeriesFrame coupled_var(std::uint64_t seed, std::size_t T,
                                                    double coupling) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  double x = 0.0, y = 0.0;
  std::vector<double> values;
  for (std::size_t t = 0; t < T + 50; ++t) {
    const double nx = 0.4 * x + noise(rng);
    const double ny = 0.3 * y + coupling * x + noise(rng);
    x = nx;
    y = ny;
    if (t >= 50) {
      values.push_back(x);
      values.push_back(y);
    }
  }
  return seq2graph::data::TimeSeriesFrame({"x", "y"}, values);
}

// One-sample Kolmogorov-Smirnov distance from Uniform[0,1].
inline double ks_uniform(std::vector<double> sample) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    d = std::max(d, std::abs((i + 1) / n - sample[i]));
    d = std::max(d, std::abs(sample[i] - i / n));
  }
  return d;
}

}  // namespace oracle
