// SPDX-License-Identifier: Apache-2.0
//
// Linear baselines: vector autoregression fitted by least squares and pairwise Granger
// causality F-tests.
#pragma once

#include <cstddef>
#include <vector>

#include "seq2graph/data.hpp"
#include "seq2graph/tensor.hpp"

namespace seq2graph::analysis {

/// x_t = intercept + sum_k coefficients[k] x_{t-1-k}
struct VarModel {
  std::size_t order = 0;
  std::vector<double> intercept;   // [D]
  std::vector<Tensor> coefficients;  // order matrices [D, D]

  std::size_t series() const { return intercept.size(); }
};

/// Ordinary least squares over rows [first_row, first_row + count) of the frame
/// (the whole frame when count is 0). Throws FitError on a rank-deficient design.
VarModel var_fit(const data::TimeSeriesFrame& frame, std::size_t order, std::size_t first_row = 0,
                 std::size_t count = 0);

/// One-step forecast from the most recent `order` rows, given oldest first as [rows, D].
std::vector<double> var_forecast(const VarModel& model, const Tensor& history);

struct GrangerResult {
  double f_statistic = 0.0;
  double p_value = 1.0;
  std::size_t lag_order = 0;
  double rss_restricted = 0.0;
  double rss_unrestricted = 0.0;
  std::size_t df_numerator = 0;
  std::size_t df_denominator = 0;
};

/// Tests whether `candidate` lags improve the autoregression of `target`.
GrangerResult granger_test(const data::TimeSeriesFrame& frame, std::size_t target,
                           std::size_t candidate, std::size_t lag_order);

/// Upper tail of the F(d1, d2) distribution.
double f_survival(double f, double d1, double d2);

}  // namespace seq2graph::analysis
