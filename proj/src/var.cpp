// SPDX-License-Identifier: Apache-2.0
#include "seq2graph/var.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <boost/math/special_functions/beta.hpp>

#include "seq2graph/error.hpp"

namespace seq2graph::analysis {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct LeastSquares {
  MatrixXd coef;
  MatrixXd residuals;
};

LeastSquares solve(const MatrixXd& design, const MatrixXd& response, const std::string& what) {
  Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
  if (qr.rank() < design.cols()) {
    throw FitError(what + ": design matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                   " of " + std::to_string(design.cols()) + "); try a smaller lag order");
  }
  LeastSquares ls;
  ls.coef = qr.solve(response);
  ls.residuals = response - design * ls.coef;
  return ls;
}

}  // namespace

VarModel var_fit(const data::TimeSeriesFrame& frame, std::size_t order, std::size_t first_row,
                 std::size_t count) {
  if (order == 0) throw ContractViolation("VAR order must be at least 1");
  if (count == 0) count = frame.length() - first_row;
  if (first_row + count > frame.length()) throw ContractViolation("VAR fit range exceeds frame");
  const std::size_t D = frame.series();
  if (count <= order) {
    throw FitError("VAR(" + std::to_string(order) + ") needs more than " + std::to_string(order) +
                   " rows");
  }
  const std::size_t n = count - order;
  const std::size_t k = 1 + order * D;
  if (n < k) {
    throw FitError("VAR(" + std::to_string(order) + ") has " + std::to_string(k) +
                   " regressors but only " + std::to_string(n) + " observations");
  }

  MatrixXd X(n, k);
  MatrixXd Y(n, D);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t t = first_row + order + r;
    X(r, 0) = 1.0;
    for (std::size_t lag = 0; lag < order; ++lag)
      for (std::size_t d = 0; d < D; ++d) X(r, 1 + lag * D + d) = frame.at(t - 1 - lag, d);
    for (std::size_t d = 0; d < D; ++d) Y(r, d) = frame.at(t, d);
  }
  const LeastSquares ls = solve(X, Y, "VAR fit");

  VarModel model;
  model.order = order;
  model.intercept.resize(D);
  for (std::size_t i = 0; i < D; ++i) model.intercept[i] = ls.coef(0, i);
  for (std::size_t lag = 0; lag < order; ++lag) {
    Tensor a(Shape{D, D});
    for (std::size_t i = 0; i < D; ++i)
      for (std::size_t d = 0; d < D; ++d) a.at(i, d) = ls.coef(1 + lag * D + d, i);
    model.coefficients.push_back(std::move(a));
  }
  return model;
}

std::vector<double> var_forecast(const VarModel& model, const Tensor& history) {
  const std::size_t D = model.series();
  if (history.shape().rank() != 2 || history.cols() != D || history.rows() < model.order) {
    throw ContractViolation("VAR forecast needs at least " + std::to_string(model.order) +
                            " rows of " + std::to_string(D) + " series, got " +
                            history.shape().str());
  }
  std::vector<double> out = model.intercept;
  const std::size_t newest = history.rows() - 1;
  for (std::size_t lag = 0; lag < model.order; ++lag) {
    const Tensor& a = model.coefficients[lag];
    for (std::size_t i = 0; i < D; ++i)
      for (std::size_t d = 0; d < D; ++d) out[i] += a.at(i, d) * history.at(newest - lag, d);
  }
  return out;
}

double f_survival(double f, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw ContractViolation("F degrees of freedom must be positive");
  if (!(f > 0.0)) return 1.0;
  if (std::isinf(f)) return 0.0;
  return boost::math::ibeta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

GrangerResult granger_test(const data::TimeSeriesFrame& frame, std::size_t target,
                           std::size_t candidate, std::size_t lag_order) {
  if (target >= frame.series() || candidate >= frame.series()) {
    throw ContractViolation("Granger test series index out of range");
  }
  if (target == candidate) {
    throw ContractViolation("Granger test needs two distinct series");
  }
  if (lag_order == 0) throw ContractViolation("lag order must be at least 1");
  const std::size_t p = lag_order;
  if (frame.length() <= p) throw FitError("series too short for lag order " + std::to_string(p));
  const std::size_t n = frame.length() - p;
  const std::size_t k_u = 1 + 2 * p;
  if (n <= k_u) {
    throw FitError("Granger test with lag order " + std::to_string(p) + " needs more than " +
                   std::to_string(k_u + p) + " rows");
  }

  MatrixXd Xu(n, k_u);
  VectorXd y(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t t = p + r;
    Xu(r, 0) = 1.0;
    for (std::size_t lag = 0; lag < p; ++lag) {
      Xu(r, 1 + lag) = frame.at(t - 1 - lag, target);
      Xu(r, 1 + p + lag) = frame.at(t - 1 - lag, candidate);
    }
    y(r) = frame.at(t, target);
  }
  const MatrixXd Xr = Xu.leftCols(1 + p);
  const LeastSquares restricted = solve(Xr, y, "Granger restricted model");
  const LeastSquares unrestricted = solve(Xu, y, "Granger unrestricted model");

  GrangerResult g;
  g.lag_order = p;
  g.rss_restricted = restricted.residuals.squaredNorm();
  g.rss_unrestricted = unrestricted.residuals.squaredNorm();
  g.df_numerator = p;
  g.df_denominator = n - k_u;
  const double d1 = static_cast<double>(g.df_numerator);
  const double d2 = static_cast<double>(g.df_denominator);
  if (g.rss_unrestricted <= 0.0) {
    g.f_statistic = g.rss_restricted > 0.0 ? INFINITY : 0.0;
  } else {
    g.f_statistic = ((g.rss_restricted - g.rss_unrestricted) / d1) / (g.rss_unrestricted / d2);
    if (g.f_statistic < 0.0) g.f_statistic = 0.0;
  }
  g.p_value = f_survival(g.f_statistic, d1, d2);
  return g;
}

}  // namespace seq2graph::analysis
