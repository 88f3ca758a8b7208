// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seq2graph/autodiff.hpp"
#include "seq2graph/data.hpp"
#include "seq2graph/model.hpp"

namespace seq2graph::train {

/// Sum of squared errors over the outputs of one window.
double mse_loss(std::span<const double> y_hat, std::span<const double> y_true);
ad::Var mse_loss(ad::Var y_hat, const Tensor& y_true);

struct AdamState {
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::size_t step_count = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Zero moments shaped like each parameter.
AdamState make_adam(std::span<const Tensor* const> params, double lr, double beta1 = 0.9,
                    double beta2 = 0.999, double epsilon = 1e-8);

enum class StepStatus { kApplied, kSkippedNonFinite };

/// Bias-corrected Adam update in place. A non-finite gradient leaves parameters and
/// state untouched.
StepStatus adam_step(AdamState& state, std::span<Tensor* const> params,
                     std::span<const Tensor> grads);

/// Rescales all gradients so their joint L2 norm is at most max_norm; returns the norm
/// before clipping.
double clip_gradients(std::span<Tensor> grads, double max_norm);

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t early_stop_patience = 10;
  std::uint64_t seed = 0;
  std::optional<double> grad_clip_norm;

  void validate() const;
};

/// Next-step prediction of all series (default) or the next `horizon` values of one.
struct Objective {
  std::optional<std::size_t> target_series;
  std::size_t horizon = 1;

  bool multi_step() const { return target_series.has_value(); }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_loss = 0.0;
  double best_dev_loss = 0.0;
  bool improved = false;
  std::size_t skipped_steps = 0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  model::ModelParams best_params;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_dev_loss = 0.0;
  bool diverged = false;
  std::string diagnostic;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Per-window loss and its parameter gradients (in visit order).
double loss_and_gradients(const model::Model& model, const data::WindowSample& window,
                          const Objective& objective, ad::Tape& tape,
                          std::vector<Tensor>& grads_out);

/// Mean per-window loss over the windows.
double dataset_loss(const model::Model& model, std::span<const data::WindowSample> windows,
                    const Objective& objective = {});

/// Minimizes the summed squared error with mini-batch Adam, keeping the parameters with
/// the best dev loss and stopping after `early_stop_patience` epochs without improvement.
TrainResult train(const model::Model& initial, std::span<const data::WindowSample> train_windows,
                  std::span<const data::WindowSample> dev_windows, const TrainConfig& config,
                  const Objective& objective = {}, const EpochCallback& on_epoch = {});

struct SeriesMetrics {
  std::vector<double> rmse;
  std::vector<double> mae;
};

/// Per-series RMSE/MAE of next-step forecasts, in the original scale when a scaler is given.
SeriesMetrics evaluate(const model::Model& model, std::span<const data::WindowSample> windows,
                       const data::Scaler* scaler = nullptr);

/// Same metrics for an arbitrary forecaster over the windows.
SeriesMetrics evaluate_predictions(std::span<const std::vector<double>> predictions,
                                   std::span<const data::WindowSample> windows,
                                   const data::Scaler* scaler = nullptr);

}  // namespace seq2graph::train
