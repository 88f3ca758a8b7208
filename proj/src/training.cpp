// SPDX-License-Identifier: Apache-2.0
#include "seq2graph/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "seq2graph/error.hpp"
#include "seq2graph/random.hpp"

namespace seq2graph::train {

double mse_loss(std::span<const double> y_hat, std::span<const double> y_true) {
  if (y_hat.size() != y_true.size()) {
    throw ContractViolation("loss over " + std::to_string(y_hat.size()) + " predictions and " +
                            std::to_string(y_true.size()) + " targets");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < y_hat.size(); ++i) {
    const double e = y_true[i] - y_hat[i];
    total += e * e;
  }
  return total;
}

ad::Var mse_loss(ad::Var y_hat, const Tensor& y_true) {
  if (y_hat.size() != y_true.size()) {
    throw ContractViolation("loss over " + std::to_string(y_hat.size()) + " predictions and " +
                            std::to_string(y_true.size()) + " targets");
  }
  ad::Var target = y_hat.tape()->constant(Tensor(y_hat.shape(), std::vector<double>(
                                                                    y_true.values().begin(),
                                                                    y_true.values().end())));
  ad::Var diff = ad::sub(y_hat, target);
  return ad::sum(ad::mul(diff, diff));
}

AdamState make_adam(std::span<const Tensor* const> params, double lr, double beta1, double beta2,
                    double epsilon) {
  AdamState s;
  s.lr = lr;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  for (const Tensor* p : params) {
    s.first_moment.emplace_back(p->shape());
    s.second_moment.emplace_back(p->shape());
  }
  return s;
}

StepStatus adam_step(AdamState& state, std::span<Tensor* const> params,
                     std::span<const Tensor> grads) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw ContractViolation("adam_step: parameter, gradient and moment counts differ");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!(params[k]->shape() == grads[k].shape())) {
      throw ContractViolation("adam_step: gradient shape " + grads[k].shape().str() +
                              " differs from parameter shape " + params[k]->shape().str());
    }
    if (!grads[k].all_finite()) return StepStatus::kSkippedNonFinite;
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    Tensor& m = state.first_moment[k];
    Tensor& v = state.second_moment[k];
    const Tensor& g = grads[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
  return StepStatus::kApplied;
}

double clip_gradients(std::span<Tensor> grads, double max_norm) {
  if (!(max_norm > 0.0)) throw ContractViolation("clip norm must be positive");
  double sq = 0.0;
  for (const Tensor& g : grads)
    for (double v : g.values()) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double factor = max_norm / norm;
    for (Tensor& g : grads)
      for (double& v : g.values()) v *= factor;
  }
  return norm;
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ContractViolation("epochs must be at least 1");
  if (batch_size == 0) throw ContractViolation("batch_size must be at least 1");
  if (!(lr > 0.0)) throw ContractViolation("learning rate must be positive");
  if (grad_clip_norm && !(*grad_clip_norm > 0.0)) {
    throw ContractViolation("gradient clip norm must be positive");
  }
}

namespace {

ad::Var window_loss(const model::Model& model, const model::BoundParams& bound,
                    const data::WindowSample& window, const Objective& objective) {
  if (objective.multi_step()) {
    const auto graph = model::build_multi_step(model.config, bound, window.inputs,
                                               *objective.target_series, objective.horizon);
    return mse_loss(graph.y_hat, window.target);
  }
  return mse_loss(model::build_forward(model.config, bound, window.inputs).y_hat, window.target);
}

std::vector<Tensor*> parameter_refs(model::ModelParams& params) {
  std::vector<Tensor*> refs;
  params.visit([&](const std::string&, Tensor& t) { refs.push_back(&t); });
  return refs;
}

}  // namespace

double loss_and_gradients(const model::Model& model, const data::WindowSample& window,
                          const Objective& objective, ad::Tape& tape,
                          std::vector<Tensor>& grads_out) {
  tape.clear();
  const model::BoundParams bound = model::bind(tape, model.params);
  const ad::Var loss = window_loss(model, bound, window, objective);
  tape.backward(loss);
  grads_out.clear();
  bound.visit([&](const std::string&, const ad::Var& v) { grads_out.push_back(tape.grad(v)); });
  return loss.value()[0];
}

double dataset_loss(const model::Model& model, std::span<const data::WindowSample> windows,
                    const Objective& objective) {
  if (windows.empty()) throw ContractViolation("loss over an empty window set");
  ad::Tape tape;
  double total = 0.0;
  for (const auto& w : windows) {
    tape.clear();
    const model::BoundParams bound = model::bind(tape, model.params);
    total += window_loss(model, bound, w, objective).value()[0];
  }
  return total / static_cast<double>(windows.size());
}

TrainResult train(const model::Model& initial, std::span<const data::WindowSample> train_windows,
                  std::span<const data::WindowSample> dev_windows, const TrainConfig& config,
                  const Objective& objective, const EpochCallback& on_epoch) {
  config.validate();
  if (train_windows.empty() || dev_windows.empty()) {
    throw ContractViolation("training needs non-empty train and dev windows");
  }

  model::Model current = initial;
  std::vector<Tensor*> params = parameter_refs(current.params);
  const std::vector<const Tensor*> shapes(params.begin(), params.end());
  AdamState adam = make_adam(shapes, config.lr, config.beta1, config.beta2, config.epsilon);

  TrainResult result;
  result.best_params = current.params;
  result.best_dev_loss = dataset_loss(current, dev_windows, objective);

  std::mt19937_64 shuffler(derive_seed(config.seed, "shuffle"));
  std::vector<std::size_t> order(train_windows.size());
  std::iota(order.begin(), order.end(), 0);

  ad::Tape tape;
  std::vector<Tensor> window_grads;
  std::vector<Tensor> batch_grads;
  std::size_t stale_epochs = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffler() % i]);
    }

    EpochRecord record;
    record.epoch = epoch;
    double epoch_loss = 0.0;
    for (std::size_t first = 0; first < order.size(); first += config.batch_size) {
      const std::size_t last = std::min(order.size(), first + config.batch_size);
      const double inv = 1.0 / static_cast<double>(last - first);
      batch_grads.clear();
      double batch_loss = 0.0;
      for (std::size_t k = first; k < last; ++k) {
        batch_loss += loss_and_gradients(current, train_windows[order[k]], objective, tape,
                                         window_grads);
        if (batch_grads.empty()) {
          batch_grads = window_grads;
        } else {
          for (std::size_t p = 0; p < batch_grads.size(); ++p) {
            double* acc = batch_grads[p].data();
            const double* g = window_grads[p].data();
            for (std::size_t i = 0; i < batch_grads[p].size(); ++i) acc[i] += g[i];
          }
        }
      }
      if (!std::isfinite(batch_loss)) {
        result.diverged = true;
        result.diagnostic = "training loss became non-finite in epoch " + std::to_string(epoch);
        return result;
      }
      epoch_loss += batch_loss;
      for (Tensor& g : batch_grads)
        for (double& v : g.values()) v *= inv;
      if (config.grad_clip_norm) clip_gradients(batch_grads, *config.grad_clip_norm);
      if (adam_step(adam, params, batch_grads) == StepStatus::kSkippedNonFinite) {
        ++record.skipped_steps;
      }
    }

    record.train_loss = epoch_loss / static_cast<double>(order.size());
    record.dev_loss = dataset_loss(current, dev_windows, objective);
    if (!std::isfinite(record.dev_loss)) {
      result.diverged = true;
      result.diagnostic = "dev loss became non-finite in epoch " + std::to_string(epoch);
      return result;
    }
    record.improved = record.dev_loss < result.best_dev_loss;
    if (record.improved) {
      result.best_dev_loss = record.dev_loss;
      result.best_params = current.params;
      result.best_epoch = epoch;
      stale_epochs = 0;
    } else {
      ++stale_epochs;
    }
    record.best_dev_loss = result.best_dev_loss;
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.history.push_back(record);
    if (on_epoch) on_epoch(record);
    if (stale_epochs >= config.early_stop_patience) break;
  }
  return result;
}

SeriesMetrics evaluate_predictions(std::span<const std::vector<double>> predictions,
                                   std::span<const data::WindowSample> windows,
                                   const data::Scaler* scaler) {
  if (windows.empty()) throw ContractViolation("evaluation needs at least one window");
  if (predictions.size() != windows.size()) {
    throw ContractViolation("prediction count differs from window count");
  }
  const std::size_t D = windows.front().target.size();
  SeriesMetrics m;
  m.rmse.assign(D, 0.0);
  m.mae.assign(D, 0.0);
  for (std::size_t k = 0; k < windows.size(); ++k) {
    if (predictions[k].size() != D) throw ContractViolation("prediction has the wrong width");
    for (std::size_t d = 0; d < D; ++d) {
      double pred = predictions[k][d];
      double truth = windows[k].target[d];
      if (scaler) {
        pred = scaler->invert(d, pred);
        truth = scaler->invert(d, truth);
      }
      const double e = pred - truth;
      m.rmse[d] += e * e;
      m.mae[d] += std::abs(e);
    }
  }
  const double n = static_cast<double>(windows.size());
  for (std::size_t d = 0; d < D; ++d) {
    m.rmse[d] = std::sqrt(m.rmse[d] / n);
    m.mae[d] /= n;
  }
  return m;
}

SeriesMetrics evaluate(const model::Model& model, std::span<const data::WindowSample> windows,
                       const data::Scaler* scaler) {
  std::vector<std::vector<double>> predictions;
  predictions.reserve(windows.size());
  for (const auto& w : windows) {
    const auto trace = model::forward(model, w.inputs);
    predictions.emplace_back(trace.y_hat.values().begin(), trace.y_hat.values().end());
  }
  return evaluate_predictions(predictions, windows, scaler);
}

}  // namespace seq2graph::train
