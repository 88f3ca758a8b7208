// SPDX-License-Identifier: Apache-2.0
#include "seq2graph/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "seq2graph/checkpoint.hpp"
#include "seq2graph/error.hpp"
#include "seq2graph/graph.hpp"
#include "seq2graph/random.hpp"
#include "seq2graph/var.hpp"

namespace seq2graph::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// Errors that map to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class T>
void read_if(const ordered_json& j, const char* key, T& target) {
  if (j.contains(key) && !j.at(key).is_null()) target = j.at(key).get<T>();
}

template <class T>
void read_if(const ordered_json& j, const char* key, std::optional<T>& target) {
  if (j.contains(key)) {
    if (j.at(key).is_null()) {
      target.reset();
    } else {
      target = j.at(key).get<T>();
    }
  }
}

template <class T>
ordered_json optional_json(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void require_file(const fs::path& path, const char* what) {
  if (path.empty()) throw UsageError(std::string("missing required ") + what);
  if (!fs::exists(path)) throw UsageError(std::string(what) + " not found: " + path.string());
}

void prepare_out_dir(const RunConfig& config) {
  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec || !fs::is_directory(config.out_dir)) {
    throw std::runtime_error("cannot create output directory " + config.out_dir.string());
  }
  write_text(config.out_dir / "run_config.json", run_config_to_json(config));
}

std::size_t series_index(const data::TimeSeriesFrame& frame, const std::string& name) {
  for (std::size_t d = 0; d < frame.series(); ++d)
    if (frame.names()[d] == name) return d;
  throw UsageError("unknown series '" + name + "'");
}

struct MetricsRow {
  std::string method, split, series;
  double rmse, mae;
};

std::string format_metrics(const std::vector<MetricsRow>& rows) {
  std::string out = "method,split,series,rmse,mae\n";
  for (const auto& r : rows) {
    out += r.method + ',' + r.split + ',' + r.series + ',' + fmt(r.rmse) + ',' + fmt(r.mae) + '\n';
  }
  return out;
}

void print_metrics(std::ostream& out, const std::vector<MetricsRow>& rows) {
  for (const auto& r : rows) {
    out << "  " << r.method << ' ' << r.split << ' ' << r.series << "  RMSE "
        << fmt_short(r.rmse) << "  MAE " << fmt_short(r.mae) << '\n';
  }
}

void append_metrics(std::vector<MetricsRow>& rows, const std::string& method,
                    const std::string& split, const std::vector<std::string>& names,
                    const train::SeriesMetrics& m) {
  for (std::size_t d = 0; d < m.rmse.size(); ++d) {
    rows.push_back({method, split, names.size() == m.rmse.size() ? names[d] : names.front(),
                    m.rmse[d], m.mae[d]});
  }
}

struct PreparedData {
  data::TimeSeriesFrame raw;
  data::Scaler scaler;
  data::TimeSeriesFrame normalized;
  data::SplitRanges ranges;
  data::WindowSplits windows;
};

PreparedData prepare(const data::TimeSeriesFrame& raw, const RunConfig& config,
                     const data::Scaler* scaler, std::optional<std::size_t> target_series,
                     std::ostream& err) {
  PreparedData p;
  p.raw = raw;
  p.ranges = data::chronological_split(raw.length());
  if (p.ranges.train_end <= config.model.window) {
    throw UsageError("input has too few rows for window " + std::to_string(config.model.window));
  }
  p.scaler = scaler ? *scaler : data::fit_scaler(raw, 0, p.ranges.train_end);
  for (std::size_t d = 0; d < raw.series(); ++d) {
    if (p.scaler.constant[d]) {
      err << "warning: series '" << raw.names()[d]
          << "' is constant over the training rows; normalized with unit range\n";
    }
  }
  p.normalized = p.scaler.apply(raw);
  const auto windows =
      target_series
          ? data::make_horizon_windows(p.normalized, config.model.window, *target_series,
                                       config.horizon)
          : data::make_windows(p.normalized, config.model.window);
  p.windows = data::split_windows(windows, p.ranges);
  return p;
}

const std::vector<data::WindowSample>& pick_split(const data::WindowSplits& s,
                                                   const std::string& name) {
  if (name == "train") return s.train;
  if (name == "dev") return s.dev;
  if (name == "test") return s.test;
  throw UsageError("unknown split '" + name + "' (expected train, dev or test)");
}

// Metrics for a multi-step model: one row per horizon step, in the original scale.
train::SeriesMetrics horizon_metrics(const model::Model& model,
                                     const std::vector<data::WindowSample>& windows,
                                     std::size_t target, std::size_t horizon,
                                     const data::Scaler& scaler) {
  train::SeriesMetrics m;
  m.rmse.assign(horizon, 0.0);
  m.mae.assign(horizon, 0.0);
  for (const auto& w : windows) {
    const auto trace = model::multi_step_forward(model, w.inputs, target, horizon);
    for (std::size_t k = 0; k < horizon; ++k) {
      const double e = scaler.invert(target, trace.y_hat[k]) - scaler.invert(target, w.target[k]);
      m.rmse[k] += e * e;
      m.mae[k] += std::abs(e);
    }
  }
  const double n = static_cast<double>(windows.size());
  for (std::size_t k = 0; k < horizon; ++k) {
    m.rmse[k] = std::sqrt(m.rmse[k] / n);
    m.mae[k] /= n;
  }
  return m;
}

std::vector<MetricsRow> model_metrics(const model::Model& model, const PreparedData& p,
                                      const std::vector<std::string>& splits,
                                      std::optional<std::size_t> target, std::size_t horizon) {
  std::vector<MetricsRow> rows;
  for (const auto& split : splits) {
    const auto& windows = pick_split(p.windows, split);
    if (windows.empty()) continue;
    if (target) {
      std::vector<std::string> names;
      for (std::size_t k = 0; k < horizon; ++k) {
        names.push_back(p.raw.names()[*target] + "+" + std::to_string(k + 1));
      }
      append_metrics(rows, "seq2graph", split, names,
                     horizon_metrics(model, windows, *target, horizon, p.scaler));
    } else {
      append_metrics(rows, "seq2graph", split, p.raw.names(),
                     train::evaluate(model, windows, &p.scaler));
    }
  }
  return rows;
}

// ---- commands ---------------------------------------------------------------------

int cmd_generate(const RunConfig& config, std::ostream& out) {
  prepare_out_dir(config);
  const auto series = data::generate_bivariate(config.synthetic);
  data::write_csv(series.frame, config.out_dir / "synthetic.csv");
  data::write_labels(series, config.out_dir / "synthetic_labels.csv");
  std::size_t counts[3] = {0, 0, 0};
  std::size_t regenerated = 0;
  for (std::size_t t = 0; t < series.rules.size(); ++t) {
    ++counts[static_cast<int>(series.rules[t])];
    if (series.regenerated[t]) ++regenerated;
  }
  out << "generated " << series.frame.length() << " rows x " << series.frame.series()
      << " series\n"
      << "  warmup rows " << counts[0] << ", rule 1 " << counts[1] << ", rule 2 " << counts[2]
      << ", regenerated " << regenerated << '\n';
  return kSuccess;
}

int cmd_train(RunConfig config, std::ostream& out, std::ostream& err) {
  require_file(config.input, "input CSV");
  const auto raw = data::load_csv(config.input);
  config.model.series = raw.series();
  config.model.validate();
  config.train.validate();
  std::optional<std::size_t> target;
  if (config.target_series) target = series_index(raw, *config.target_series);
  if (config.horizon == 0) throw UsageError("horizon must be at least 1");
  prepare_out_dir(config);

  const PreparedData p = prepare(raw, config, nullptr, target, err);
  if (p.windows.train.empty() || p.windows.dev.empty()) {
    throw UsageError("input is too short to produce train and dev windows");
  }
  const model::Model initial = model::make_model(config.model);
  train::Objective objective;
  objective.target_series = target;
  objective.horizon = config.horizon;

  std::ofstream log(config.out_dir / "train_log.jsonl");
  if (!log) throw std::runtime_error("cannot write training log");
  const auto result = train::train(
      initial, p.windows.train, p.windows.dev, config.train, objective,
      [&](const train::EpochRecord& r) {
        ordered_json rec{{"epoch", r.epoch},           {"train_loss", r.train_loss},
                         {"dev_loss", r.dev_loss},     {"best_dev_loss", r.best_dev_loss},
                         {"improved", r.improved},     {"skipped_steps", r.skipped_steps},
                         {"wall_seconds", r.wall_seconds}};
        log << rec.dump() << '\n' << std::flush;
        out << "epoch " << r.epoch << "  train " << fmt_short(r.train_loss) << "  dev "
            << fmt_short(r.dev_loss) << (r.improved ? "  *" : "") << '\n';
        if (r.skipped_steps) {
          err << "warning: skipped " << r.skipped_steps << " updates with non-finite gradients\n";
        }
      });

  model::Checkpoint cp{model::Model{config.model, result.best_params}, raw.names(), p.scaler};
  model::save_checkpoint(cp, config.out_dir / "checkpoint.json");
  if (result.diverged) {
    err << "error: " << result.diagnostic << "; kept the last good checkpoint\n";
    return kRuntimeFailure;
  }

  const auto rows = model_metrics(cp.model, p, {"dev", "test"}, target, config.horizon);
  write_text(config.out_dir / "metrics.csv", format_metrics(rows));
  out << "best dev loss " << fmt_short(result.best_dev_loss) << " at epoch " << result.best_epoch
      << '\n';
  print_metrics(out, rows);
  return kSuccess;
}

model::Checkpoint load_matching_checkpoint(const RunConfig& config,
                                           const data::TimeSeriesFrame& raw) {
  require_file(config.checkpoint, "checkpoint");
  auto cp = model::load_checkpoint(config.checkpoint);
  if (cp.series_names != raw.names()) {
    auto join = [](const std::vector<std::string>& v) {
      std::string s;
      for (const auto& n : v) s += (s.empty() ? "" : ", ") + n;
      return "[" + s + "]";
    };
    throw SchemaError("series mismatch: checkpoint has " + join(cp.series_names) +
                      ", input has " + join(raw.names()));
  }
  return cp;
}

int cmd_evaluate(RunConfig config, std::ostream& out, std::ostream& err) {
  require_file(config.input, "input CSV");
  const auto raw = data::load_csv(config.input);
  const auto cp = load_matching_checkpoint(config, raw);
  config.model = cp.model.config;
  (void)pick_split({}, config.split);
  prepare_out_dir(config);
  const PreparedData p = prepare(raw, config, &cp.scaler, std::nullopt, err);
  const auto rows = model_metrics(cp.model, p, {config.split}, std::nullopt, 1);
  if (rows.empty()) throw UsageError("split '" + config.split + "' has no windows");
  write_text(config.out_dir / "metrics.csv", format_metrics(rows));
  print_metrics(out, rows);
  return kSuccess;
}

int cmd_infer(RunConfig config, std::ostream& out, std::ostream& err) {
  require_file(config.input, "input CSV");
  const auto raw = data::load_csv(config.input);
  const auto cp = load_matching_checkpoint(config, raw);
  config.model = cp.model.config;
  const bool want_json = config.graph_format == "json" || config.graph_format == "both";
  const bool want_dot = config.graph_format == "dot" || config.graph_format == "both";
  if (!want_json && !want_dot) {
    throw UsageError("unknown graph format '" + config.graph_format + "'");
  }
  const std::size_t m = cp.model.config.window;
  const std::size_t D = raw.series();
  if (raw.length() < m) throw UsageError("input shorter than the window length");
  const auto T = static_cast<std::int64_t>(raw.length());
  auto resolve = [&](std::optional<std::int64_t> v, std::int64_t fallback) {
    std::int64_t r = v.value_or(fallback);
    if (r < 0) r += T;
    return r;
  };
  const std::int64_t first = resolve(config.range_start, T - 1);
  const std::int64_t last = resolve(config.range_end, T - 1);
  if (first < static_cast<std::int64_t>(m) - 1 || last >= T || first > last) {
    throw UsageError("range [" + std::to_string(first) + ", " + std::to_string(last) +
                     "] must lie within [" + std::to_string(m - 1) + ", " +
                     std::to_string(T - 1) + "]");
  }
  prepare_out_dir(config);
  fs::create_directories(config.out_dir / "graphs");

  const auto normalized = cp.scaler.apply(raw);
  const auto thresholds = [&] {
    auto t = analysis::GraphThresholds::relative_to_uniform(D);
    if (config.threshold_primary > 0.0) t.primary = config.threshold_primary;
    if (config.threshold_secondary > 0.0) t.secondary = config.threshold_secondary;
    return t;
  }();

  std::string forecasts = "timestamp,row";
  for (const auto& n : raw.names()) forecasts += ',' + n;
  forecasts += '\n';
  std::string lags = "timestamp,row,series";
  for (std::size_t k = 0; k < m; ++k) lags += ",lag" + std::to_string(k);
  lags += '\n';

  std::size_t flagged = 0;
  for (std::int64_t row = first; row <= last; ++row) {
    const auto t = static_cast<std::size_t>(row);
    Tensor window(Shape{m, D});
    for (std::size_t k = 0; k < m; ++k)
      for (std::size_t d = 0; d < D; ++d) window.at(k, d) = normalized.at(t + 1 - m + k, d);
    const auto trace = model::forward(cp.model, window);
    if (trace.input_out_of_range) ++flagged;
    const double stamp = raw.timestamps() ? (*raw.timestamps())[t] : static_cast<double>(t);

    forecasts += fmt(stamp) + ',' + std::to_string(t);
    for (std::size_t d = 0; d < D; ++d) forecasts += ',' + fmt(cp.scaler.invert(d, trace.y_hat[d]));
    forecasts += '\n';

    const auto graph = analysis::build_graph(trace.betas, raw.names(), thresholds, stamp);
    const fs::path base = config.out_dir / "graphs" / ("graph_" + std::to_string(t));
    if (want_json) {
      write_text(fs::path(base.string() + ".json"),
                 analysis::export_graph(graph, analysis::GraphFormat::kJson));
    }
    if (want_dot) {
      write_text(fs::path(base.string() + ".dot"),
                 analysis::export_graph(graph, analysis::GraphFormat::kDot));
    }

    for (std::size_t d = 0; d < D; ++d) {
      Tensor alphas(Shape{m, m});
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) alphas.at(i, j) = trace.alpha(d, i, j);
      lags += fmt(stamp) + ',' + std::to_string(t) + ',' + raw.names()[d];
      for (double v : analysis::aggregate_lags(alphas)) lags += ',' + fmt(v);
      lags += '\n';
    }
  }
  write_text(config.out_dir / "forecasts.csv", forecasts);
  write_text(config.out_dir / "lag_profiles.csv", lags);
  if (flagged) {
    err << "warning: " << flagged
        << " windows contain values outside the training range after normalization\n";
  }
  out << "inferred " << (last - first + 1) << " timestamps into " << config.out_dir.string()
      << '\n';
  return kSuccess;
}

int cmd_baseline(RunConfig config, std::ostream& out, std::ostream& err) {
  require_file(config.input, "input CSV");
  const auto raw = data::load_csv(config.input);
  const std::size_t p = config.lag_order ? config.lag_order : config.model.window;
  if (config.method == "var") {
    config.model.window = p;
    prepare_out_dir(config);
    const PreparedData prep = prepare(raw, config, nullptr, std::nullopt, err);
    const auto var = analysis::var_fit(prep.normalized, p, 0, prep.ranges.train_end);
    std::vector<MetricsRow> rows;
    for (const std::string split : {"dev", "test"}) {
      const auto& windows = pick_split(prep.windows, split);
      if (windows.empty()) continue;
      std::vector<std::vector<double>> predictions;
      for (const auto& w : windows) predictions.push_back(analysis::var_forecast(var, w.inputs));
      append_metrics(rows, "var", split, raw.names(),
                     train::evaluate_predictions(predictions, windows, &prep.scaler));
    }
    write_text(config.out_dir / "var_metrics.csv", format_metrics(rows));
    out << "VAR(" << p << ") fitted on " << prep.ranges.train_end << " training rows\n";
    print_metrics(out, rows);
    return kSuccess;
  }
  if (config.method == "granger") {
    std::vector<std::size_t> targets, candidates;
    for (std::size_t d = 0; d < raw.series(); ++d) {
      targets.push_back(d);
      candidates.push_back(d);
    }
    if (config.granger_target) targets = {series_index(raw, *config.granger_target)};
    if (config.granger_candidate) candidates = {series_index(raw, *config.granger_candidate)};
    if (config.granger_target && config.granger_candidate && targets == candidates) {
      throw UsageError("Granger target and candidate must differ");
    }
    prepare_out_dir(config);
    std::string table = "target,candidate,lag_order,f_statistic,p_value,df1,df2\n";
    for (std::size_t target : targets) {
      for (std::size_t candidate : candidates) {
        if (target == candidate) continue;
        const auto g = analysis::granger_test(raw, target, candidate, p);
        table += raw.names()[target] + ',' + raw.names()[candidate] + ',' + std::to_string(p) +
                 ',' + fmt(g.f_statistic) + ',' + fmt(g.p_value) + ',' +
                 std::to_string(g.df_numerator) + ',' + std::to_string(g.df_denominator) + '\n';
        out << "  " << raw.names()[candidate] << " -> " << raw.names()[target] << "  F "
            << fmt_short(g.f_statistic) << "  p " << g.p_value << '\n';
      }
    }
    write_text(config.out_dir / "granger.csv", table);
    return kSuccess;
  }
  throw UsageError("unknown baseline method '" + config.method + "' (expected var or granger)");
}

}  // namespace

std::string run_config_to_json(const RunConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir.string();
  j["input"] = c.input.string();
  j["checkpoint"] = c.checkpoint.string();
  j["model"] = ordered_json{{"window", c.model.window},
                            {"enc_hidden", c.model.enc_hidden},
                            {"dp_hidden", c.model.dp_hidden},
                            {"dec_hidden", c.model.dec_hidden},
                            {"v_dim", c.model.v_dim},
                            {"feat_dim", c.model.feat_dim},
                            {"temporal_score_hidden", c.model.temporal_score_hidden},
                            {"inter_score_hidden", c.model.inter_score_hidden},
                            {"share_temporal_attention", c.model.share_temporal_attention},
                            {"init_seed", c.model.seed}};
  j["train"] = ordered_json{{"epochs", c.train.epochs},
                            {"batch_size", c.train.batch_size},
                            {"lr", c.train.lr},
                            {"beta1", c.train.beta1},
                            {"beta2", c.train.beta2},
                            {"epsilon", c.train.epsilon},
                            {"early_stop_patience", c.train.early_stop_patience},
                            {"grad_clip_norm", optional_json(c.train.grad_clip_norm)},
                            {"shuffle_seed", c.train.seed},
                            {"target_series", optional_json(c.target_series)},
                            {"horizon", c.horizon}};
  j["synthetic"] = ordered_json{{"length", c.synthetic.length},
                                {"regen_probability", c.synthetic.regen_probability},
                                {"data_seed", c.synthetic.seed}};
  j["evaluate"] = ordered_json{{"split", c.split}};
  j["infer"] = ordered_json{{"start", optional_json(c.range_start)},
                            {"end", optional_json(c.range_end)},
                            {"graph_format", c.graph_format},
                            {"threshold_primary", c.threshold_primary},
                            {"threshold_secondary", c.threshold_secondary}};
  j["baseline"] = ordered_json{{"method", c.method},
                               {"lag_order", c.lag_order},
                               {"target", optional_json(c.granger_target)},
                               {"candidate", optional_json(c.granger_candidate)}};
  return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text, RunConfig c) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    read_if(j, "seed", c.seed);
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("input")) c.input = j.at("input").get<std::string>();
    if (j.contains("checkpoint")) c.checkpoint = j.at("checkpoint").get<std::string>();
    if (j.contains("model")) {
      const auto& m = j.at("model");
      read_if(m, "window", c.model.window);
      read_if(m, "enc_hidden", c.model.enc_hidden);
      read_if(m, "dp_hidden", c.model.dp_hidden);
      read_if(m, "dec_hidden", c.model.dec_hidden);
      read_if(m, "v_dim", c.model.v_dim);
      read_if(m, "feat_dim", c.model.feat_dim);
      read_if(m, "temporal_score_hidden", c.model.temporal_score_hidden);
      read_if(m, "inter_score_hidden", c.model.inter_score_hidden);
      read_if(m, "share_temporal_attention", c.model.share_temporal_attention);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      read_if(t, "epochs", c.train.epochs);
      read_if(t, "batch_size", c.train.batch_size);
      read_if(t, "lr", c.train.lr);
      read_if(t, "beta1", c.train.beta1);
      read_if(t, "beta2", c.train.beta2);
      read_if(t, "epsilon", c.train.epsilon);
      read_if(t, "early_stop_patience", c.train.early_stop_patience);
      read_if(t, "grad_clip_norm", c.train.grad_clip_norm);
      read_if(t, "target_series", c.target_series);
      read_if(t, "horizon", c.horizon);
    }
    if (j.contains("synthetic")) {
      const auto& s = j.at("synthetic");
      read_if(s, "length", c.synthetic.length);
      read_if(s, "regen_probability", c.synthetic.regen_probability);
    }
    if (j.contains("evaluate")) read_if(j.at("evaluate"), "split", c.split);
    if (j.contains("infer")) {
      const auto& i = j.at("infer");
      read_if(i, "start", c.range_start);
      read_if(i, "end", c.range_end);
      read_if(i, "graph_format", c.graph_format);
      read_if(i, "threshold_primary", c.threshold_primary);
      read_if(i, "threshold_secondary", c.threshold_secondary);
    }
    if (j.contains("baseline")) {
      const auto& b = j.at("baseline");
      read_if(b, "method", c.method);
      read_if(b, "lag_order", c.lag_order);
      read_if(b, "target", c.granger_target);
      read_if(b, "candidate", c.granger_candidate);
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config field has the wrong type: ") + e.what());
  }
  return c;
}

void derive_component_seeds(RunConfig& config) {
  config.synthetic.seed = derive_seed(config.seed, "data");
  config.model.seed = derive_seed(config.seed, "init");
  config.train.seed = derive_seed(config.seed, "train");
}

namespace {

// Flag values are collected separately and applied over the config file afterwards.
struct Overrides {
  std::vector<std::function<void(RunConfig&)>> apply;

  template <class T>
  void add(CLI::App& app, const std::string& flag, const std::string& help,
           std::function<void(RunConfig&, const T&)> setter) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app.add_option(flag, *value, help);
    apply.push_back([opt, value, setter](RunConfig& c) {
      if (opt->count() > 0) setter(c, *value);
    });
  }
};

void add_common(CLI::App& sub, Overrides& ov, std::string& config_path) {
  sub.add_option("--config", config_path, "JSON run configuration");
  ov.add<std::uint64_t>(sub, "--seed", "run seed", [](RunConfig& c, const std::uint64_t& v) {
    c.seed = v;
  });
  ov.add<std::string>(sub, "--out-dir", "output directory",
                      [](RunConfig& c, const std::string& v) { c.out_dir = v; });
}

void add_input(CLI::App& sub, Overrides& ov) {
  ov.add<std::string>(sub, "--input", "input CSV",
                      [](RunConfig& c, const std::string& v) { c.input = v; });
}

void add_checkpoint(CLI::App& sub, Overrides& ov) {
  ov.add<std::string>(sub, "--checkpoint", "checkpoint file",
                      [](RunConfig& c, const std::string& v) { c.checkpoint = v; });
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"seq2graph: attention-based forecasting with dependency graphs"};
  app.require_subcommand(1);
  std::string config_path;

  struct Command {
    CLI::App* app;
    Overrides overrides;
  };
  std::map<std::string, Command> commands;
  auto make = [&](const std::string& name, const std::string& help) -> Command& {
    Command& cmd = commands[name];
    cmd.app = app.add_subcommand(name, help);
    add_common(*cmd.app, cmd.overrides, config_path);
    return cmd;
  };

  {
    Command& g = make("generate", "write the synthetic bivariate series and rule labels");
    g.overrides.add<std::size_t>(*g.app, "--length", "number of rows",
                                 [](RunConfig& c, const std::size_t& v) { c.synthetic.length = v; });
    g.overrides.add<double>(*g.app, "--regen-probability", "per-step chance of fresh inputs",
                            [](RunConfig& c, const double& v) { c.synthetic.regen_probability = v; });
  }
  {
    Command& t = make("train", "train a model on a CSV and write checkpoint, log and metrics");
    add_input(*t.app, t.overrides);
    auto& o = t.overrides;
    o.add<std::size_t>(*t.app, "--window", "window length m",
                       [](RunConfig& c, const std::size_t& v) { c.model.window = v; });
    o.add<std::size_t>(*t.app, "--width", "hidden width of all recurrent components",
                       [](RunConfig& c, const std::size_t& v) {
                         c.model.enc_hidden = c.model.dp_hidden = c.model.dec_hidden = v;
                       });
    o.add<std::size_t>(*t.app, "--enc-hidden", "encoder width",
                       [](RunConfig& c, const std::size_t& v) { c.model.enc_hidden = v; });
    o.add<std::size_t>(*t.app, "--dp-hidden", "dual-purpose width",
                       [](RunConfig& c, const std::size_t& v) { c.model.dp_hidden = v; });
    o.add<std::size_t>(*t.app, "--dec-hidden", "decoder width",
                       [](RunConfig& c, const std::size_t& v) { c.model.dec_hidden = v; });
    o.add<std::size_t>(*t.app, "--epochs", "maximum epochs",
                       [](RunConfig& c, const std::size_t& v) { c.train.epochs = v; });
    o.add<std::size_t>(*t.app, "--batch-size", "windows per update",
                       [](RunConfig& c, const std::size_t& v) { c.train.batch_size = v; });
    o.add<double>(*t.app, "--lr", "Adam learning rate",
                  [](RunConfig& c, const double& v) { c.train.lr = v; });
    o.add<std::size_t>(*t.app, "--patience", "epochs without dev improvement before stopping",
                       [](RunConfig& c, const std::size_t& v) { c.train.early_stop_patience = v; });
    o.add<double>(*t.app, "--grad-clip", "gradient norm clip",
                  [](RunConfig& c, const double& v) { c.train.grad_clip_norm = v; });
    o.add<std::string>(*t.app, "--target-series", "train the multi-step single-series decoder",
                       [](RunConfig& c, const std::string& v) { c.target_series = v; });
    o.add<std::size_t>(*t.app, "--horizon", "steps predicted with --target-series",
                       [](RunConfig& c, const std::size_t& v) { c.horizon = v; });
  }
  {
    Command& e = make("evaluate", "RMSE/MAE of a checkpoint on one split of a CSV");
    add_input(*e.app, e.overrides);
    add_checkpoint(*e.app, e.overrides);
    e.overrides.add<std::string>(*e.app, "--split", "train, dev or test",
                                 [](RunConfig& c, const std::string& v) { c.split = v; });
  }
  {
    Command& i = make("infer", "forecasts, dependency graphs and lag profiles per timestamp");
    add_input(*i.app, i.overrides);
    add_checkpoint(*i.app, i.overrides);
    auto& o = i.overrides;
    o.add<std::int64_t>(*i.app, "--start", "first row (newest input value); negative from end",
                        [](RunConfig& c, const std::int64_t& v) { c.range_start = v; });
    o.add<std::int64_t>(*i.app, "--end", "last row, inclusive",
                        [](RunConfig& c, const std::int64_t& v) { c.range_end = v; });
    o.add<std::string>(*i.app, "--format", "json, dot or both",
                       [](RunConfig& c, const std::string& v) { c.graph_format = v; });
    o.add<double>(*i.app, "--primary-threshold", "minimum weight of a primary edge",
                  [](RunConfig& c, const double& v) { c.threshold_primary = v; });
    o.add<double>(*i.app, "--secondary-threshold", "minimum weight of any edge",
                  [](RunConfig& c, const double& v) { c.threshold_secondary = v; });
  }
  {
    Command& b = make("baseline", "VAR forecasts or pairwise Granger tests");
    add_input(*b.app, b.overrides);
    auto& o = b.overrides;
    o.add<std::string>(*b.app, "--method", "var or granger",
                       [](RunConfig& c, const std::string& v) { c.method = v; });
    o.add<std::size_t>(*b.app, "--lag-order", "lag order (default: window length)",
                       [](RunConfig& c, const std::size_t& v) { c.lag_order = v; });
    o.add<std::size_t>(*b.app, "--window", "window length m",
                       [](RunConfig& c, const std::size_t& v) { c.model.window = v; });
    o.add<std::string>(*b.app, "--target", "Granger target series",
                       [](RunConfig& c, const std::string& v) { c.granger_target = v; });
    o.add<std::string>(*b.app, "--candidate", "Granger candidate series",
                       [](RunConfig& c, const std::string& v) { c.granger_candidate = v; });
  }

  std::vector<std::string> storage = args;
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  }

  std::string name;
  for (auto& [n, cmd] : commands) {
    if (cmd.app->parsed()) name = n;
  }
  Command& cmd = commands.at(name);

  try {
    RunConfig config;
    if (!config_path.empty()) {
      require_file(config_path, "config file");
      std::ifstream in(config_path);
      std::ostringstream buf;
      buf << in.rdbuf();
      config = run_config_from_json(buf.str());
    }
    for (const auto& f : cmd.overrides.apply) f(config);
    derive_component_seeds(config);
    config.synthetic.validate();

    if (name == "generate") return cmd_generate(config, out);
    if (name == "train") return cmd_train(config, out, err);
    if (name == "evaluate") return cmd_evaluate(config, out, err);
    if (name == "infer") return cmd_infer(config, out, err);
    return cmd_baseline(config, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const ContractViolation& e) {
    err << "configuration error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace seq2graph::cli
