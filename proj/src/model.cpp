// SPDX-License-Identifier: Apache-2.0
#include "seq2graph/model.hpp"

#include <algorithm>

#include "seq2graph/error.hpp"

namespace seq2graph::model {

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ContractViolation(std::string(name) + " must be at least 1");
  };
  positive(series, "series count");
  positive(window, "window length");
  positive(enc_hidden, "enc_hidden");
  positive(dp_hidden, "dp_hidden");
  positive(dec_hidden, "dec_hidden");
}

ModelParams init_params(const ModelConfig& config) {
  config.validate();
  nn::Initializer init(config.seed);
  const std::size_t enc = config.encoding_dim();
  const std::size_t v_dim = config.resolved_v_dim();
  const std::size_t feat = config.resolved_feat_dim();

  ModelParams p;
  for (std::size_t d = 0; d < config.series; ++d) {
    p.encoder_forward.push_back(nn::make_gru(init, 1, config.enc_hidden));
    p.encoder_backward.push_back(nn::make_gru(init, 1, config.enc_hidden));
    p.dual_cell.push_back(nn::make_context_gru(init, v_dim, config.dp_hidden, enc));
    OutputWeights<Tensor> out;
    out.w_o = init.matrix(v_dim, v_dim);
    out.u_o = init.matrix(v_dim, config.dp_hidden);
    out.c_o = init.matrix(v_dim, enc);
    out.b_o = init.bias(v_dim, v_dim);
    p.dual_output.push_back(std::move(out));
  }
  const std::size_t attention_sets = config.share_temporal_attention ? 1 : config.series;
  for (std::size_t a = 0; a < attention_sets; ++a) {
    p.temporal_attention.push_back(
        nn::make_attention(init, config.dp_hidden, enc, config.resolved_temporal_score_hidden()));
  }
  p.transform_w = init.matrix(feat, config.window * v_dim);
  p.transform_b = init.bias(feat, config.window * v_dim);
  p.decoder_cell = nn::make_context_gru(init, 0, config.dec_hidden, feat);
  p.inter_attention =
      nn::make_attention(init, config.dec_hidden, feat, config.resolved_inter_score_hidden());
  p.decoder_c_o = init.matrix(1, feat);
  p.decoder_u_o = init.matrix(1, config.dec_hidden);
  p.decoder_b_o = init.bias(1, config.dec_hidden);
  p.horizon.w_r = init.matrix(config.dec_hidden, 1);
  p.horizon.w_z = init.matrix(config.dec_hidden, 1);
  p.horizon.w_h = init.matrix(config.dec_hidden, 1);
  p.horizon.w_y = init.matrix(1, 1);
  return p;
}

std::size_t parameter_count(const ModelParams& params) {
  std::size_t n = 0;
  params.visit([&](const std::string&, const Tensor& t) { n += t.size(); });
  return n;
}

Tensor flatten(const ModelParams& params) {
  std::vector<double> flat;
  flat.reserve(parameter_count(params));
  params.visit([&](const std::string&, const Tensor& t) {
    flat.insert(flat.end(), t.values().begin(), t.values().end());
  });
  return Tensor::vector(std::move(flat));
}

ModelParams unflatten(const ModelParams& like, std::span<const double> flat) {
  if (flat.size() != parameter_count(like)) {
    throw ContractViolation("flat parameter vector has " + std::to_string(flat.size()) +
                            " entries, model needs " + std::to_string(parameter_count(like)));
  }
  ModelParams out = like;
  std::size_t offset = 0;
  out.visit([&](const std::string&, Tensor& t) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), t.size(), t.data());
    offset += t.size();
  });
  return out;
}

namespace {

// Same container sizes and cell layout flags as `like`, with unset elements.
BoundParams skeleton(const ModelParams& like) {
  BoundParams b;
  b.encoder_forward.resize(like.encoder_forward.size());
  b.encoder_backward.resize(like.encoder_backward.size());
  b.dual_cell.resize(like.dual_cell.size());
  b.dual_output.resize(like.dual_output.size());
  b.temporal_attention.resize(like.temporal_attention.size());
  for (std::size_t d = 0; d < like.dual_cell.size(); ++d) {
    b.encoder_forward[d].has_input = like.encoder_forward[d].has_input;
    b.encoder_backward[d].has_input = like.encoder_backward[d].has_input;
    b.dual_cell[d].base.has_input = like.dual_cell[d].base.has_input;
  }
  b.decoder_cell.base.has_input = like.decoder_cell.base.has_input;
  return b;
}

}  // namespace

BoundParams bind(ad::Tape& tape, const ModelParams& params) {
  std::vector<const Tensor*> tensors;
  params.visit([&](const std::string&, const Tensor& t) { tensors.push_back(&t); });
  BoundParams bound = skeleton(params);
  std::size_t i = 0;
  bound.visit([&](const std::string&, Var& v) { v = tape.leaf(*tensors[i++]); });
  return bound;
}

BoundParams bind_flat(const ModelParams& like, Var flat) {
  if (flat.size() != parameter_count(like)) {
    throw ContractViolation("flat parameter variable has the wrong length");
  }
  std::vector<Shape> shapes;
  like.visit([&](const std::string&, const Tensor& t) { shapes.push_back(t.shape()); });
  BoundParams bound = skeleton(like);
  std::size_t i = 0;
  std::size_t offset = 0;
  bound.visit([&](const std::string&, Var& v) {
    const Shape shape = shapes[i++];
    v = reshape(ad::slice(flat, offset, shape.numel()), shape);
    offset += shape.numel();
  });
  return bound;
}

DualPurposeOutput dual_purpose_decode(const ContextGruWeights<Var>& cell,
                                      const OutputWeights<Var>& output,
                                      const AttentionWeights<Var>& attention,
                                      std::span<const Var> encodings) {
  const std::size_t m = encodings.size();
  if (m == 0) throw ContractViolation("dual-purpose decoding needs at least one encoding");
  ad::Tape& tape = *encodings.front().tape();
  const nn::AttentionKeys keys = nn::prepare_keys(attention, encodings);

  DualPurposeOutput out;
  out.v_sequence.reserve(m);
  out.alphas.reserve(m);
  Var state = tape.constant(Tensor(Shape{cell.base.u_r.shape().rows()}));
  Var v = tape.constant(Tensor(Shape{output.w_o.shape().rows()}));
  for (std::size_t t = 0; t < m; ++t) {
    Var alpha = nn::attention_weights(attention, state, keys);
    Var context = nn::context_vector(alpha, keys);
    state = nn::context_gru_step(cell, v, state, context);
    Var pre = add(add(matmul(output.w_o, v), matmul(output.u_o, state)),
                  add(matmul(output.c_o, context), output.b_o));
    v = tanh(pre);
    out.alphas.push_back(alpha);
    out.v_sequence.push_back(v);
  }
  return out;
}

Var transform_features(Var transform_w, Var transform_b, std::span<const Var> v_sequence) {
  if (v_sequence.empty()) throw ContractViolation("transformation needs a non-empty sequence");
  const std::size_t expected = transform_w.shape().cols();
  const std::size_t v_dim = v_sequence.front().size();
  if (v_sequence.size() * v_dim != expected) {
    throw ContractViolation("transformation expects " + std::to_string(expected / v_dim) +
                            " vectors, got " + std::to_string(v_sequence.size()));
  }
  return tanh(add(matmul(transform_w, ad::concat(v_sequence)), transform_b));
}

namespace {

InterDecodeOutput decode_steps(const DecoderWeights& decoder, const HorizonWeights<Var>* head,
                               std::span<const Var> features, std::size_t steps) {
  if (features.empty()) throw ContractViolation("inter-series decoding needs features");
  ad::Tape& tape = *features.front().tape();
  const nn::AttentionKeys keys = nn::prepare_keys(*decoder.attention, features);

  ContextGruWeights<Var> cell = *decoder.cell;
  if (head) {
    cell.base.has_input = true;
    cell.base.w_r = head->w_r;
    cell.base.w_z = head->w_z;
    cell.base.w_h = head->w_h;
  }

  InterDecodeOutput out;
  Var query = tape.constant(Tensor(Shape{cell.base.u_r.shape().rows()}));
  Var y_prev = tape.constant(Tensor(Shape{1}));
  for (std::size_t i = 0; i < steps; ++i) {
    Var beta = nn::attention_weights(*decoder.attention, query, keys);
    Var context = nn::context_vector(beta, keys);
    std::optional<Var> token;
    if (head) token = y_prev;
    query = nn::context_gru_step(cell, token, query, context);
    Var pre = add(add(matmul(decoder.c_o, context), matmul(decoder.u_o, query)), decoder.b_o);
    if (head) pre = add(pre, matmul(head->w_y, y_prev));
    Var y = tanh(pre);
    out.betas.push_back(beta);
    out.y_hat.push_back(y);
    y_prev = y;
  }
  return out;
}

DecoderWeights decoder_of(const BoundParams& p) {
  return DecoderWeights{&p.decoder_cell, &p.inter_attention, p.decoder_c_o, p.decoder_u_o,
                        p.decoder_b_o};
}

}  // namespace

InterDecodeOutput decode_inter(const DecoderWeights& decoder, std::span<const Var> features) {
  return decode_steps(decoder, nullptr, features, features.size());
}

InterDecodeOutput decode_horizon(const DecoderWeights& decoder, const HorizonWeights<Var>& head,
                                 std::span<const Var> features, std::size_t horizon) {
  if (horizon == 0) throw ContractViolation("horizon must be at least 1");
  return decode_steps(decoder, &head, features, horizon);
}

void check_window(const ModelConfig& config, const Tensor& window) {
  if (window.shape().rank() != 2 || window.rows() != config.window ||
      window.cols() != config.series) {
    throw ContractViolation("window must have shape [" + std::to_string(config.window) + "x" +
                            std::to_string(config.series) + "], got " + window.shape().str());
  }
}

namespace {

std::vector<Var> series_features(const ModelConfig& config, const BoundParams& params,
                                 const Tensor& window, ForwardGraph& graph) {
  check_window(config, window);
  if (params.encoder_forward.size() != config.series) {
    throw ContractViolation("parameters were built for a different series count");
  }
  ad::Tape& tape = *params.transform_w.tape();
  const std::size_t m = config.window;
  std::vector<Var> features;
  for (std::size_t d = 0; d < config.series; ++d) {
    Tensor column(Shape{m});
    for (std::size_t t = 0; t < m; ++t) column[t] = window.at(t, d);
    Var series = tape.constant(std::move(column));
    const auto encodings =
        nn::bidirectional_encode(params.encoder_forward[d], params.encoder_backward[d], series);
    auto decoded = dual_purpose_decode(params.dual_cell[d], params.dual_output[d],
                                       params.temporal_attention_for(d), encodings);
    features.push_back(
        transform_features(params.transform_w, params.transform_b, decoded.v_sequence));
    graph.alphas.push_back(std::move(decoded.alphas));
    graph.v_sequences.push_back(std::move(decoded.v_sequence));
  }
  return features;
}

}  // namespace

ForwardGraph build_forward(const ModelConfig& config, const BoundParams& params,
                           const Tensor& window) {
  ForwardGraph graph;
  const auto features = series_features(config, params, window, graph);
  auto decoded = decode_inter(decoder_of(params), features);
  graph.y_hat = ad::concat(decoded.y_hat);
  graph.betas = std::move(decoded.betas);
  return graph;
}

ForwardGraph build_multi_step(const ModelConfig& config, const BoundParams& params,
                              const Tensor& window, std::size_t target_series,
                              std::size_t horizon) {
  if (target_series >= config.series) {
    throw ContractViolation("target series " + std::to_string(target_series) +
                            " out of range for " + std::to_string(config.series) + " series");
  }
  if (horizon == 0) throw ContractViolation("horizon must be at least 1");
  ForwardGraph graph;
  const auto features = series_features(config, params, window, graph);
  auto decoded = decode_horizon(decoder_of(params), params.horizon, features, horizon);
  graph.y_hat = ad::concat(decoded.y_hat);
  graph.betas = std::move(decoded.betas);
  return graph;
}

double ForwardTrace::alpha(std::size_t d, std::size_t t, std::size_t j) const {
  const std::size_t m = alphas.shape()[1];
  return alphas[(d * m + t) * m + j];
}

Model make_model(const ModelConfig& config) { return Model{config, init_params(config)}; }

ForwardTrace forward(const Model& model, const Tensor& window) {
  const ModelConfig& config = model.config;
  ad::Tape tape;
  const BoundParams bound = bind(tape, model.params);
  const ForwardGraph graph = build_forward(config, bound, window);

  const std::size_t D = config.series;
  const std::size_t m = config.window;
  const std::size_t v_dim = config.resolved_v_dim();
  ForwardTrace trace;
  trace.alphas = Tensor(Shape{D, m, m});
  trace.betas = Tensor(Shape{D, D});
  trace.v_sequences = Tensor(Shape{D, m, v_dim});
  trace.y_hat = graph.y_hat.value();
  for (std::size_t d = 0; d < D; ++d) {
    for (std::size_t t = 0; t < m; ++t) {
      const Tensor& row = graph.alphas[d][t].value();
      std::copy(row.values().begin(), row.values().end(), trace.alphas.data() + (d * m + t) * m);
      const Tensor& v = graph.v_sequences[d][t].value();
      std::copy(v.values().begin(), v.values().end(),
                trace.v_sequences.data() + (d * m + t) * v_dim);
    }
    const Tensor& beta = graph.betas[d].value();
    std::copy(beta.values().begin(), beta.values().end(), trace.betas.data() + d * D);
  }
  trace.input_out_of_range = std::any_of(window.values().begin(), window.values().end(),
                                         [](double x) { return x < -0.01 || x > 1.01; });
  return trace;
}

MultiStepTrace multi_step_forward(const Model& model, const Tensor& window,
                                  std::size_t target_series, std::size_t horizon) {
  ad::Tape tape;
  const BoundParams bound = bind(tape, model.params);
  const ForwardGraph graph =
      build_multi_step(model.config, bound, window, target_series, horizon);
  const std::size_t D = model.config.series;
  MultiStepTrace trace;
  trace.target_series = target_series;
  trace.y_hat = graph.y_hat.value();
  trace.betas = Tensor(Shape{horizon, D});
  for (std::size_t i = 0; i < horizon; ++i) {
    const Tensor& beta = graph.betas[i].value();
    std::copy(beta.values().begin(), beta.values().end(), trace.betas.data() + i * D);
  }
  return trace;
}

}  // namespace seq2graph::model
