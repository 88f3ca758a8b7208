// SPDX-License-Identifier: Apache-2.0
#include "seq2graph/recurrent.hpp"

#include <cmath>

#include "seq2graph/error.hpp"
#include "seq2graph/random.hpp"

namespace seq2graph::nn {

double Initializer::draw(double bound) { return (2.0 * unit_uniform(engine_) - 1.0) * bound; }

Tensor Initializer::matrix(std::size_t rows, std::size_t cols) {
  Tensor t(Shape{rows, cols});
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  for (double& v : t.values()) v = draw(bound);
  return t;
}

Tensor Initializer::bias(std::size_t size, std::size_t fan_in) {
  Tensor t(Shape{size});
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : t.values()) v = draw(bound);
  return t;
}

GruParams make_gru(Initializer& init, std::size_t input_dim, std::size_t hidden_dim) {
  GruParams p;
  p.has_input = input_dim > 0;
  if (p.has_input) {
    p.w_r = init.matrix(hidden_dim, input_dim);
    p.w_z = init.matrix(hidden_dim, input_dim);
    p.w_h = init.matrix(hidden_dim, input_dim);
  }
  p.u_r = init.matrix(hidden_dim, hidden_dim);
  p.u_z = init.matrix(hidden_dim, hidden_dim);
  p.u_h = init.matrix(hidden_dim, hidden_dim);
  p.b_r = init.bias(hidden_dim, hidden_dim);
  p.b_z = init.bias(hidden_dim, hidden_dim);
  p.b_h = init.bias(hidden_dim, hidden_dim);
  return p;
}

ContextGruParams make_context_gru(Initializer& init, std::size_t input_dim,
                                  std::size_t hidden_dim, std::size_t context_dim) {
  ContextGruParams p;
  p.base = make_gru(init, input_dim, hidden_dim);
  p.c_r = init.matrix(hidden_dim, context_dim);
  p.c_z = init.matrix(hidden_dim, context_dim);
  p.c_h = init.matrix(hidden_dim, context_dim);
  return p;
}

AttentionParams make_attention(Initializer& init, std::size_t query_dim, std::size_t key_dim,
                               std::size_t score_hidden) {
  // Both column blocks share the fan-in of the full [query; key] input.
  const double bound = 1.0 / std::sqrt(static_cast<double>(query_dim + key_dim));
  AttentionParams p;
  p.w_query = init.matrix(score_hidden, query_dim);
  p.w_key = init.matrix(score_hidden, key_dim);
  const double rescale_q = bound * std::sqrt(static_cast<double>(query_dim));
  const double rescale_k = bound * std::sqrt(static_cast<double>(key_dim));
  for (double& v : p.w_query.values()) v *= rescale_q;
  for (double& v : p.w_key.values()) v *= rescale_k;
  p.u_score = init.bias(score_hidden, score_hidden);
  return p;
}

namespace {

std::size_t hidden_of(const GruWeights<Var>& p) { return p.u_r.shape().rows(); }

void expect_vector(const char* what, Var v, std::size_t n) {
  if (v.shape().rank() != 1 || v.size() != n) {
    throw ContractViolation(std::string(what) + " must have shape [" + std::to_string(n) +
                            "], got " + v.shape().str());
  }
}

// Pre-activation W x + U h + b (+ C c), any absent term skipped.
Var gate_input(Var w, std::optional<Var> x, Var u, Var h, Var b, const Var* c_weight,
               const Var* context) {
  Var acc = add(matmul(u, h), b);
  if (x) acc = add(matmul(w, *x), acc);
  if (c_weight) acc = add(acc, matmul(*c_weight, *context));
  return acc;
}

Var gated_step(const GruWeights<Var>& p, std::optional<Var> x, Var h_prev,
               const ContextGruWeights<Var>* ctx_params, const Var* context) {
  const std::size_t hidden = hidden_of(p);
  expect_vector("hidden state", h_prev, hidden);
  if (x.has_value() != p.has_input) {
    throw ContractViolation(p.has_input ? "this cell requires an input token"
                                        : "this cell takes no input token");
  }
  if (x) expect_vector("cell input", *x, p.w_r.shape().cols());
  if (context) expect_vector("context", *context, ctx_params->c_r.shape().cols());

  const Var* c_r = ctx_params ? &ctx_params->c_r : nullptr;
  const Var* c_z = ctx_params ? &ctx_params->c_z : nullptr;
  const Var* c_h = ctx_params ? &ctx_params->c_h : nullptr;

  Var r = sigmoid(gate_input(p.w_r, x, p.u_r, h_prev, p.b_r, c_r, context));
  Var z = sigmoid(gate_input(p.w_z, x, p.u_z, h_prev, p.b_z, c_z, context));
  Var candidate = tanh(gate_input(p.w_h, x, p.u_h, mul(r, h_prev), p.b_h, c_h, context));
  // (1 - z) * h_prev + z * candidate
  return add(h_prev, mul(z, sub(candidate, h_prev)));
}

}  // namespace

Var gru_step(const GruWeights<Var>& params, std::optional<Var> x, Var h_prev) {
  return gated_step(params, x, h_prev, nullptr, nullptr);
}

Var context_gru_step(const ContextGruWeights<Var>& params, std::optional<Var> x, Var h_prev,
                     Var context) {
  return gated_step(params.base, x, h_prev, &params, &context);
}

std::vector<Var> bidirectional_encode(const GruWeights<Var>& forward,
                                      const GruWeights<Var>& backward, Var series) {
  if (series.shape().rank() != 1) {
    throw ContractViolation("series must be rank-1, got " + series.shape().str());
  }
  const std::size_t m = series.size();
  ad::Tape& tape = *series.tape();

  std::vector<Var> inputs;
  inputs.reserve(m);
  for (std::size_t t = 0; t < m; ++t) inputs.push_back(ad::slice(series, t, 1));

  std::vector<Var> fwd(m), bwd(m);
  Var h = tape.constant(Tensor(Shape{hidden_of(forward)}));
  for (std::size_t t = 0; t < m; ++t) fwd[t] = h = gru_step(forward, inputs[t], h);
  h = tape.constant(Tensor(Shape{hidden_of(backward)}));
  for (std::size_t t = m; t-- > 0;) bwd[t] = h = gru_step(backward, inputs[t], h);

  std::vector<Var> out;
  out.reserve(m);
  for (std::size_t t = 0; t < m; ++t) {
    const Var both[] = {fwd[t], bwd[t]};
    out.push_back(ad::concat(both));
  }
  return out;
}

AttentionKeys prepare_keys(const AttentionWeights<Var>& params, std::span<const Var> keys) {
  if (keys.empty()) throw ContractViolation("attention needs at least one key");
  const std::size_t key_dim = params.w_key.shape().cols();
  const std::size_t score_hidden = params.w_key.shape().rows();
  std::vector<Var> projections;
  projections.reserve(keys.size());
  for (Var k : keys) {
    expect_vector("attention key", k, key_dim);
    projections.push_back(matmul(params.w_key, k));
  }
  ad::Tape& tape = *keys.front().tape();
  AttentionKeys prepared;
  prepared.count = keys.size();
  prepared.stacked = reshape(ad::concat(keys), Shape{keys.size(), key_dim});
  prepared.projected = reshape(ad::concat(projections), Shape{keys.size(), score_hidden});
  prepared.ones = tape.constant(Tensor(Shape{keys.size(), 1}, 1.0));
  return prepared;
}

Var attention_weights(const AttentionWeights<Var>& params, Var query, const AttentionKeys& keys) {
  expect_vector("attention query", query, params.w_query.shape().cols());
  const std::size_t score_hidden = params.w_query.shape().rows();
  Var q = reshape(matmul(params.w_query, query), Shape{1, score_hidden});
  Var hidden = tanh(add(keys.projected, matmul(keys.ones, q)));
  return softmax(matmul(hidden, params.u_score));
}

Var attention_weights(const AttentionWeights<Var>& params, Var query, std::span<const Var> keys) {
  return attention_weights(params, query, prepare_keys(params, keys));
}

Var context_vector(Var coefficients, const AttentionKeys& keys) {
  expect_vector("attention coefficients", coefficients, keys.count);
  const std::size_t key_dim = keys.stacked.shape().cols();
  return reshape(matmul(reshape(coefficients, Shape{1, keys.count}), keys.stacked),
                 Shape{key_dim});
}

Var context_vector(Var coefficients, std::span<const Var> keys) {
  if (keys.empty()) throw ContractViolation("context needs at least one key");
  if (coefficients.size() != keys.size()) {
    throw ContractViolation("got " + std::to_string(coefficients.size()) +
                            " coefficients for " + std::to_string(keys.size()) + " keys");
  }
  AttentionKeys stacked;
  stacked.count = keys.size();
  const std::size_t key_dim = keys.front().size();
  for (Var k : keys) expect_vector("key", k, key_dim);
  stacked.stacked = reshape(ad::concat(keys), Shape{keys.size(), key_dim});
  return context_vector(coefficients, stacked);
}

}  // namespace seq2graph::nn
