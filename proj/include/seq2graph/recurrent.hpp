// SPDX-License-Identifier: Apache-2.0
//
// GRU cells and additive attention shared by the temporal and inter-series levels.
//
// Weight bundles are templated on their element type: Tensor for storage and
// checkpoints, ad::Var once bound to a tape for a forward pass.
#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "seq2graph/autodiff.hpp"
#include "seq2graph/tensor.hpp"

namespace seq2graph::nn {

using ad::Var;

/// Gate weights of a GRU. Input matrices are absent (has_input == false) for cells
/// driven by context only.
template <class T>
struct GruWeights {
  bool has_input = true;
  T w_r, w_z, w_h;  // hidden x input
  T u_r, u_z, u_h;  // hidden x hidden
  T b_r, b_z, b_h;  // hidden

  template <class F>
  void visit(F&& f) { visit_fields(*this, f); }
  template <class F>
  void visit(F&& f) const { visit_fields(*this, f); }

 private:
  template <class Self, class F>
  static void visit_fields(Self& self, F& f) {
    if (self.has_input) {
      f("w_r", self.w_r);
      f("w_z", self.w_z);
      f("w_h", self.w_h);
    }
    f("u_r", self.u_r);
    f("u_z", self.u_z);
    f("u_h", self.u_h);
    f("b_r", self.b_r);
    f("b_z", self.b_z);
    f("b_h", self.b_h);
  }
};

/// GRU whose gates each receive an extra linear term of a context vector.
template <class T>
struct ContextGruWeights {
  GruWeights<T> base;
  T c_r, c_z, c_h;  // hidden x context

  template <class F>
  void visit(F&& f) { visit_fields(*this, f); }
  template <class F>
  void visit(F&& f) const { visit_fields(*this, f); }

 private:
  template <class Self, class F>
  static void visit_fields(Self& self, F& f) {
    self.base.visit(f);
    f("c_r", self.c_r);
    f("c_z", self.c_z);
    f("c_h", self.c_h);
  }
};

/// score(query, key) = u_score . tanh(W_score [query; key]). W_score is kept as its
/// two column blocks so key projections can be computed once per key set.
template <class T>
struct AttentionWeights {
  T w_query;  // score_hidden x query_dim
  T w_key;    // score_hidden x key_dim
  T u_score;  // score_hidden

  template <class F>
  void visit(F&& f) { visit_fields(*this, f); }
  template <class F>
  void visit(F&& f) const { visit_fields(*this, f); }

 private:
  template <class Self, class F>
  static void visit_fields(Self& self, F& f) {
    f("w_query", self.w_query);
    f("w_key", self.w_key);
    f("u_score", self.u_score);
  }
};

using GruParams = GruWeights<Tensor>;
using ContextGruParams = ContextGruWeights<Tensor>;
using AttentionParams = AttentionWeights<Tensor>;

/// Deterministic uniform initialization in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : engine_(seed) {}
  Tensor matrix(std::size_t rows, std::size_t cols);
  /// Bias whose bound follows the fan-in of the layer it belongs to.
  Tensor bias(std::size_t size, std::size_t fan_in);
  std::mt19937_64& engine() { return engine_; }

 private:
  double draw(double bound);
  std::mt19937_64 engine_;
};

GruParams make_gru(Initializer& init, std::size_t input_dim, std::size_t hidden_dim);
ContextGruParams make_context_gru(Initializer& init, std::size_t input_dim,
                                  std::size_t hidden_dim, std::size_t context_dim);
AttentionParams make_attention(Initializer& init, std::size_t query_dim, std::size_t key_dim,
                               std::size_t score_hidden);

/// Copies every tensor of a storage bundle onto the tape as a differentiable leaf.
template <template <class> class Bundle>
Bundle<Var> bind(ad::Tape& tape, const Bundle<Tensor>& params) {
  Bundle<Var> bound;
  std::vector<const Tensor*> tensors;
  params.visit([&](const char*, const Tensor& t) { tensors.push_back(&t); });
  if constexpr (requires { bound.base.has_input; }) {
    bound.base.has_input = params.base.has_input;
  } else if constexpr (requires { bound.has_input; }) {
    bound.has_input = params.has_input;
  }
  std::size_t i = 0;
  bound.visit([&](const char*, Var& v) { v = tape.leaf(*tensors[i++]); });
  return bound;
}

/// h_t = (1 - z) * h_prev + z * h~ with reset/update gates r, z.
Var gru_step(const GruWeights<Var>& params, std::optional<Var> x, Var h_prev);

/// gru_step where each gate pre-activation also receives C_g * context.
Var context_gru_step(const ContextGruWeights<Var>& params, std::optional<Var> x, Var h_prev,
                     Var context);

/// Encodes a scalar series of length m into m states [forward_t ; backward_t].
std::vector<Var> bidirectional_encode(const GruWeights<Var>& forward,
                                      const GruWeights<Var>& backward, Var series);

/// Keys stacked into a matrix with their score projections cached.
struct AttentionKeys {
  Var stacked;    // count x key_dim
  Var projected;  // count x score_hidden
  Var ones;       // count x 1
  std::size_t count = 0;
};

AttentionKeys prepare_keys(const AttentionWeights<Var>& params, std::span<const Var> keys);

/// Normalized coefficients over the prepared keys for one query.
Var attention_weights(const AttentionWeights<Var>& params, Var query, const AttentionKeys& keys);
Var attention_weights(const AttentionWeights<Var>& params, Var query, std::span<const Var> keys);

/// sum_j coefficients[j] * key_j
Var context_vector(Var coefficients, const AttentionKeys& keys);
Var context_vector(Var coefficients, std::span<const Var> keys);

}  // namespace seq2graph::nn
