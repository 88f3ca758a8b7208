// SPDX-License-Identifier: Apache-2.0
//
// The four-stage network: per-series bidirectional encoders, per-series dual-purpose
// decoders with temporal attention, a shared transformation layer, and one decoder
// with attention across series.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "seq2graph/autodiff.hpp"
#include "seq2graph/recurrent.hpp"
#include "seq2graph/tensor.hpp"

namespace seq2graph::model {

using ad::Var;
using nn::AttentionWeights;
using nn::ContextGruWeights;
using nn::GruWeights;

struct ModelConfig {
  std::size_t series = 2;
  std::size_t window = 8;
  std::size_t enc_hidden = 16;
  std::size_t dp_hidden = 16;
  std::size_t dec_hidden = 16;
  std::size_t v_dim = 0;     // 0 selects dp_hidden
  std::size_t feat_dim = 0;  // 0 selects dec_hidden
  std::size_t temporal_score_hidden = 0;  // 0 selects the key width (2 * enc_hidden)
  std::size_t inter_score_hidden = 0;     // 0 selects feat_dim
  bool share_temporal_attention = true;
  std::uint64_t seed = 0;

  std::size_t resolved_v_dim() const { return v_dim ? v_dim : dp_hidden; }
  std::size_t resolved_feat_dim() const { return feat_dim ? feat_dim : dec_hidden; }
  std::size_t encoding_dim() const { return 2 * enc_hidden; }
  std::size_t resolved_temporal_score_hidden() const {
    return temporal_score_hidden ? temporal_score_hidden : encoding_dim();
  }
  std::size_t resolved_inter_score_hidden() const {
    return inter_score_hidden ? inter_score_hidden : resolved_feat_dim();
  }

  /// Throws ContractViolation when a count or width is zero.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// v_t = tanh(W_o v_{t-1} + U_o s_t + C_o c_t + b_o)
template <class T>
struct OutputWeights {
  T w_o, u_o, c_o, b_o;

  template <class F>
  void visit(F&& f) { visit_fields(*this, f); }
  template <class F>
  void visit(F&& f) const { visit_fields(*this, f); }

 private:
  template <class Self, class F>
  static void visit_fields(Self& self, F& f) {
    f("w_o", self.w_o);
    f("u_o", self.u_o);
    f("c_o", self.c_o);
    f("b_o", self.b_o);
  }
};

/// Extra decoder weights for the multi-step single-series variant, where the previous
/// prediction feeds the decoder cell and the output layer.
template <class T>
struct HorizonWeights {
  T w_r, w_z, w_h;  // dec_hidden x 1
  T w_y;            // 1 x 1

  template <class F>
  void visit(F&& f) { visit_fields(*this, f); }
  template <class F>
  void visit(F&& f) const { visit_fields(*this, f); }

 private:
  template <class Self, class F>
  static void visit_fields(Self& self, F& f) {
    f("w_r", self.w_r);
    f("w_z", self.w_z);
    f("w_h", self.w_h);
    f("w_y", self.w_y);
  }
};

template <class T>
struct ModelWeights {
  std::vector<GruWeights<T>> encoder_forward;   // one per series
  std::vector<GruWeights<T>> encoder_backward;  // one per series
  std::vector<ContextGruWeights<T>> dual_cell;  // one per series
  std::vector<OutputWeights<T>> dual_output;    // one per series
  std::vector<AttentionWeights<T>> temporal_attention;  // 1 when shared, else one per series
  T transform_w, transform_b;
  ContextGruWeights<T> decoder_cell;
  AttentionWeights<T> inter_attention;
  T decoder_c_o, decoder_u_o, decoder_b_o;
  HorizonWeights<T> horizon;

  const AttentionWeights<T>& temporal_attention_for(std::size_t series) const {
    return temporal_attention.size() == 1 ? temporal_attention.front()
                                          : temporal_attention[series];
  }

  /// Visits every tensor with a stable dotted name, in checkpoint order.
  template <class F>
  void visit(F&& f) { visit_fields(*this, f); }
  template <class F>
  void visit(F&& f) const { visit_fields(*this, f); }

 private:
  template <class Self, class F>
  static void visit_fields(Self& self, F& f) {
    auto scoped = [&f](std::string prefix) {
      return [&f, prefix = std::move(prefix)](const char* name, auto& value) {
        f(prefix + name, value);
      };
    };
    for (std::size_t d = 0; d < self.encoder_forward.size(); ++d) {
      const std::string s = "series" + std::to_string(d) + ".";
      self.encoder_forward[d].visit(scoped(s + "encoder_forward."));
      self.encoder_backward[d].visit(scoped(s + "encoder_backward."));
      self.dual_cell[d].visit(scoped(s + "dual_cell."));
      self.dual_output[d].visit(scoped(s + "dual_output."));
    }
    for (std::size_t a = 0; a < self.temporal_attention.size(); ++a) {
      self.temporal_attention[a].visit(scoped("temporal_attention" + std::to_string(a) + "."));
    }
    f(std::string("transform.w"), self.transform_w);
    f(std::string("transform.b"), self.transform_b);
    self.decoder_cell.visit(scoped("decoder_cell."));
    self.inter_attention.visit(scoped("inter_attention."));
    f(std::string("decoder_output.c_o"), self.decoder_c_o);
    f(std::string("decoder_output.u_o"), self.decoder_u_o);
    f(std::string("decoder_output.b_o"), self.decoder_b_o);
    self.horizon.visit(scoped("horizon."));
  }
};

using ModelParams = ModelWeights<Tensor>;
using BoundParams = ModelWeights<Var>;

/// Seeded initialization; every tensor's shape follows from the config.
ModelParams init_params(const ModelConfig& config);

std::size_t parameter_count(const ModelParams& params);

/// All tensors concatenated in visit order, and the inverse.
Tensor flatten(const ModelParams& params);
ModelParams unflatten(const ModelParams& like, std::span<const double> flat);

/// Places every parameter on the tape as a differentiable leaf.
BoundParams bind(ad::Tape& tape, const ModelParams& params);

/// Slices a single flat parameter variable into the model structure (gradient checks).
BoundParams bind_flat(const ModelParams& like, Var flat);

struct DualPurposeOutput {
  std::vector<Var> v_sequence;  // m vectors of v_dim
  std::vector<Var> alphas;      // m rows over m lags
};

DualPurposeOutput dual_purpose_decode(const ContextGruWeights<Var>& cell,
                                      const OutputWeights<Var>& output,
                                      const AttentionWeights<Var>& attention,
                                      std::span<const Var> encodings);

Var transform_features(Var transform_w, Var transform_b, std::span<const Var> v_sequence);

struct InterDecodeOutput {
  std::vector<Var> y_hat;  // D scalars, shape [1]
  std::vector<Var> betas;  // D rows over D input series
};

struct DecoderWeights {
  const ContextGruWeights<Var>* cell;
  const AttentionWeights<Var>* attention;
  Var c_o, u_o, b_o;
};

InterDecodeOutput decode_inter(const DecoderWeights& decoder, std::span<const Var> features);

/// Multi-step variant: q_i = GRU_D(y_{i-1}, q_{i-1}, c_i),
/// y_i = tanh(w_y y_{i-1} + C_o c_i + U_o q_i + b_o), y_0 = 0.
InterDecodeOutput decode_horizon(const DecoderWeights& decoder, const HorizonWeights<Var>& head,
                                 std::span<const Var> features, std::size_t horizon);

/// Graph of one forward pass on a tape.
struct ForwardGraph {
  Var y_hat;  // [D] (or [horizon] for multi-step)
  std::vector<std::vector<Var>> alphas;
  std::vector<Var> betas;
  std::vector<std::vector<Var>> v_sequences;
};

/// window: shape [m, D], rows oldest to newest.
ForwardGraph build_forward(const ModelConfig& config, const BoundParams& params,
                           const Tensor& window);
ForwardGraph build_multi_step(const ModelConfig& config, const BoundParams& params,
                              const Tensor& window, std::size_t target_series,
                              std::size_t horizon);

/// Plain-value record of one forward pass.
struct ForwardTrace {
  Tensor alphas;       // [D, m, m]: series, decode step, key position (oldest first)
  Tensor betas;        // [D, D]: output series i, input series d
  Tensor y_hat;        // [D]
  Tensor v_sequences;  // [D, m, v_dim]
  /// Set when an input value falls outside [-0.01, 1.01].
  bool input_out_of_range = false;

  double alpha(std::size_t d, std::size_t t, std::size_t j) const;
  double beta(std::size_t i, std::size_t d) const { return betas.at(i, d); }
};

struct Model {
  ModelConfig config;
  ModelParams params;
};

Model make_model(const ModelConfig& config);

void check_window(const ModelConfig& config, const Tensor& window);

ForwardTrace forward(const Model& model, const Tensor& window);

struct MultiStepTrace {
  Tensor y_hat;  // [horizon]
  Tensor betas;  // [horizon, D]
  std::size_t target_series = 0;
};

MultiStepTrace multi_step_forward(const Model& model, const Tensor& window,
                                  std::size_t target_series, std::size_t horizon);

}  // namespace seq2graph::model
