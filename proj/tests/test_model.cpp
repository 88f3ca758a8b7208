// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracle.hpp"
#include "seq2graph/checkpoint.hpp"
#include "seq2graph/error.hpp"
#include "seq2graph/model.hpp"
#include "seq2graph/training.hpp"
#include "test_util.hpp"

using namespace seq2graph;
using ad::Var;

namespace {

model::ModelConfig small_config(std::size_t series, std::size_t window, std::size_t width) {
  model::ModelConfig c;
  c.series = series;
  c.window = window;
  c.enc_hidden = c.dp_hidden = c.dec_hidden = width;
  c.seed = 42;
  return c;
}

model::ModelParams zeros(const model::ModelConfig& c) {
  auto p = model::init_params(c);
  p.visit([](const std::string&, Tensor& t) {
    for (double& v : t.values()) v = 0.0;
  });
  return p;
}

Tensor random_window(std::mt19937_64& rng, std::size_t m, std::size_t D) {
  return test::random_tensor(rng, Shape{m, D}, 0.0, 1.0);
}

std::vector<Var> random_keys(ad::Tape& tape, std::mt19937_64& rng, std::size_t count,
                             std::size_t dim, std::vector<oracle::Vec>& mirror) {
  std::vector<Var> keys;
  for (std::size_t j = 0; j < count; ++j) {
    const Tensor k = test::random_tensor(rng, Shape{dim});
    keys.push_back(tape.constant(k));
    mirror.push_back(oracle::vec(k));
  }
  return keys;
}

}  // namespace

TEST_CASE("model config validation and defaults") {
  model::ModelConfig c;
  CHECK(c.resolved_v_dim() == c.dp_hidden);
  CHECK(c.resolved_feat_dim() == c.dec_hidden);
  CHECK(c.resolved_temporal_score_hidden() == 2 * c.enc_hidden);
  c.window = 0;
  CHECK_THROWS_AS(c.validate(), ContractViolation);
  c.window = 8;
  c.dec_hidden = 0;
  CHECK_THROWS_AS(model::init_params(c), ContractViolation);
}

TEST_CASE("parameter count is a function of the config") {
  const auto c = small_config(2, 8, 16);
  CHECK(model::parameter_count(model::init_params(c)) ==
        model::parameter_count(model::init_params(c)));
  auto other = c;
  other.seed = 7;
  CHECK(model::parameter_count(model::init_params(other)) ==
        model::parameter_count(model::init_params(c)));
  auto unshared = c;
  unshared.share_temporal_attention = false;
  CHECK(model::parameter_count(model::init_params(unshared)) >
        model::parameter_count(model::init_params(c)));
}

TEST_CASE("dual_purpose_decode") {
  SUBCASE("window of one gives alpha one") {
    const auto c = small_config(1, 1, 3);
    ad::Tape tape;
    const auto p = model::bind(tape, model::init_params(c));
    const Var keys[] = {tape.constant(Tensor(Shape{6}, 0.3))};
    const auto out = model::dual_purpose_decode(p.dual_cell[0], p.dual_output[0],
                                                p.temporal_attention_for(0), keys);
    REQUIRE(out.alphas.size() == 1);
    CHECK(out.alphas[0].value()[0] == 1.0);
  }
  SUBCASE("zero parameters give zero outputs and uniform alphas") {
    const auto c = small_config(1, 4, 3);
    ad::Tape tape;
    const auto p = model::bind(tape, zeros(c));
    std::mt19937_64 rng(1);
    std::vector<oracle::Vec> mirror;
    const auto keys = random_keys(tape, rng, 4, 6, mirror);
    const auto out = model::dual_purpose_decode(p.dual_cell[0], p.dual_output[0],
                                                p.temporal_attention_for(0), keys);
    for (const Var& v : out.v_sequence)
      for (double x : v.value().values()) CHECK(x == 0.0);
    for (const Var& a : out.alphas)
      for (double x : a.value().values()) CHECK(x == doctest::Approx(0.25).epsilon(1e-15));
  }
  SUBCASE("wrong encoding width is rejected") {
    const auto c = small_config(1, 2, 3);
    ad::Tape tape;
    const auto p = model::bind(tape, model::init_params(c));
    const Var keys[] = {tape.constant(Tensor(Shape{5})), tape.constant(Tensor(Shape{5}))};
    CHECK_THROWS_AS(model::dual_purpose_decode(p.dual_cell[0], p.dual_output[0],
                                               p.temporal_attention_for(0), keys),
                    ContractViolation);
  }
  SUBCASE("matches the scalar transcription") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
      auto c = small_config(1, test::pick(rng, 1, 4), test::pick(rng, 1, 4));
      c.v_dim = test::pick(rng, 0, 3);
      c.seed = rng();
      const auto params = test::scaled_params(c, 2.0);
      ad::Tape tape;
      const auto p = model::bind(tape, params);
      std::vector<oracle::Vec> mirror;
      const auto keys = random_keys(tape, rng, c.window, c.encoding_dim(), mirror);
      const auto got = model::dual_purpose_decode(p.dual_cell[0], p.dual_output[0],
                                                  p.temporal_attention_for(0), keys);
      const auto want = oracle::dual_purpose(params.dual_cell[0], params.dual_output[0],
                                             params.temporal_attention[0], mirror);
      for (std::size_t t = 0; t < c.window; ++t) {
        const Tensor v = got.v_sequence[t].value(), a = got.alphas[t].value();
        for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(v[i] - want.v[t][i]) <= 1e-12);
        for (std::size_t j = 0; j < a.size(); ++j)
          CHECK(std::abs(a[j] - want.alpha[t][j]) <= 1e-12);
      }
    }
  }
}

TEST_CASE("transform_features") {
  ad::Tape tape;
  std::mt19937_64 rng(3);
  const Tensor w = test::random_tensor(rng, Shape{3, 8});
  SUBCASE("zero input and bias give zero") {
    const Var seq[] = {tape.constant(Tensor(Shape{2})), tape.constant(Tensor(Shape{2})),
                       tape.constant(Tensor(Shape{2})), tape.constant(Tensor(Shape{2}))};
    const Tensor f =
        model::transform_features(tape.constant(w), tape.constant(Tensor(Shape{3})), seq).value();
    for (double v : f.values()) CHECK(v == 0.0);
  }
  SUBCASE("outputs in the open unit interval and order sensitive") {
    std::vector<Var> seq;
    for (int t = 0; t < 4; ++t) seq.push_back(tape.constant(test::random_tensor(rng, Shape{2}, -3, 3)));
    const Var b = tape.constant(test::random_tensor(rng, Shape{3}));
    const Tensor f = model::transform_features(tape.constant(w), b, seq).value();
    for (double v : f.values()) {
      CHECK(v > -1.0);
      CHECK(v < 1.0);
    }
    std::swap(seq[0], seq[3]);
    const Tensor g = model::transform_features(tape.constant(w), b, seq).value();
    bool differs = false;
    for (std::size_t i = 0; i < 3; ++i) differs = differs || f[i] != g[i];
    CHECK(differs);
  }
  SUBCASE("wrong count is rejected") {
    const Var seq[] = {tape.constant(Tensor(Shape{2})), tape.constant(Tensor(Shape{2}))};
    CHECK_THROWS_AS(
        model::transform_features(tape.constant(w), tape.constant(Tensor(Shape{3})), seq),
        ContractViolation);
  }
}

TEST_CASE("decode_inter") {
  SUBCASE("one series gives beta one") {
    const auto c = small_config(1, 2, 3);
    ad::Tape tape;
    const auto p = model::bind(tape, model::init_params(c));
    const Var features[] = {tape.constant(Tensor(Shape{3}, 0.2))};
    const model::DecoderWeights dec{&p.decoder_cell, &p.inter_attention, p.decoder_c_o,
                                    p.decoder_u_o, p.decoder_b_o};
    const auto out = model::decode_inter(dec, features);
    CHECK(out.betas[0].value()[0] == 1.0);
  }
  SUBCASE("identical features give uniform betas") {
    const auto c = small_config(3, 2, 3);
    ad::Tape tape;
    const auto p = model::bind(tape, model::init_params(c));
    Var f = tape.constant(Tensor::vector({0.1, -0.5, 0.7}));
    const Var features[] = {f, f, f};
    const model::DecoderWeights dec{&p.decoder_cell, &p.inter_attention, p.decoder_c_o,
                                    p.decoder_u_o, p.decoder_b_o};
    const auto out = model::decode_inter(dec, features);
    for (const Var& b : out.betas)
      for (double v : b.value().values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("matches the scalar transcription") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
      auto c = small_config(test::pick(rng, 1, 4), 2, test::pick(rng, 1, 4));
      c.feat_dim = test::pick(rng, 0, 3);
      c.seed = rng();
      const auto params = test::scaled_params(c, 2.0);
      ad::Tape tape;
      const auto p = model::bind(tape, params);
      std::vector<oracle::Vec> mirror;
      const auto features = random_keys(tape, rng, c.series, c.resolved_feat_dim(), mirror);
      const model::DecoderWeights dec{&p.decoder_cell, &p.inter_attention, p.decoder_c_o,
                                      p.decoder_u_o, p.decoder_b_o};
      const auto got = model::decode_inter(dec, features);
      const auto want = oracle::decode(params.decoder_cell, params.inter_attention,
                                       params.decoder_c_o, params.decoder_u_o,
                                       params.decoder_b_o, mirror);
      for (std::size_t i = 0; i < c.series; ++i) {
        CHECK(std::abs(got.y_hat[i].value()[0] - want.y[i]) <= 1e-12);
        const Tensor b = got.betas[i].value();
        for (std::size_t d = 0; d < c.series; ++d)
          CHECK(std::abs(b[d] - want.beta[i][d]) <= 1e-12);
      }
    }
  }
}

TEST_CASE("forward trace shapes and invariants") {
  std::mt19937_64 rng(5);
  SUBCASE("two series, window eight, width sixteen") {
    const auto m = model::make_model(small_config(2, 8, 16));
    const auto trace = model::forward(m, random_window(rng, 8, 2));
    CHECK(trace.alphas.shape() == Shape({2, 8, 8}));
    CHECK(trace.betas.shape() == Shape({2, 2}));
    CHECK(trace.y_hat.shape() == Shape({2}));
    CHECK(trace.v_sequences.shape() == Shape({2, 8, 16}));
    CHECK_FALSE(trace.input_out_of_range);
  }
  SUBCASE("random configs are row-stochastic with outputs in (-1, 1)") {
    for (int trial = 0; trial < 100; ++trial) {
      const auto c = test::random_config(rng);
      const model::Model m{c, test::scaled_params(c, 2.0)};
      const auto trace = model::forward(m, random_window(rng, c.window, c.series));
      for (std::size_t d = 0; d < c.series; ++d) {
        for (std::size_t t = 0; t < c.window; ++t) {
          double row = 0.0;
          for (std::size_t j = 0; j < c.window; ++j) {
            CHECK(trace.alpha(d, t, j) > 0.0);
            row += trace.alpha(d, t, j);
          }
          CHECK(std::abs(row - 1.0) <= 1e-12);
        }
        double row = 0.0;
        for (std::size_t k = 0; k < c.series; ++k) row += trace.beta(d, k);
        CHECK(std::abs(row - 1.0) <= 1e-12);
        CHECK(std::abs(trace.y_hat[d]) < 1.0);
      }
    }
  }
  SUBCASE("out-of-range inputs are flagged but still evaluated") {
    const auto m = model::make_model(small_config(2, 3, 4));
    Tensor w = random_window(rng, 3, 2);
    w.at(1, 1) = 1.5;
    const auto trace = model::forward(m, w);
    CHECK(trace.input_out_of_range);
    CHECK(trace.y_hat.all_finite());
  }
  SUBCASE("wrong window shape is rejected") {
    const auto m = model::make_model(small_config(2, 3, 4));
    CHECK_THROWS_AS(model::forward(m, random_window(rng, 4, 2)), ContractViolation);
  }
}

TEST_CASE("forward is deterministic") {
  std::mt19937_64 rng(6);
  const auto c = small_config(2, 5, 6);
  const Tensor w = random_window(rng, 5, 2);
  const auto a = model::forward(model::make_model(c), w);
  const auto b = model::forward(model::make_model(c), w);
  for (std::size_t i = 0; i < a.alphas.size(); ++i) CHECK(a.alphas[i] == b.alphas[i]);
  for (std::size_t i = 0; i < a.betas.size(); ++i) CHECK(a.betas[i] == b.betas[i]);
  for (std::size_t i = 0; i < a.y_hat.size(); ++i) CHECK(a.y_hat[i] == b.y_hat[i]);
}

TEST_CASE("duplicated series with identical per-series weights give uniform betas") {
  std::mt19937_64 rng(7);
  const auto c = small_config(2, 5, 4);
  auto params = model::init_params(c);
  params.encoder_forward[1] = params.encoder_forward[0];
  params.encoder_backward[1] = params.encoder_backward[0];
  params.dual_cell[1] = params.dual_cell[0];
  params.dual_output[1] = params.dual_output[0];
  Tensor w(Shape{5, 2});
  for (std::size_t t = 0; t < 5; ++t) w.at(t, 0) = w.at(t, 1) = test::uniform(rng, 0, 1);
  const auto trace = model::forward(model::Model{c, params}, w);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t d = 0; d < 2; ++d) CHECK(trace.beta(i, d) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("multi-step forward") {
  std::mt19937_64 rng(8);
  const auto m = model::make_model(small_config(3, 4, 4));
  const Tensor w = random_window(rng, 4, 3);
  for (std::size_t horizon : {1u, 3u}) {
    const auto trace = model::multi_step_forward(m, w, 1, horizon);
    CHECK(trace.y_hat.size() == horizon);
    CHECK(trace.betas.shape() == Shape({horizon, 3}));
    for (std::size_t i = 0; i < horizon; ++i) {
      double row = 0.0;
      for (std::size_t d = 0; d < 3; ++d) row += trace.betas.at(i, d);
      CHECK(std::abs(row - 1.0) <= 1e-12);
    }
  }
  CHECK_THROWS_AS(model::multi_step_forward(m, w, 3, 1), ContractViolation);
  CHECK_THROWS_AS(model::multi_step_forward(m, w, 0, 0), ContractViolation);
}

TEST_CASE("full loss gradient matches central differences") {
  std::mt19937_64 rng(9);
  const auto c = small_config(2, 4, 4);
  const auto params = model::init_params(c);
  const Tensor window = random_window(rng, 4, 2);
  const Tensor target = test::random_tensor(rng, Shape{2}, 0, 1);
  const double err = ad::finite_difference_check(
      [&](ad::Tape&, Var flat) {
        const auto bound = model::bind_flat(params, flat);
        return train::mse_loss(model::build_forward(c, bound, window).y_hat, target);
      },
      model::flatten(params), 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("flatten and unflatten are inverse") {
  const auto c = small_config(2, 3, 3);
  const auto p = model::init_params(c);
  const Tensor flat = model::flatten(p);
  CHECK(flat.size() == model::parameter_count(p));
  const auto back = model::unflatten(p, flat.values());
  CHECK(model::flatten(back).values().size() == flat.size());
  const Tensor again = model::flatten(back);
  for (std::size_t i = 0; i < flat.size(); ++i) CHECK(again[i] == flat[i]);
  CHECK_THROWS_AS(model::unflatten(p, std::vector<double>(3)), ContractViolation);
}

TEST_CASE("checkpoint round-trips exactly") {
  auto c = small_config(2, 4, 5);
  c.share_temporal_attention = false;
  model::Checkpoint cp{model::make_model(c), {"alpha", "beta"}, {}};
  cp.scaler.min = {0.1, -3.0};
  cp.scaler.max = {0.9, 1.0 / 3.0};
  cp.scaler.constant = {false, true};
  const auto dir = test::temp_dir("checkpoint");
  model::save_checkpoint(cp, dir / "cp.json");
  const auto back = model::load_checkpoint(dir / "cp.json");
  CHECK(back.model.config == c);
  CHECK(back.series_names == cp.series_names);
  CHECK(back.scaler.min == cp.scaler.min);
  CHECK(back.scaler.max == cp.scaler.max);
  CHECK(back.scaler.constant == cp.scaler.constant);
  const Tensor a = model::flatten(cp.model.params), b = model::flatten(back.model.params);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  CHECK(model::checkpoint_to_json(back) == model::checkpoint_to_json(cp));

  std::string text = model::checkpoint_to_json(cp);
  const auto pos = text.find("\"version\":1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 11, "\"version\":9");
  CHECK_THROWS_AS(model::checkpoint_from_json(text), SchemaError);
  CHECK_THROWS_AS(model::checkpoint_from_json("{}"), SchemaError);
  CHECK_THROWS_AS(model::load_checkpoint(dir / "missing.json"), IngestionError);
}
