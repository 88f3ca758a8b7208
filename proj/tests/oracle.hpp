// SPDX-License-Identifier: Apache-2.0
//
// Loop-by-loop scalar transcriptions of the cell, attention and decoder.
// They share nothing with the library except reading raw weight values.
#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "seq2graph/model.hpp"
#include "seq2graph/recurrent.hpp"
#include "seq2graph/tensor.hpp"

namespace oracle {

using Vec = std::vector<double>;

struct Mat {
  std::size_t rows = 0, cols = 0;
  Vec v;
  double operator()(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
};

inline Mat mat(const seq2graph::Tensor& t) {
  Mat m;
  m.rows = t.shape().rank() == 2 ? t.shape()[0] : t.size();
  m.cols = t.shape().rank() == 2 ? t.shape()[1] : 1;
  m.v.assign(t.values().begin(), t.values().end());
  return m;
}

inline Vec vec(const seq2graph::Tensor& t) { return Vec(t.values().begin(), t.values().end()); }

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Row r of M times x.
inline double row_dot(const Mat& m, std::size_t r, const Vec& x) {
  double s = 0.0;
  for (std::size_t c = 0; c < m.cols; ++c) s += m(r, c) * x[c];
  return s;
}

struct Gru {
  bool has_input = true;
  Mat wr, wz, wh, ur, uz, uh;
  Vec br, bz, bh;
  bool has_context = false;
  Mat cr, cz, ch;
};

inline Gru gru_from(const seq2graph::nn::GruParams& p) {
  Gru g;
  g.has_input = p.has_input;
  if (p.has_input) {
    g.wr = mat(p.w_r);
    g.wz = mat(p.w_z);
    g.wh = mat(p.w_h);
  }
  g.ur = mat(p.u_r);
  g.uz = mat(p.u_z);
  g.uh = mat(p.u_h);
  g.br = vec(p.b_r);
  g.bz = vec(p.b_z);
  g.bh = vec(p.b_h);
  return g;
}

inline Gru gru_from(const seq2graph::nn::ContextGruParams& p) {
  Gru g = gru_from(p.base);
  g.has_context = true;
  g.cr = mat(p.c_r);
  g.cz = mat(p.c_z);
  g.ch = mat(p.c_h);
  return g;
}

// r = s(Wr x + Ur h + Cr c + br), z likewise, h~ = tanh(Wh x + Uh (r*h) + Ch c + bh),
// h' = (1 - z) h + z h~.
inline Vec gru(const Gru& g, const Vec* x, const Vec& h, const Vec* c) {
  const std::size_t n = h.size();
  Vec r(n), z(n), out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double ar = g.br[i] + row_dot(g.ur, i, h);
    double az = g.bz[i] + row_dot(g.uz, i, h);
    if (x) {
      ar += row_dot(g.wr, i, *x);
      az += row_dot(g.wz, i, *x);
    }
    if (c) {
      ar += row_dot(g.cr, i, *c);
      az += row_dot(g.cz, i, *c);
    }
    r[i] = sigmoid(ar);
    z[i] = sigmoid(az);
  }
  Vec rh(n);
  for (std::size_t i = 0; i < n; ++i) rh[i] = r[i] * h[i];
  for (std::size_t i = 0; i < n; ++i) {
    double a = g.bh[i] + row_dot(g.uh, i, rh);
    if (x) a += row_dot(g.wh, i, *x);
    if (c) a += row_dot(g.ch, i, *c);
    out[i] = (1.0 - z[i]) * h[i] + z[i] * std::tanh(a);
  }
  return out;
}

struct Attention {
  Mat w;  // score_hidden x (query_dim + key_dim), the full scoring matrix
  Vec u;
};

inline Attention attention_from(const seq2graph::nn::AttentionParams& p) {
  const Mat q = mat(p.w_query), k = mat(p.w_key);
  Attention a;
  a.w.rows = q.rows;
  a.w.cols = q.cols + k.cols;
  for (std::size_t r = 0; r < q.rows; ++r) {
    for (std::size_t c = 0; c < q.cols; ++c) a.w.v.push_back(q(r, c));
    for (std::size_t c = 0; c < k.cols; ++c) a.w.v.push_back(k(r, c));
  }
  a.u = vec(p.u_score);
  return a;
}

// coefficient_j = exp(u . tanh(W [q; k_j])) / sum_k exp(...)
inline Vec attend(const Attention& a, const Vec& q, const std::vector<Vec>& keys) {
  Vec e(keys.size());
  double total = 0.0;
  for (std::size_t j = 0; j < keys.size(); ++j) {
    Vec joint = q;
    joint.insert(joint.end(), keys[j].begin(), keys[j].end());
    double score = 0.0;
    for (std::size_t r = 0; r < a.w.rows; ++r) score += a.u[r] * std::tanh(row_dot(a.w, r, joint));
    e[j] = std::exp(score);
    total += e[j];
  }
  for (double& v : e) v /= total;
  return e;
}

inline Vec weighted_sum(const Vec& coef, const std::vector<Vec>& keys) {
  Vec c(keys.front().size(), 0.0);
  for (std::size_t j = 0; j < keys.size(); ++j)
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += coef[j] * keys[j][i];
  return c;
}

struct DualOutput {
  std::vector<Vec> v;
  std::vector<Vec> alpha;
};

// s_t = GRU(v_{t-1}, s_{t-1}, c_t), v_t = tanh(Wo v_{t-1} + Uo s_t + Co c_t + bo)
inline DualOutput dual_purpose(const seq2graph::nn::ContextGruParams& cell,
                               const seq2graph::model::OutputWeights<seq2graph::Tensor>& out,
                               const seq2graph::nn::AttentionParams& att,
                               const std::vector<Vec>& enc) {
  const Gru g = gru_from(cell);
  const Attention a = attention_from(att);
  const Mat wo = mat(out.w_o), uo = mat(out.u_o), co = mat(out.c_o);
  const Vec bo = vec(out.b_o);
  const std::size_t hidden = g.ur.rows, vdim = wo.rows;
  Vec s(hidden, 0.0), v(vdim, 0.0);
  DualOutput res;
  for (std::size_t t = 0; t < enc.size(); ++t) {
    const Vec alpha = attend(a, s, enc);
    const Vec c = weighted_sum(alpha, enc);
    s = gru(g, &v, s, &c);
    Vec next(vdim);
    for (std::size_t i = 0; i < vdim; ++i) {
      next[i] = std::tanh(row_dot(wo, i, v) + row_dot(uo, i, s) + row_dot(co, i, c) + bo[i]);
    }
    v = next;
    res.v.push_back(v);
    res.alpha.push_back(alpha);
  }
  return res;
}

struct InterOutput {
  Vec y;
  std::vector<Vec> beta;
};

// q_i = GRU(q_{i-1}, c_i) without input, y_i = tanh(Co c_i + Uo q_i + bo)
inline InterOutput decode(const seq2graph::nn::ContextGruParams& cell,
                          const seq2graph::nn::AttentionParams& att, const seq2graph::Tensor& c_o,
                          const seq2graph::Tensor& u_o, const seq2graph::Tensor& b_o,
                          const std::vector<Vec>& features) {
  const Gru g = gru_from(cell);
  const Attention a = attention_from(att);
  const Mat co = mat(c_o), uo = mat(u_o);
  const Vec bo = vec(b_o);
  Vec q(g.ur.rows, 0.0);
  InterOutput res;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const Vec beta = attend(a, q, features);
    const Vec c = weighted_sum(beta, features);
    q = gru(g, nullptr, q, &c);
    res.y.push_back(std::tanh(row_dot(co, 0, c) + row_dot(uo, 0, q) + bo[0]));
    res.beta.push_back(beta);
  }
  return res;
}

}  // namespace oracle
