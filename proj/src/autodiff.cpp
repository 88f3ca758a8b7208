// SPDX-License-Identifier: Apache-2.0
#include "seq2graph/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "seq2graph/error.hpp"

namespace seq2graph::ad {

namespace {

[[noreturn]] void shape_error(OpKind kind, const Shape& a, const Shape& b) {
  throw ContractViolation(std::string(op_name(kind)) + ": incompatible shapes " + a.str() +
                          " and " + b.str());
}

void expect_arity(OpKind kind, std::size_t got, std::size_t want) {
  if (got != want) {
    throw ContractViolation(std::string(op_name(kind)) + " takes " + std::to_string(want) +
                            " input(s), got " + std::to_string(got));
  }
}

Shape matmul_shape(const Shape& a, const Shape& b) {
  if (a.rank() > 2 || b.rank() > 2 || a.cols() != b.rows()) shape_error(OpKind::kMatMul, a, b);
  if (b.rank() == 1) return Shape{a.rows()};
  return Shape{a.rows(), b.cols()};
}

// c[i,j] += a[i,k] * b[k,j]
void gemm_acc(const double* a, const double* b, double* c, std::size_t n, std::size_t k,
              std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    double* crow = c + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      const double* brow = b + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
    }
  }
}

template <class F>
Tensor map_unary(const Tensor& x, F f) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

template <class F>
Tensor map_binary(OpKind kind, const Tensor& a, const Tensor& b, F f) {
  if (!(a.shape() == b.shape())) shape_error(kind, a.shape(), b.shape());
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul_elementwise";
    case OpKind::kConcat: return "concat";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kTanh: return "tanh";
    case OpKind::kExp: return "exp";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kScale: return "scale";
    case OpKind::kSlice: return "slice";
    case OpKind::kReshape: return "reshape";
    case OpKind::kSoftmax: return "softmax";
  }
  return "unknown";
}

Tensor primitive_forward(OpKind kind, std::span<const Tensor* const> in, const OpAttrs& attrs) {
  switch (kind) {
    case OpKind::kMatMul: {
      expect_arity(kind, in.size(), 2);
      const Tensor& a = *in[0];
      const Tensor& b = *in[1];
      Tensor out(matmul_shape(a.shape(), b.shape()));
      gemm_acc(a.data(), b.data(), out.data(), a.rows(), a.cols(), b.cols());
      return out;
    }
    case OpKind::kAdd:
      expect_arity(kind, in.size(), 2);
      return map_binary(kind, *in[0], *in[1], [](double x, double y) { return x + y; });
    case OpKind::kSub:
      expect_arity(kind, in.size(), 2);
      return map_binary(kind, *in[0], *in[1], [](double x, double y) { return x - y; });
    case OpKind::kMul:
      expect_arity(kind, in.size(), 2);
      return map_binary(kind, *in[0], *in[1], [](double x, double y) { return x * y; });
    case OpKind::kConcat: {
      if (in.empty()) throw ContractViolation("concat needs at least one input");
      std::vector<double> values;
      for (const Tensor* t : in) {
        if (t->shape().rank() != 1) {
          throw ContractViolation("concat expects rank-1 inputs, got " + t->shape().str());
        }
        values.insert(values.end(), t->values().begin(), t->values().end());
      }
      return Tensor::vector(std::move(values));
    }
    case OpKind::kSigmoid:
      expect_arity(kind, in.size(), 1);
      return map_unary(*in[0], logistic);
    case OpKind::kTanh:
      expect_arity(kind, in.size(), 1);
      return map_unary(*in[0], [](double x) { return std::tanh(x); });
    case OpKind::kExp:
      expect_arity(kind, in.size(), 1);
      return map_unary(*in[0], [](double x) { return std::exp(x); });
    case OpKind::kSum:
    case OpKind::kMean: {
      expect_arity(kind, in.size(), 1);
      double total = 0.0;
      for (double v : in[0]->values()) total += v;
      if (kind == OpKind::kMean) total /= static_cast<double>(in[0]->size());
      return Tensor::scalar(total);
    }
    case OpKind::kScale:
      expect_arity(kind, in.size(), 1);
      return map_unary(*in[0], [f = attrs.factor](double x) { return f * x; });
    case OpKind::kSlice: {
      expect_arity(kind, in.size(), 1);
      const Tensor& a = *in[0];
      if (a.shape().rank() != 1 || attrs.length == 0 || attrs.offset + attrs.length > a.size()) {
        throw ContractViolation("slice [" + std::to_string(attrs.offset) + ", +" +
                                std::to_string(attrs.length) + ") out of range for " +
                                a.shape().str());
      }
      const auto first = a.values().begin() + static_cast<std::ptrdiff_t>(attrs.offset);
      return Tensor::vector(
          std::vector<double>(first, first + static_cast<std::ptrdiff_t>(attrs.length)));
    }
    case OpKind::kReshape: {
      expect_arity(kind, in.size(), 1);
      if (attrs.shape.numel() != in[0]->size()) shape_error(kind, in[0]->shape(), attrs.shape);
      return Tensor(attrs.shape, std::vector<double>(in[0]->values().begin(),
                                                     in[0]->values().end()));
    }
    case OpKind::kSoftmax: {
      expect_arity(kind, in.size(), 1);
      const Tensor& a = *in[0];
      if (a.shape().rank() != 1) {
        throw ContractViolation("softmax expects a rank-1 input, got " + a.shape().str());
      }
      const double top = *std::max_element(a.values().begin(), a.values().end());
      Tensor out(a.shape());
      double total = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = std::exp(a[i] - top);
        total += out[i];
      }
      for (std::size_t i = 0; i < a.size(); ++i) out[i] /= total;
      return out;
    }
    case OpKind::kLeaf:
      break;
  }
  throw ContractViolation("unknown primitive kind " +
                          std::to_string(static_cast<int>(kind)));
}

const Tensor& Var::value() const {
  if (!tape_) throw ContractViolation("variable is not attached to a tape");
  return tape_->value(*this);
}

Var Tape::leaf(Tensor value) {
  nodes_.push_back(Node{OpKind::kLeaf, true, 0, 0, {}, std::move(value)});
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{OpKind::kLeaf, false, 0, 0, {}, std::move(value)});
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

void Tape::check_owned(Var v) const {
  if (v.tape() != this || v.id() >= nodes_.size()) {
    throw ContractViolation("variable does not belong to this tape");
  }
}

Var Tape::apply(OpKind kind, std::span<const Var> inputs, const OpAttrs& attrs) {
  if (kind == OpKind::kLeaf) throw ContractViolation("leaf is not an applicable primitive");
  std::vector<const Tensor*> operands;
  operands.reserve(inputs.size());
  bool requires_grad = false;
  for (Var v : inputs) {
    check_owned(v);
    operands.push_back(&nodes_[v.id()].value);
    requires_grad = requires_grad || nodes_[v.id()].requires_grad;
  }
  Tensor result = primitive_forward(kind, operands, attrs);
  const auto first = static_cast<std::uint32_t>(inputs_.size());
  for (Var v : inputs) inputs_.push_back(v.id());
  nodes_.push_back(Node{kind, requires_grad, first, static_cast<std::uint32_t>(inputs.size()),
                        attrs, std::move(result)});
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

const Tensor& Tape::value(Var v) const {
  check_owned(v);
  return nodes_[v.id()].value;
}

Tensor Tape::grad(Var v) const {
  check_owned(v);
  const Shape& shape = nodes_[v.id()].value.shape();
  if (v.id() >= grads_.size() || grads_[v.id()].empty()) return Tensor(shape);
  return Tensor(shape, grads_[v.id()]);
}

std::vector<double>& Tape::grad_buffer(std::uint32_t id) {
  auto& g = grads_[id];
  if (g.empty()) g.assign(nodes_[id].value.size(), 0.0);
  return g;
}

void Tape::backward(Var loss) {
  check_owned(loss);
  if (nodes_[loss.id()].value.size() != 1) {
    throw ContractViolation("backward needs a single-element loss, got shape " +
                            nodes_[loss.id()].value.shape().str());
  }
  grads_.assign(nodes_.size(), {});
  grads_[loss.id()].assign(1, 1.0);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    if (!grads_[i].empty() && nodes_[i].requires_grad && nodes_[i].kind != OpKind::kLeaf) {
      propagate(i);
    }
  }
}

void Tape::propagate(std::size_t index) {
  const Node& node = nodes_[index];
  const std::vector<double>& g = grads_[index];
  const std::uint32_t* in = inputs_.data() + node.first_input;
  auto wants = [&](std::uint32_t id) { return nodes_[id].requires_grad; };
  const Tensor& y = node.value;

  switch (node.kind) {
    case OpKind::kMatMul: {
      const Tensor& a = nodes_[in[0]].value;
      const Tensor& b = nodes_[in[1]].value;
      const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
      if (wants(in[0])) {
        auto& ga = grad_buffer(in[0]);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) acc += g[i * m + j] * b.data()[p * m + j];
            ga[i * k + p] += acc;
          }
      }
      if (wants(in[1])) {
        auto& gb = grad_buffer(in[1]);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const double aip = a.data()[i * k + p];
            for (std::size_t j = 0; j < m; ++j) gb[p * m + j] += aip * g[i * m + j];
          }
      }
      break;
    }
    case OpKind::kAdd:
    case OpKind::kSub: {
      const double sign = node.kind == OpKind::kSub ? -1.0 : 1.0;
      if (wants(in[0])) {
        auto& ga = grad_buffer(in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (wants(in[1])) {
        auto& gb = grad_buffer(in[1]);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += sign * g[i];
      }
      break;
    }
    case OpKind::kMul: {
      const Tensor& a = nodes_[in[0]].value;
      const Tensor& b = nodes_[in[1]].value;
      if (wants(in[0])) {
        auto& ga = grad_buffer(in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i];
      }
      if (wants(in[1])) {
        auto& gb = grad_buffer(in[1]);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a[i];
      }
      break;
    }
    case OpKind::kConcat: {
      std::size_t offset = 0;
      for (std::uint32_t k = 0; k < node.input_count; ++k) {
        const std::size_t len = nodes_[in[k]].value.size();
        if (wants(in[k])) {
          auto& gi = grad_buffer(in[k]);
          for (std::size_t i = 0; i < len; ++i) gi[i] += g[offset + i];
        }
        offset += len;
      }
      break;
    }
    case OpKind::kSigmoid: {
      auto& gx = grad_buffer(in[0]);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
      break;
    }
    case OpKind::kTanh: {
      auto& gx = grad_buffer(in[0]);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
      break;
    }
    case OpKind::kExp: {
      auto& gx = grad_buffer(in[0]);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i];
      break;
    }
    case OpKind::kSum:
    case OpKind::kMean: {
      auto& gx = grad_buffer(in[0]);
      const double d =
          node.kind == OpKind::kMean ? g[0] / static_cast<double>(gx.size()) : g[0];
      for (double& v : gx) v += d;
      break;
    }
    case OpKind::kScale: {
      auto& gx = grad_buffer(in[0]);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += node.attrs.factor * g[i];
      break;
    }
    case OpKind::kSlice: {
      auto& gx = grad_buffer(in[0]);
      for (std::size_t i = 0; i < g.size(); ++i) gx[node.attrs.offset + i] += g[i];
      break;
    }
    case OpKind::kReshape: {
      auto& gx = grad_buffer(in[0]);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      break;
    }
    case OpKind::kSoftmax: {
      double dot = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * y[i];
      auto& gx = grad_buffer(in[0]);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += y[i] * (g[i] - dot);
      break;
    }
    case OpKind::kLeaf:
      break;
  }
}

void Tape::clear() {
  nodes_.clear();
  inputs_.clear();
  grads_.clear();
}

namespace {
Var apply1(OpKind kind, Var a, const OpAttrs& attrs = {}) {
  if (!a.attached()) throw ContractViolation("variable is not attached to a tape");
  const Var in[] = {a};
  return a.tape()->apply(kind, in, attrs);
}
Var apply2(OpKind kind, Var a, Var b) {
  if (!a.attached()) throw ContractViolation("variable is not attached to a tape");
  const Var in[] = {a, b};
  return a.tape()->apply(kind, in);
}
}  // namespace

Var matmul(Var a, Var b) { return apply2(OpKind::kMatMul, a, b); }
Var add(Var a, Var b) { return apply2(OpKind::kAdd, a, b); }
Var sub(Var a, Var b) { return apply2(OpKind::kSub, a, b); }
Var mul(Var a, Var b) { return apply2(OpKind::kMul, a, b); }
Var sigmoid(Var a) { return apply1(OpKind::kSigmoid, a); }
Var tanh(Var a) { return apply1(OpKind::kTanh, a); }
Var exp(Var a) { return apply1(OpKind::kExp, a); }
Var sum(Var a) { return apply1(OpKind::kSum, a); }
Var mean(Var a) { return apply1(OpKind::kMean, a); }
Var softmax(Var a) { return apply1(OpKind::kSoftmax, a); }

Var concat(std::span<const Var> parts) {
  if (parts.empty() || !parts.front().attached()) {
    throw ContractViolation("concat needs at least one attached variable");
  }
  return parts.front().tape()->apply(OpKind::kConcat, parts);
}

Var scale(Var a, double factor) {
  OpAttrs attrs;
  attrs.factor = factor;
  return apply1(OpKind::kScale, a, attrs);
}

Var slice(Var a, std::size_t offset, std::size_t length) {
  OpAttrs attrs;
  attrs.offset = offset;
  attrs.length = length;
  return apply1(OpKind::kSlice, a, attrs);
}

Var reshape(Var a, Shape shape) {
  OpAttrs attrs;
  attrs.shape = shape;
  return apply1(OpKind::kReshape, a, attrs);
}

double finite_difference_check(const ScalarObjective& objective, const Tensor& params,
                               double epsilon) {
  if (!(epsilon > 0.0)) throw ContractViolation("finite-difference epsilon must be positive");

  Tape tape;
  Var p = tape.leaf(params);
  Var loss = objective(tape, p);
  if (!std::isfinite(loss.value()[0])) throw NumericError("objective is non-finite at the base point");
  tape.backward(loss);
  const Tensor analytic = tape.grad(p);

  auto evaluate = [&](const Tensor& at) {
    Tape probe;
    const double v = objective(probe, probe.constant(at)).value()[0];
    if (!std::isfinite(v)) throw NumericError("objective is non-finite at a perturbed point");
    return v;
  };

  double worst = 0.0;
  Tensor probe_point = params;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double original = probe_point[i];
    probe_point[i] = original + epsilon;
    const double up = evaluate(probe_point);
    probe_point[i] = original - epsilon;
    const double down = evaluate(probe_point);
    probe_point[i] = original;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace seq2graph::ad
