// SPDX-License-Identifier: Apache-2.0
//
// Define-by-run reverse-mode differentiation over dense tensors.
//
// A Tape records every primitive applied to its variables in execution order, so
// node inputs always precede the node. backward() walks the record in reverse and
// accumulates gradients (summing at fan-out). A tape is owned by one thread at a
// time; independent tapes may run concurrently.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "seq2graph/tensor.hpp"

namespace seq2graph::ad {

enum class OpKind : std::uint8_t {
  kLeaf,
  kMatMul,
  kAdd,
  kSub,
  kMul,
  kConcat,
  kSigmoid,
  kTanh,
  kExp,
  kSum,
  kMean,
  kScale,
  kSlice,
  kReshape,
  kSoftmax,
};

std::string_view op_name(OpKind kind);

/// Extra arguments for primitives that need them (scale factor, slice window, target shape).
struct OpAttrs {
  double factor = 1.0;
  std::size_t offset = 0;
  std::size_t length = 0;
  Shape shape;
};

/// Evaluates one primitive without recording anything. Throws ContractViolation on
/// arity or shape mismatch.
Tensor primitive_forward(OpKind kind, std::span<const Tensor* const> inputs,
                         const OpAttrs& attrs = {});

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid until the tape is cleared.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  std::uint32_t id() const { return id_; }
  bool attached() const { return tape_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }

 private:
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// A differentiable input (a parameter).
  Var leaf(Tensor value);
  /// An input excluded from differentiation.
  Var constant(Tensor value);

  Var apply(OpKind kind, std::span<const Var> inputs, const OpAttrs& attrs = {});

  const Tensor& value(Var v) const;

  /// Gradient of the last backward() loss w.r.t. v; zeros when v was unreachable.
  Tensor grad(Var v) const;

  /// Reverse sweep from a single-element loss node.
  void backward(Var loss);

  void clear();
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    OpKind kind;
    bool requires_grad;
    std::uint32_t first_input;
    std::uint32_t input_count;
    OpAttrs attrs;
    Tensor value;
  };

  void check_owned(Var v) const;
  void propagate(std::size_t index);
  std::vector<double>& grad_buffer(std::uint32_t id);

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> inputs_;
  std::vector<std::vector<double>> grads_;
};

// Primitive wrappers. Rank-1 operands of matmul are treated as columns.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var concat(std::span<const Var> parts);
Var sigmoid(Var a);
Var tanh(Var a);
Var exp(Var a);
Var sum(Var a);
Var mean(Var a);
Var scale(Var a, double factor);
Var slice(Var a, std::size_t offset, std::size_t length);
Var reshape(Var a, Shape shape);
/// Normalized exponential over a rank-1 tensor.
Var softmax(Var a);

/// Scalar-valued objective of one parameter tensor, built on the given tape.
using ScalarObjective = std::function<Var(Tape&, Var)>;

/// Largest |analytic - central difference| / max(1, |analytic|) over all entries of params.
/// Throws NumericError if the objective is non-finite at any evaluated point.
double finite_difference_check(const ScalarObjective& objective, const Tensor& params,
                               double epsilon);

}  // namespace seq2graph::ad
