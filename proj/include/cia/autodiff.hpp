// Copyright 2026 The CIA-MARL Authors.
// SPDX-License-Identifier: Apache-2.0

// Define-by-run reverse-mode differentiation over dense matrices.
//
// A Graph is a tape: every op appends a node whose parents already exist, so
// node ids are a topological order and backward() is a single reverse sweep.
// Graphs are rebuilt for every training step and are single-writer.
//
// Elementwise binary ops broadcast size-1 dimensions (bias rows, per-row
// scales, scalars); their gradients are reduced back onto the input shape.
// Subgradient conventions: d|x|/dx = 0 and drelu/dx = 0 at x = 0; elu uses
// alpha = 1.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cia/tensor.hpp"

namespace cia::ad {

using NodeId = std::size_t;

enum class Op : std::uint8_t {
  kConstant,
  kParameter,
  kAdd,
  kSub,
  kMul,
  kMatMul,
  kAbs,
  kElu,
  kEluPrime,
  kRelu,
  kTanh,
  kSigmoid,
  kSum,
  kRowSum,
  kMean,
  kConcatCols,
  kConcatRows,
  kSliceCols,
  kSliceRows,
  kGatherRows,
  kReshape,
  kTranspose,
  kSoftmaxRows,
  kLogSoftmaxRows,
  kLog,
  kExp,
  kSquare,
  kScale,
};

std::string_view op_name(Op op);

class Graph;

// Lightweight handle to a node. Valid while its Graph is alive.
class Var {
 public:
  Var() = default;

  NodeId id() const { return id_; }
  Graph* graph() const { return graph_; }
  bool valid() const { return graph_ != nullptr; }
  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  friend class Graph;
  Var(Graph* graph, NodeId id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  NodeId id_ = 0;
};

using Gradients = std::map<std::string, Tensor>;

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Leaf that never receives a gradient.
  Var constant(Tensor value);
  // Named leaf whose gradient backward() reports. Names are unique per graph.
  Var parameter(const std::string& name, Tensor value);

  const Tensor& value(Var v) const;
  Op op(Var v) const;
  bool requires_grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  // Gradient of a 1x1 loss with respect to every parameter of this graph.
  // Parameters the loss does not reach get a zero tensor of their shape.
  Gradients backward(Var loss) const;

  struct Aux {
    std::size_t a = 0;
    std::size_t b = 0;
    double scalar = 0.0;
    std::vector<std::size_t> indices;
  };

  // Appends a node; used by the op functions below.
  Var record(Op op, std::vector<NodeId> parents, Tensor value, Aux aux);
  Var record(Op op, std::vector<NodeId> parents, Tensor value) {
    return record(op, std::move(parents), std::move(value), Aux{});
  }

 private:
  struct Node {
    Op op = Op::kConstant;
    std::vector<NodeId> parents;
    Tensor value;
    bool requires_grad = false;
    Aux aux;
  };

  void check_owner(Var v) const;

  std::vector<Node> nodes_;
  std::map<std::string, NodeId> parameters_;
};

// Elementwise with broadcasting of size-1 dims.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var matmul(Var a, Var b);

Var abs(Var x);
Var elu(Var x);
// Derivative of elu evaluated at x: 1 for x > 0, exp(x) otherwise.
Var elu_prime(Var x);
Var relu(Var x);
Var tanh(Var x);
Var sigmoid(Var x);
Var log(Var x);
Var exp(Var x);
Var square(Var x);
Var scale(Var x, double factor);

// Sum of all entries (1x1).
Var sum(Var x);
// Per-row sum (rows x 1).
Var row_sum(Var x);
Var mean(Var x);

Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var x, std::size_t begin, std::size_t count);
Var slice_rows(Var x, std::size_t begin, std::size_t count);
Var gather_rows(Var x, std::vector<std::size_t> indices);
Var reshape(Var x, std::size_t rows, std::size_t cols);
Var transpose(Var x);
Var softmax_rows(Var x);
Var log_softmax_rows(Var x);

// Dispatch by kind for ops that take no extra arguments (used by generic
// property tests). Slices, gathers, reshapes and scales need their own entry.
Var tensor_op(Op kind, std::span<const Var> inputs);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

using ScalarFunction = std::function<Var(Graph&, Var)>;

// Largest coordinate-wise discrepancy between backward() and central finite
// differences of f at x0. Each coordinate uses |g - fd| / max(1, |g|, |fd|).
double grad_check(const ScalarFunction& f, const Tensor& x0, double eps);

}  // namespace cia::ad
