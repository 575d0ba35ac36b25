// Copyright 2026 The CIA-MARL Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cia/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cia::ad {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap view(const Tensor& t) {
  return ConstMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

MutMap view(Tensor& t) {
  return MutMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}

[[noreturn]] void shape_error(std::string_view op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a) +
                              " vs " + shape_string(b));
}

Graph& owner(Var v) {
  if (!v.valid()) throw std::invalid_argument("operation on an unbound Var");
  return *v.graph();
}

Graph& common_owner(Var a, Var b) {
  Graph& g = owner(a);
  if (&owner(b) != &g) throw std::invalid_argument("operands belong to different graphs");
  return g;
}

std::size_t broadcast_dim(std::size_t x, std::size_t y, std::string_view op, const Tensor& a,
                          const Tensor& b) {
  if (x == y) return x;
  if (x == 1) return y;
  if (y == 1) return x;
  shape_error(op, a, b);
}

template <class F>
Tensor binary_map(const Tensor& a, const Tensor& b, std::string_view op, F f) {
  if (a.same_shape(b)) {
    Tensor out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
    return out;
  }
  const std::size_t rows = broadcast_dim(a.rows(), b.rows(), op, a, b);
  const std::size_t cols = broadcast_dim(a.cols(), b.cols(), op, a, b);
  Tensor out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t ar = a.rows() == 1 ? 0 : r;
    const std::size_t br = b.rows() == 1 ? 0 : r;
    for (std::size_t c = 0; c < cols; ++c) {
      out(r, c) = f(a(ar, a.cols() == 1 ? 0 : c), b(br, b.cols() == 1 ? 0 : c));
    }
  }
  return out;
}

template <class F>
Tensor unary_map(const Tensor& x, F f) {
  Tensor out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

// Sums a gradient of the broadcast output shape back onto an input shape.
Tensor reduce_to(Tensor g, std::size_t rows, std::size_t cols) {
  if (g.rows() == rows && g.cols() == cols) return g;
  Tensor out(rows, cols);
  for (std::size_t r = 0; r < g.rows(); ++r) {
    for (std::size_t c = 0; c < g.cols(); ++c) {
      out(rows == 1 ? 0 : r, cols == 1 ? 0 : c) += g(r, c);
    }
  }
  return out;
}

// Value of `t` expanded to rows x cols (t broadcastable to that shape).
double bcast_at(const Tensor& t, std::size_t r, std::size_t c) {
  return t(t.rows() == 1 ? 0 : r, t.cols() == 1 ? 0 : c);
}

void accumulate(Tensor& slot, Tensor contribution) {
  if (slot.empty()) {
    slot = std::move(contribution);
    return;
  }
  for (std::size_t i = 0; i < slot.size(); ++i) slot[i] += contribution[i];
}

double elu_value(double x) { return x > 0.0 ? x : std::expm1(x); }
double elu_derivative(double x) { return x > 0.0 ? 1.0 : std::exp(x); }
double sign_or_zero(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }
double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor softmax_rows_value(const Tensor& x) {
  Tensor out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double m = -INFINITY;
    for (std::size_t c = 0; c < x.cols(); ++c) m = std::max(m, x(r, c));
    double total = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      out(r, c) = std::exp(x(r, c) - m);
      total += out(r, c);
    }
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) /= total;
  }
  return out;
}

Tensor log_softmax_rows_value(const Tensor& x) {
  Tensor out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double m = -INFINITY;
    for (std::size_t c = 0; c < x.cols(); ++c) m = std::max(m, x(r, c));
    double total = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) total += std::exp(x(r, c) - m);
    const double lse = m + std::log(total);
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = x(r, c) - lse;
  }
  return out;
}

Tensor transpose_value(const Tensor& x) {
  Tensor out(x.cols(), x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) out(c, r) = x(r, c);
  }
  return out;
}

Var unary(Op op, Var x, Tensor value) {
  return owner(x).record(op, {x.id()}, std::move(value));
}

}  // namespace

std::string_view op_name(Op op) {
  switch (op) {
    case Op::kConstant: return "constant";
    case Op::kParameter: return "parameter";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kMatMul: return "matmul";
    case Op::kAbs: return "abs";
    case Op::kElu: return "elu";
    case Op::kEluPrime: return "elu_prime";
    case Op::kRelu: return "relu";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kSum: return "sum";
    case Op::kRowSum: return "row_sum";
    case Op::kMean: return "mean";
    case Op::kConcatCols: return "concat_cols";
    case Op::kConcatRows: return "concat_rows";
    case Op::kSliceCols: return "slice_cols";
    case Op::kSliceRows: return "slice_rows";
    case Op::kGatherRows: return "gather_rows";
    case Op::kReshape: return "reshape";
    case Op::kTranspose: return "transpose";
    case Op::kSoftmaxRows: return "softmax_rows";
    case Op::kLogSoftmaxRows: return "log_softmax_rows";
    case Op::kLog: return "log";
    case Op::kExp: return "exp";
    case Op::kSquare: return "square";
    case Op::kScale: return "scale";
  }
  return "unknown";
}

const Tensor& Var::value() const {
  if (!valid()) throw std::invalid_argument("value() of an unbound Var");
  return graph_->value(*this);
}

void Graph::check_owner(Var v) const {
  if (v.graph() != this || v.id() >= nodes_.size()) {
    throw std::invalid_argument("Var does not belong to this graph");
  }
}

Var Graph::constant(Tensor value) { return record(Op::kConstant, {}, std::move(value)); }

Var Graph::parameter(const std::string& name, Tensor value) {
  if (parameters_.contains(name)) {
    throw std::invalid_argument("duplicate parameter '" + name + "' in graph");
  }
  Var v = record(Op::kParameter, {}, std::move(value));
  nodes_[v.id()].requires_grad = true;
  parameters_.emplace(name, v.id());
  return v;
}

const Tensor& Graph::value(Var v) const {
  check_owner(v);
  return nodes_[v.id()].value;
}

Op Graph::op(Var v) const {
  check_owner(v);
  return nodes_[v.id()].op;
}

bool Graph::requires_grad(Var v) const {
  check_owner(v);
  return nodes_[v.id()].requires_grad;
}

Var Graph::record(Op op, std::vector<NodeId> parents, Tensor value, Aux aux) {
  if (!value.all_finite()) {
    throw std::domain_error(std::string(op_name(op)) + ": non-finite value produced");
  }
  Node node;
  node.op = op;
  node.requires_grad =
      std::any_of(parents.begin(), parents.end(), [&](NodeId p) { return nodes_[p].requires_grad; });
  node.parents = std::move(parents);
  node.value = std::move(value);
  node.aux = std::move(aux);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Gradients Graph::backward(Var loss) const {
  check_owner(loss);
  const Tensor& lv = nodes_[loss.id()].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw std::invalid_argument("backward() requires a scalar loss, got " + shape_string(lv));
  }
  std::vector<Tensor> grads(nodes_.size());
  grads[loss.id()] = Tensor::scalar(1.0);

  for (NodeId id = loss.id() + 1; id-- > 0;) {
    const Node& node = nodes_[id];
    if (grads[id].empty() || !node.requires_grad || node.op == Op::kParameter) continue;
    const Tensor g = std::move(grads[id]);
    grads[id] = Tensor();
    const Tensor& y = node.value;
    auto need = [&](std::size_t i) { return nodes_[node.parents[i]].requires_grad; };
    auto parent = [&](std::size_t i) -> const Tensor& { return nodes_[node.parents[i]].value; };
    auto push = [&](std::size_t i, Tensor contribution) {
      accumulate(grads[node.parents[i]], std::move(contribution));
    };
    auto push_unary = [&](auto derivative) {
      const Tensor& x = parent(0);
      Tensor dx(x.rows(), x.cols());
      for (std::size_t i = 0; i < x.size(); ++i) dx[i] = g[i] * derivative(x[i], y[i]);
      push(0, std::move(dx));
    };

    switch (node.op) {
      case Op::kConstant:
      case Op::kParameter:
        break;
      case Op::kAdd:
      case Op::kSub: {
        if (need(0)) push(0, reduce_to(g, parent(0).rows(), parent(0).cols()));
        if (need(1)) {
          Tensor gb = reduce_to(g, parent(1).rows(), parent(1).cols());
          if (node.op == Op::kSub) {
            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] = -gb[i];
          }
          push(1, std::move(gb));
        }
        break;
      }
      case Op::kMul: {
        const Tensor& a = parent(0);
        const Tensor& b = parent(1);
        for (std::size_t side = 0; side < 2; ++side) {
          if (!need(side)) continue;
          const Tensor& other = side == 0 ? b : a;
          const Tensor& self = side == 0 ? a : b;
          Tensor d(g.rows(), g.cols());
          for (std::size_t r = 0; r < g.rows(); ++r) {
            for (std::size_t c = 0; c < g.cols(); ++c) d(r, c) = g(r, c) * bcast_at(other, r, c);
          }
          push(side, reduce_to(std::move(d), self.rows(), self.cols()));
        }
        break;
      }
      case Op::kMatMul: {
        const Tensor& a = parent(0);
        const Tensor& b = parent(1);
        if (need(0)) {
          Tensor da(a.rows(), a.cols());
          view(da).noalias() = view(g) * view(b).transpose();
          push(0, std::move(da));
        }
        if (need(1)) {
          Tensor db(b.rows(), b.cols());
          view(db).noalias() = view(a).transpose() * view(g);
          push(1, std::move(db));
        }
        break;
      }
      case Op::kAbs:
        push_unary([](double x, double) { return sign_or_zero(x); });
        break;
      case Op::kElu:
        push_unary([](double x, double) { return elu_derivative(x); });
        break;
      case Op::kEluPrime:
        push_unary([](double x, double yv) { return x > 0.0 ? 0.0 : yv; });
        break;
      case Op::kRelu:
        push_unary([](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
        break;
      case Op::kTanh:
        push_unary([](double, double yv) { return 1.0 - yv * yv; });
        break;
      case Op::kSigmoid:
        push_unary([](double, double yv) { return yv * (1.0 - yv); });
        break;
      case Op::kLog:
        push_unary([](double x, double) { return 1.0 / x; });
        break;
      case Op::kExp:
        push_unary([](double, double yv) { return yv; });
        break;
      case Op::kSquare:
        push_unary([](double x, double) { return 2.0 * x; });
        break;
      case Op::kScale: {
        const double s = node.aux.scalar;
        push_unary([s](double, double) { return s; });
        break;
      }
      case Op::kSum:
        push(0, Tensor(parent(0).rows(), parent(0).cols(), g.item()));
        break;
      case Op::kMean: {
        const Tensor& x = parent(0);
        push(0, Tensor(x.rows(), x.cols(), g.item() / static_cast<double>(x.size())));
        break;
      }
      case Op::kRowSum: {
        const Tensor& x = parent(0);
        Tensor dx(x.rows(), x.cols());
        for (std::size_t r = 0; r < x.rows(); ++r) {
          for (std::size_t c = 0; c < x.cols(); ++c) dx(r, c) = g(r, 0);
        }
        push(0, std::move(dx));
        break;
      }
      case Op::kConcatCols: {
        std::size_t offset = 0;
        for (std::size_t i = 0; i < node.parents.size(); ++i) {
          const Tensor& x = parent(i);
          if (need(i)) {
            Tensor dx(x.rows(), x.cols());
            for (std::size_t r = 0; r < x.rows(); ++r) {
              for (std::size_t c = 0; c < x.cols(); ++c) dx(r, c) = g(r, offset + c);
            }
            push(i, std::move(dx));
          }
          offset += x.cols();
        }
        break;
      }
      case Op::kConcatRows: {
        std::size_t offset = 0;
        for (std::size_t i = 0; i < node.parents.size(); ++i) {
          const Tensor& x = parent(i);
          if (need(i)) {
            const auto begin = g.data().begin() + static_cast<std::ptrdiff_t>(offset * g.cols());
            push(i, Tensor(x.rows(), x.cols(),
                           std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(x.size()))));
          }
          offset += x.rows();
        }
        break;
      }
      case Op::kSliceCols: {
        const Tensor& x = parent(0);
        Tensor dx(x.rows(), x.cols());
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t c = 0; c < g.cols(); ++c) dx(r, node.aux.a + c) = g(r, c);
        }
        push(0, std::move(dx));
        break;
      }
      case Op::kSliceRows: {
        const Tensor& x = parent(0);
        Tensor dx(x.rows(), x.cols());
        std::copy(g.data().begin(), g.data().end(),
                  dx.data().begin() + static_cast<std::ptrdiff_t>(node.aux.a * x.cols()));
        push(0, std::move(dx));
        break;
      }
      case Op::kGatherRows: {
        const Tensor& x = parent(0);
        Tensor dx(x.rows(), x.cols());
        for (std::size_t r = 0; r < g.rows(); ++r) {
          const std::size_t src = node.aux.indices[r];
          for (std::size_t c = 0; c < g.cols(); ++c) dx(src, c) += g(r, c);
        }
        push(0, std::move(dx));
        break;
      }
      case Op::kReshape: {
        const Tensor& x = parent(0);
        push(0, Tensor(x.rows(), x.cols(), std::vector<double>(g.data().begin(), g.data().end())));
        break;
      }
      case Op::kTranspose:
        push(0, transpose_value(g));
        break;
      case Op::kSoftmaxRows: {
        Tensor dx(y.rows(), y.cols());
        for (std::size_t r = 0; r < y.rows(); ++r) {
          double dot = 0.0;
          for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
          for (std::size_t c = 0; c < y.cols(); ++c) dx(r, c) = y(r, c) * (g(r, c) - dot);
        }
        push(0, std::move(dx));
        break;
      }
      case Op::kLogSoftmaxRows: {
        Tensor dx(y.rows(), y.cols());
        for (std::size_t r = 0; r < y.rows(); ++r) {
          double total = 0.0;
          for (std::size_t c = 0; c < y.cols(); ++c) total += g(r, c);
          for (std::size_t c = 0; c < y.cols(); ++c) {
            dx(r, c) = g(r, c) - std::exp(y(r, c)) * total;
          }
        }
        push(0, std::move(dx));
        break;
      }
    }
  }

  Gradients out;
  for (const auto& [name, id] : parameters_) {
    const Tensor& pv = nodes_[id].value;
    out.emplace(name, grads[id].empty() ? Tensor(pv.rows(), pv.cols()) : std::move(grads[id]));
  }
  return out;
}

Var add(Var a, Var b) {
  Graph& g = common_owner(a, b);
  return g.record(Op::kAdd, {a.id(), b.id()},
                  binary_map(a.value(), b.value(), "add", [](double x, double y) { return x + y; }));
}

Var sub(Var a, Var b) {
  Graph& g = common_owner(a, b);
  return g.record(Op::kSub, {a.id(), b.id()},
                  binary_map(a.value(), b.value(), "sub", [](double x, double y) { return x - y; }));
}

Var mul(Var a, Var b) {
  Graph& g = common_owner(a, b);
  return g.record(Op::kMul, {a.id(), b.id()},
                  binary_map(a.value(), b.value(), "mul", [](double x, double y) { return x * y; }));
}

Var matmul(Var a, Var b) {
  Graph& g = common_owner(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) shape_error("matmul", av, bv);
  Tensor out(av.rows(), bv.cols());
  view(out).noalias() = view(av) * view(bv);
  return g.record(Op::kMatMul, {a.id(), b.id()}, std::move(out));
}

Var abs(Var x) { return unary(Op::kAbs, x, unary_map(x.value(), [](double v) { return std::abs(v); })); }
Var elu(Var x) { return unary(Op::kElu, x, unary_map(x.value(), elu_value)); }
Var elu_prime(Var x) { return unary(Op::kEluPrime, x, unary_map(x.value(), elu_derivative)); }
Var relu(Var x) {
  return unary(Op::kRelu, x, unary_map(x.value(), [](double v) { return v > 0.0 ? v : 0.0; }));
}
Var tanh(Var x) { return unary(Op::kTanh, x, unary_map(x.value(), [](double v) { return std::tanh(v); })); }
Var sigmoid(Var x) { return unary(Op::kSigmoid, x, unary_map(x.value(), sigmoid_value)); }
Var log(Var x) { return unary(Op::kLog, x, unary_map(x.value(), [](double v) { return std::log(v); })); }
Var exp(Var x) { return unary(Op::kExp, x, unary_map(x.value(), [](double v) { return std::exp(v); })); }
Var square(Var x) { return unary(Op::kSquare, x, unary_map(x.value(), [](double v) { return v * v; })); }

Var scale(Var x, double factor) {
  Graph::Aux aux;
  aux.scalar = factor;
  return owner(x).record(Op::kScale, {x.id()},
                         unary_map(x.value(), [factor](double v) { return v * factor; }), aux);
}

Var sum(Var x) {
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  return owner(x).record(Op::kSum, {x.id()}, Tensor::scalar(total));
}

Var row_sum(Var x) {
  const Tensor& v = x.value();
  Tensor out(v.rows(), 1);
  for (std::size_t r = 0; r < v.rows(); ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < v.cols(); ++c) total += v(r, c);
    out(r, 0) = total;
  }
  return owner(x).record(Op::kRowSum, {x.id()}, std::move(out));
}

Var mean(Var x) {
  const Tensor& v = x.value();
  if (v.size() == 0) throw std::invalid_argument("mean of an empty tensor");
  double total = 0.0;
  for (double e : v.data()) total += e;
  return owner(x).record(Op::kMean, {x.id()}, Tensor::scalar(total / static_cast<double>(v.size())));
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols of zero tensors");
  Graph& g = owner(parts[0]);
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  std::vector<NodeId> ids;
  for (Var p : parts) {
    if (&owner(p) != &g) throw std::invalid_argument("operands belong to different graphs");
    if (p.rows() != rows) shape_error("concat_cols", parts[0].value(), p.value());
    cols += p.cols();
    ids.push_back(p.id());
  }
  Tensor out(rows, cols);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& v = p.value();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(v.row(r).begin(), v.row(r).end(),
                out.data().begin() + static_cast<std::ptrdiff_t>(r * cols + offset));
    }
    offset += v.cols();
  }
  return g.record(Op::kConcatCols, std::move(ids), std::move(out));
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows of zero tensors");
  Graph& g = owner(parts[0]);
  const std::size_t cols = parts[0].cols();
  std::vector<double> data;
  std::vector<NodeId> ids;
  std::size_t rows = 0;
  for (Var p : parts) {
    if (&owner(p) != &g) throw std::invalid_argument("operands belong to different graphs");
    if (p.cols() != cols) shape_error("concat_rows", parts[0].value(), p.value());
    data.insert(data.end(), p.value().data().begin(), p.value().data().end());
    rows += p.rows();
    ids.push_back(p.id());
  }
  return g.record(Op::kConcatRows, std::move(ids), Tensor(rows, cols, std::move(data)));
}

Var slice_cols(Var x, std::size_t begin, std::size_t count) {
  const Tensor& v = x.value();
  if (begin + count > v.cols() || count == 0) {
    throw std::invalid_argument("slice_cols: columns [" + std::to_string(begin) + ", " +
                                std::to_string(begin + count) + ") out of range for " +
                                shape_string(v));
  }
  Tensor out(v.rows(), count);
  for (std::size_t r = 0; r < v.rows(); ++r) {
    for (std::size_t c = 0; c < count; ++c) out(r, c) = v(r, begin + c);
  }
  Graph::Aux aux;
  aux.a = begin;
  aux.b = count;
  return owner(x).record(Op::kSliceCols, {x.id()}, std::move(out), aux);
}

Var slice_rows(Var x, std::size_t begin, std::size_t count) {
  const Tensor& v = x.value();
  if (begin + count > v.rows() || count == 0) {
    throw std::invalid_argument("slice_rows: rows [" + std::to_string(begin) + ", " +
                                std::to_string(begin + count) + ") out of range for " +
                                shape_string(v));
  }
  const auto first = v.data().begin() + static_cast<std::ptrdiff_t>(begin * v.cols());
  Tensor out(count, v.cols(),
             std::vector<double>(first, first + static_cast<std::ptrdiff_t>(count * v.cols())));
  Graph::Aux aux;
  aux.a = begin;
  aux.b = count;
  return owner(x).record(Op::kSliceRows, {x.id()}, std::move(out), aux);
}

Var gather_rows(Var x, std::vector<std::size_t> indices) {
  const Tensor& v = x.value();
  Tensor out(indices.size(), v.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= v.rows()) {
      throw std::invalid_argument("gather_rows: index " + std::to_string(indices[r]) +
                                  " out of range for " + shape_string(v));
    }
    std::copy(v.row(indices[r]).begin(), v.row(indices[r]).end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(r * v.cols()));
  }
  Graph::Aux aux;
  aux.indices = std::move(indices);
  return owner(x).record(Op::kGatherRows, {x.id()}, std::move(out), std::move(aux));
}

Var reshape(Var x, std::size_t rows, std::size_t cols) {
  const Tensor& v = x.value();
  if (rows * cols != v.size()) {
    throw std::invalid_argument("reshape: cannot view " + shape_string(v) + " as [" +
                                std::to_string(rows) + "x" + std::to_string(cols) + "]");
  }
  return owner(x).record(Op::kReshape, {x.id()},
                         Tensor(rows, cols, std::vector<double>(v.data().begin(), v.data().end())));
}

Var transpose(Var x) { return unary(Op::kTranspose, x, transpose_value(x.value())); }
Var softmax_rows(Var x) { return unary(Op::kSoftmaxRows, x, softmax_rows_value(x.value())); }
Var log_softmax_rows(Var x) {
  return unary(Op::kLogSoftmaxRows, x, log_softmax_rows_value(x.value()));
}

Var tensor_op(Op kind, std::span<const Var> inputs) {
  auto expect = [&](std::size_t n) {
    if (inputs.size() != n) {
      throw std::invalid_argument(std::string(op_name(kind)) + " expects " + std::to_string(n) +
                                  " inputs, got " + std::to_string(inputs.size()));
    }
  };
  switch (kind) {
    case Op::kAdd: expect(2); return add(inputs[0], inputs[1]);
    case Op::kSub: expect(2); return sub(inputs[0], inputs[1]);
    case Op::kMul: expect(2); return mul(inputs[0], inputs[1]);
    case Op::kMatMul: expect(2); return matmul(inputs[0], inputs[1]);
    case Op::kAbs: expect(1); return abs(inputs[0]);
    case Op::kElu: expect(1); return elu(inputs[0]);
    case Op::kEluPrime: expect(1); return elu_prime(inputs[0]);
    case Op::kRelu: expect(1); return relu(inputs[0]);
    case Op::kTanh: expect(1); return tanh(inputs[0]);
    case Op::kSigmoid: expect(1); return sigmoid(inputs[0]);
    case Op::kSum: expect(1); return sum(inputs[0]);
    case Op::kRowSum: expect(1); return row_sum(inputs[0]);
    case Op::kMean: expect(1); return mean(inputs[0]);
    case Op::kConcatCols: return concat_cols(inputs);
    case Op::kConcatRows: return concat_rows(inputs);
    case Op::kTranspose: expect(1); return transpose(inputs[0]);
    case Op::kSoftmaxRows: expect(1); return softmax_rows(inputs[0]);
    case Op::kLogSoftmaxRows: expect(1); return log_softmax_rows(inputs[0]);
    case Op::kLog: expect(1); return log(inputs[0]);
    case Op::kExp: expect(1); return exp(inputs[0]);
    case Op::kSquare: expect(1); return square(inputs[0]);
    default:
      throw std::invalid_argument(std::string(op_name(kind)) +
                                  " needs extra arguments; call it directly");
  }
}

double grad_check(const ScalarFunction& f, const Tensor& x0, double eps) {
  Tensor analytic;
  {
    Graph g;
    Var x = g.parameter("x", x0);
    Var y = f(g, x);
    analytic = g.backward(y).at("x");
  }
  auto evaluate = [&](const Tensor& xv) {
    Graph g;
    return f(g, g.constant(xv)).value().item();
  };
  double worst = 0.0;
  Tensor probe = x0;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    probe[i] = x0[i] + eps;
    const double up = evaluate(probe);
    probe[i] = x0[i] - eps;
    const double down = evaluate(probe);
    probe[i] = x0[i];
    const double numeric = (up - down) / (2.0 * eps);
    const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace cia::ad
