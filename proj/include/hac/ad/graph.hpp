#pragma once

// Tape-based reverse-mode differentiation over dense double tensors.
//
// A Graph owns every node created while evaluating an expression. Leaves are
// either variables (gradients flow into them) or constants. Each primitive
// appends exactly one node, so node ids are already in topological order and
// backward is a single reverse sweep.

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "hac/ad/tensor.hpp"

namespace hac::ad {

enum class Primitive {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kAbs,
  kMatMul,
  kTranspose,
  kReshape,
  kSum,
  kMean,
  kExp,
  kLog,
  kLogSumExp,
  kSqrt,
  kSinh,
  kCosh,
  kAcosh,
  kAsin,
  kAcos,
  kClamp,
  kRelu,
  kNorm,
  kBroadcast,
  kTake,
  kCustom,
};

std::string_view primitive_name(Primitive kind);

/// How domain-restricted primitives treat out-of-domain inputs.
/// kClamp projects onto the domain and gives a zero derivative outside it.
enum class DomainGuard { kStrict, kClamp };

using NodeId = std::size_t;

class Graph;

/// Handle to a node on a Graph. Cheap to copy; valid while the Graph lives.
class Var {
 public:
  Var() = default;

  NodeId id() const { return id_; }
  Graph& graph() const { return *graph_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  double item() const { return value().item(); }
  bool valid() const { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* graph, NodeId id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  NodeId id_ = 0;
};

/// Gradients keyed by node id; shapes match the node values.
class GradientMap {
 public:
  const Tensor& at(NodeId id) const;
  const Tensor& at(const Var& v) const { return at(v.id()); }
  bool contains(NodeId id) const { return grads_.contains(id); }
  std::size_t size() const { return grads_.size(); }

  void insert(NodeId id, Tensor grad) { grads_.insert_or_assign(id, std::move(grad)); }

 private:
  std::map<NodeId, Tensor> grads_;
};

class Graph {
 public:
  /// Returns one gradient per input, each shaped like that input.
  using BackwardFn = std::function<std::vector<Tensor>(const Tensor& grad_out)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var variable(Tensor value);
  Var constant(Tensor value);
  Var constant(double value) { return constant(Tensor::scalar(value)); }

  /// Appends a node; used by the primitives. Rejects non-finite values.
  Var record(Primitive kind, std::vector<NodeId> inputs, Tensor value, BackwardFn backward);

  const Tensor& value(NodeId id) const { return nodes_.at(id).value; }
  Primitive kind(NodeId id) const { return nodes_.at(id).kind; }
  const std::vector<NodeId>& inputs(NodeId id) const { return nodes_.at(id).inputs; }
  std::size_t size() const { return nodes_.size(); }

  /// Exact gradients of a scalar loss with respect to each requested node.
  /// Does not modify the graph, so repeated calls return identical results.
  GradientMap backward(const Var& loss, const std::vector<Var>& wrt) const;

 private:
  struct Node {
    Primitive kind;
    std::vector<NodeId> inputs;
    Tensor value;
    BackwardFn backward;
    bool requires_grad;
  };

  std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Primitives. Binary elementwise operations broadcast numpy-style.

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var neg(const Var& x);
Var abs(const Var& x);

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& x);
Var reshape(const Var& x, Shape shape);

Var sum(const Var& x);
Var sum(const Var& x, std::size_t axis, bool keepdims = false);
Var mean(const Var& x);
Var mean(const Var& x, std::size_t axis, bool keepdims = false);
Var logsumexp(const Var& x, std::size_t axis, bool keepdims = false);
/// L2 norm along an axis. The subgradient at a zero vector is zero.
Var norm(const Var& x, std::size_t axis, bool keepdims = false);

Var exp(const Var& x);
Var log(const Var& x);
Var sqrt(const Var& x);
Var sinh(const Var& x);
Var cosh(const Var& x);
Var acosh(const Var& x, DomainGuard guard = DomainGuard::kStrict);
Var asin(const Var& x, DomainGuard guard = DomainGuard::kStrict);
Var acos(const Var& x, DomainGuard guard = DomainGuard::kStrict);
Var clamp(const Var& x, double lo, double hi);
Var relu(const Var& x);

Var broadcast_to(const Var& x, const Shape& shape);
/// Flat gather: out[k] = x[indices[k]], reshaped to `shape`.
Var take(const Var& x, std::vector<std::size_t> indices, Shape shape);

/// Elementwise function with a caller-supplied derivative.
Var custom_unary(const Var& x, std::function<double(double)> f,
                 std::function<double(double)> df);

// Conveniences built on the primitives.
Var square(const Var& x);
Var rows(const Var& x, const std::vector<std::size_t>& row_ids);
Var diagonal(const Var& x);
/// Entries (r, c) for r in row_ids, c in col_ids, as a matrix.
Var block(const Var& x, const std::vector<std::size_t>& row_ids,
          const std::vector<std::size_t>& col_ids);

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& x);
Var operator+(const Var& a, double b);
Var operator+(double a, const Var& b);
Var operator-(const Var& a, double b);
Var operator-(double a, const Var& b);
Var operator*(const Var& a, double b);
Var operator*(double a, const Var& b);
Var operator/(const Var& a, double b);
Var operator/(double a, const Var& b);

}  // namespace hac::ad
