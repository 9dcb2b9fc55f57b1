#include "hac/ad/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hac/errors.hpp"

namespace hac::ad {

std::string_view primitive_name(Primitive kind) {
  switch (kind) {
    case Primitive::kLeaf: return "leaf";
    case Primitive::kAdd: return "add";
    case Primitive::kSub: return "sub";
    case Primitive::kMul: return "mul";
    case Primitive::kDiv: return "div";
    case Primitive::kNeg: return "neg";
    case Primitive::kAbs: return "abs";
    case Primitive::kMatMul: return "matmul";
    case Primitive::kTranspose: return "transpose";
    case Primitive::kReshape: return "reshape";
    case Primitive::kSum: return "sum";
    case Primitive::kMean: return "mean";
    case Primitive::kExp: return "exp";
    case Primitive::kLog: return "log";
    case Primitive::kLogSumExp: return "logsumexp";
    case Primitive::kSqrt: return "sqrt";
    case Primitive::kSinh: return "sinh";
    case Primitive::kCosh: return "cosh";
    case Primitive::kAcosh: return "acosh";
    case Primitive::kAsin: return "asin";
    case Primitive::kAcos: return "acos";
    case Primitive::kClamp: return "clamp";
    case Primitive::kRelu: return "relu";
    case Primitive::kNorm: return "norm";
    case Primitive::kBroadcast: return "broadcast";
    case Primitive::kTake: return "take";
    case Primitive::kCustom: return "custom";
  }
  return "unknown";
}

const Tensor& Var::value() const { return graph_->value(id_); }

const Tensor& GradientMap::at(NodeId id) const {
  auto it = grads_.find(id);
  if (it == grads_.end()) throw ValidationError("no gradient recorded for node " + std::to_string(id));
  return it->second;
}

Var Graph::variable(Tensor value) {
  if (!value.all_finite()) throw NumericalError("variable initialised with non-finite values");
  nodes_.push_back({Primitive::kLeaf, {}, std::move(value), nullptr, true});
  return Var(this, nodes_.size() - 1);
}

Var Graph::constant(Tensor value) {
  if (!value.all_finite()) throw NumericalError("constant initialised with non-finite values");
  nodes_.push_back({Primitive::kLeaf, {}, std::move(value), nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Graph::record(Primitive kind, std::vector<NodeId> inputs, Tensor value, BackwardFn backward) {
  if (!value.all_finite()) {
    throw NumericalError(std::string("non-finite result from ") + std::string(primitive_name(kind)));
  }
  bool requires_grad = false;
  for (NodeId in : inputs) requires_grad = requires_grad || nodes_.at(in).requires_grad;
  nodes_.push_back({kind, std::move(inputs), std::move(value), std::move(backward), requires_grad});
  return Var(this, nodes_.size() - 1);
}

GradientMap Graph::backward(const Var& loss, const std::vector<Var>& wrt) const {
  if (&loss.graph() != this) throw ValidationError("loss belongs to a different graph");
  if (loss.value().size() != 1) {
    throw ShapeError("backward needs a scalar loss, got " + shape_string(loss.shape()));
  }
  for (const Var& v : wrt) {
    if (!v.valid() || &v.graph() != this || v.id() >= nodes_.size()) {
      throw ValidationError("gradient requested for a node that is not on this graph");
    }
  }

  std::vector<Tensor> grads(loss.id() + 1);
  std::vector<bool> present(loss.id() + 1, false);
  grads[loss.id()] = Tensor::full(loss.shape(), 1.0);
  present[loss.id()] = true;

  for (NodeId id = loss.id() + 1; id-- > 0;) {
    const Node& node = nodes_[id];
    if (!present[id] || node.kind == Primitive::kLeaf || !node.requires_grad) continue;
    std::vector<Tensor> input_grads = node.backward(grads[id]);
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      const NodeId in = node.inputs[k];
      if (!nodes_[in].requires_grad) continue;
      const Tensor& g = input_grads[k];
      if (!g.all_finite()) {
        throw NumericalError(std::string("non-finite gradient through ") +
                             std::string(primitive_name(node.kind)));
      }
      if (!present[in]) {
        grads[in] = g;
        present[in] = true;
      } else {
        auto dst = grads[in].values();
        auto src = g.values();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
      }
    }
  }

  GradientMap out;
  for (const Var& v : wrt) {
    if (v.id() < present.size() && present[v.id()]) {
      out.insert(v.id(), grads[v.id()]);
    } else {
      out.insert(v.id(), Tensor::zeros(nodes_[v.id()].value.shape()));
    }
  }
  return out;
}

namespace {

Graph& same_graph(const Var& a, const Var& b) {
  if (!a.valid() || !b.valid()) throw ValidationError("operation on an empty Var");
  if (&a.graph() != &b.graph()) throw ValidationError("operands live on different graphs");
  return a.graph();
}

Shape broadcast_shape(const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t ea = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::size_t eb = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (ea != eb && ea != 1 && eb != 1) {
      throw ShapeError("cannot broadcast " + shape_string(a) + " with " + shape_string(b));
    }
    out[i] = std::max(ea, eb);
  }
  return out;
}

// For every flat index of `to`, the flat index into a tensor of shape `from`.
std::vector<std::size_t> broadcast_index(const Shape& from, const Shape& to) {
  const std::size_t rank = to.size();
  if (from.size() > rank) throw ShapeError("cannot broadcast " + shape_string(from) + " to " + shape_string(to));
  std::vector<std::size_t> strides(rank, 0);
  std::size_t stride = 1;
  for (std::size_t i = from.size(); i-- > 0;) {
    const std::size_t j = i + (rank - from.size());
    if (from[i] != 1 && from[i] != to[j]) {
      throw ShapeError("cannot broadcast " + shape_string(from) + " to " + shape_string(to));
    }
    strides[j] = from[i] == 1 ? 0 : stride;
    stride *= from[i];
  }
  const std::size_t total = shape_size(to);
  std::vector<std::size_t> index(total);
  std::vector<std::size_t> counter(rank, 0);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < total; ++k) {
    index[k] = offset;
    for (std::size_t d = rank; d-- > 0;) {
      ++counter[d];
      offset += strides[d];
      if (counter[d] < to[d]) break;
      offset -= strides[d] * counter[d];
      counter[d] = 0;
    }
  }
  return index;
}

template <class Forward, class DerivA, class DerivB>
Var binary(Primitive kind, const Var& a, const Var& b, Forward f, DerivA da, DerivB db) {
  Graph& g = same_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Shape out_shape = broadcast_shape(av.shape(), bv.shape());
  auto ia = broadcast_index(av.shape(), out_shape);
  auto ib = broadcast_index(bv.shape(), out_shape);
  Tensor out = Tensor::zeros(out_shape);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = f(av[ia[k]], bv[ib[k]]);
  return g.record(kind, {a.id(), b.id()}, std::move(out),
                  [av, bv, ia = std::move(ia), ib = std::move(ib), da, db](const Tensor& grad) {
                    Tensor ga = Tensor::zeros(av.shape());
                    Tensor gb = Tensor::zeros(bv.shape());
                    for (std::size_t k = 0; k < grad.size(); ++k) {
                      const double x = av[ia[k]];
                      const double y = bv[ib[k]];
                      ga[ia[k]] += grad[k] * da(x, y);
                      gb[ib[k]] += grad[k] * db(x, y);
                    }
                    return std::vector<Tensor>{std::move(ga), std::move(gb)};
                  });
}

// Elementwise op; `df` receives (input, output).
template <class Forward, class Deriv>
Var unary(Primitive kind, const Var& x, Forward f, Deriv df) {
  const Tensor& xv = x.value();
  Tensor out = xv;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = f(xv[k]);
  Tensor saved = out;
  return x.graph().record(kind, {x.id()}, std::move(out),
                          [xv, saved = std::move(saved), df](const Tensor& grad) {
                            Tensor gx = Tensor::zeros(xv.shape());
                            for (std::size_t k = 0; k < grad.size(); ++k) {
                              gx[k] = grad[k] * df(xv[k], saved[k]);
                            }
                            return std::vector<Tensor>{std::move(gx)};
                          });
}

struct AxisSplit {
  std::size_t outer;
  std::size_t extent;
  std::size_t inner;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_string(shape));
  }
  AxisSplit s{1, shape[axis], 1};
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

Shape reduced_shape(const Shape& shape, std::size_t axis, bool keepdims) {
  Shape out = shape;
  if (keepdims) {
    out[axis] = 1;
  } else {
    out.erase(out.begin() + static_cast<std::ptrdiff_t>(axis));
  }
  return out;
}

// Reduction along one axis where d(out)/d(x_j) = weight(x_j, out) is elementwise.
template <class Reduce, class Weight>
Var reduce_axis(Primitive kind, const Var& x, std::size_t axis, bool keepdims, Reduce reduce,
                Weight weight) {
  const Tensor& xv = x.value();
  const AxisSplit s = split_axis(xv.shape(), axis);
  Tensor out = Tensor::zeros(reduced_shape(xv.shape(), axis, keepdims));
  std::vector<double> lane(s.extent);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      for (std::size_t j = 0; j < s.extent; ++j) lane[j] = xv[(o * s.extent + j) * s.inner + i];
      out[o * s.inner + i] = reduce(lane);
    }
  }
  Tensor saved = out;
  return x.graph().record(kind, {x.id()}, std::move(out),
                          [xv, saved = std::move(saved), s, weight](const Tensor& grad) {
                            Tensor gx = Tensor::zeros(xv.shape());
                            for (std::size_t o = 0; o < s.outer; ++o) {
                              for (std::size_t i = 0; i < s.inner; ++i) {
                                const std::size_t r = o * s.inner + i;
                                for (std::size_t j = 0; j < s.extent; ++j) {
                                  const std::size_t k = (o * s.extent + j) * s.inner + i;
                                  gx[k] = grad[r] * weight(xv[k], saved[r], s.extent);
                                }
                              }
                            }
                            return std::vector<Tensor>{std::move(gx)};
                          });
}

Var scalar_constant(Graph& g, double value) { return g.constant(value); }

}  // namespace

Var add(const Var& a, const Var& b) {
  return binary(
      Primitive::kAdd, a, b, [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Var sub(const Var& a, const Var& b) {
  return binary(
      Primitive::kSub, a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Var mul(const Var& a, const Var& b) {
  return binary(
      Primitive::kMul, a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Var div(const Var& a, const Var& b) {
  for (double y : b.value().values()) {
    if (y == 0.0) throw DomainError("division by zero");
  }
  return binary(
      Primitive::kDiv, a, b, [](double x, double y) { return x / y; },
      [](double, double y) { return 1.0 / y; }, [](double x, double y) { return -x / (y * y); });
}

Var neg(const Var& x) {
  return unary(Primitive::kNeg, x, [](double v) { return -v; }, [](double, double) { return -1.0; });
}

Var abs(const Var& x) {
  return unary(
      Primitive::kAbs, x, [](double v) { return std::fabs(v); },
      [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Var matmul(const Var& a, const Var& b) {
  Graph& g = same_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows()) {
    throw ShapeError("matmul of " + shape_string(av.shape()) + " and " + shape_string(bv.shape()));
  }
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  Tensor out = Tensor::zeros({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * bv[p * n + j];
    }
  }
  return g.record(Primitive::kMatMul, {a.id(), b.id()}, std::move(out),
                  [av, bv, m, k, n](const Tensor& grad) {
                    Tensor ga = Tensor::zeros(av.shape());
                    Tensor gb = Tensor::zeros(bv.shape());
                    for (std::size_t i = 0; i < m; ++i) {
                      for (std::size_t p = 0; p < k; ++p) {
                        double acc = 0.0;
                        const double aip = av[i * k + p];
                        for (std::size_t j = 0; j < n; ++j) {
                          acc += grad[i * n + j] * bv[p * n + j];
                          gb[p * n + j] += aip * grad[i * n + j];
                        }
                        ga[i * k + p] = acc;
                      }
                    }
                    return std::vector<Tensor>{std::move(ga), std::move(gb)};
                  });
}

Var transpose(const Var& x) {
  const Tensor& xv = x.value();
  if (xv.rank() != 2) throw ShapeError("transpose needs a matrix, got " + shape_string(xv.shape()));
  const std::size_t r = xv.rows(), c = xv.cols();
  Tensor out = Tensor::zeros({c, r});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = xv[i * c + j];
  }
  return x.graph().record(Primitive::kTranspose, {x.id()}, std::move(out), [r, c](const Tensor& grad) {
    Tensor gx = Tensor::zeros({r, c});
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) gx[i * c + j] = grad[j * r + i];
    }
    return std::vector<Tensor>{std::move(gx)};
  });
}

Var reshape(const Var& x, Shape shape) {
  const Tensor& xv = x.value();
  if (shape_size(shape) != xv.size()) {
    throw ShapeError("cannot reshape " + shape_string(xv.shape()) + " to " + shape_string(shape));
  }
  Shape original = xv.shape();
  Tensor out(std::move(shape), xv.data());
  return x.graph().record(Primitive::kReshape, {x.id()}, std::move(out), [original](const Tensor& grad) {
    return std::vector<Tensor>{Tensor(original, grad.data())};
  });
}

Var sum(const Var& x) {
  const Tensor& xv = x.value();
  double total = 0.0;
  for (double v : xv.values()) total += v;
  Shape shape = xv.shape();
  return x.graph().record(Primitive::kSum, {x.id()}, Tensor::scalar(total), [shape](const Tensor& grad) {
    return std::vector<Tensor>{Tensor::full(shape, grad.item())};
  });
}

Var sum(const Var& x, std::size_t axis, bool keepdims) {
  return reduce_axis(
      Primitive::kSum, x, axis, keepdims,
      [](const std::vector<double>& lane) {
        double acc = 0.0;
        for (double v : lane) acc += v;
        return acc;
      },
      [](double, double, std::size_t) { return 1.0; });
}

Var mean(const Var& x) {
  const Tensor& xv = x.value();
  double total = 0.0;
  for (double v : xv.values()) total += v;
  const double n = static_cast<double>(xv.size());
  Shape shape = xv.shape();
  return x.graph().record(Primitive::kMean, {x.id()}, Tensor::scalar(total / n),
                          [shape, n](const Tensor& grad) {
                            return std::vector<Tensor>{Tensor::full(shape, grad.item() / n)};
                          });
}

Var mean(const Var& x, std::size_t axis, bool keepdims) {
  return reduce_axis(
      Primitive::kMean, x, axis, keepdims,
      [](const std::vector<double>& lane) {
        double acc = 0.0;
        for (double v : lane) acc += v;
        return acc / static_cast<double>(lane.size());
      },
      [](double, double, std::size_t n) { return 1.0 / static_cast<double>(n); });
}

Var logsumexp(const Var& x, std::size_t axis, bool keepdims) {
  return reduce_axis(
      Primitive::kLogSumExp, x, axis, keepdims,
      [](const std::vector<double>& lane) {
        const double peak = *std::max_element(lane.begin(), lane.end());
        double acc = 0.0;
        for (double v : lane) acc += std::exp(v - peak);
        return peak + std::log(acc);
      },
      [](double v, double out, std::size_t) { return std::exp(v - out); });
}

Var norm(const Var& x, std::size_t axis, bool keepdims) {
  return reduce_axis(
      Primitive::kNorm, x, axis, keepdims,
      [](const std::vector<double>& lane) {
        double acc = 0.0;
        for (double v : lane) acc += v * v;
        return std::sqrt(acc);
      },
      [](double v, double out, std::size_t) { return out > 0.0 ? v / out : 0.0; });
}

Var exp(const Var& x) {
  return unary(Primitive::kExp, x, [](double v) { return std::exp(v); },
               [](double, double out) { return out; });
}

Var log(const Var& x) {
  for (double v : x.value().values()) {
    if (v <= 0.0) throw DomainError("log of non-positive value " + std::to_string(v));
  }
  return unary(Primitive::kLog, x, [](double v) { return std::log(v); },
               [](double v, double) { return 1.0 / v; });
}

Var sqrt(const Var& x) {
  for (double v : x.value().values()) {
    if (v < 0.0) throw DomainError("sqrt of negative value " + std::to_string(v));
  }
  return unary(Primitive::kSqrt, x, [](double v) { return std::sqrt(v); },
               [](double, double out) { return 0.5 / out; });
}

Var sinh(const Var& x) {
  return unary(Primitive::kSinh, x, [](double v) { return std::sinh(v); },
               [](double v, double) { return std::cosh(v); });
}

Var cosh(const Var& x) {
  return unary(Primitive::kCosh, x, [](double v) { return std::cosh(v); },
               [](double v, double) { return std::sinh(v); });
}

Var acosh(const Var& x, DomainGuard guard) {
  if (guard == DomainGuard::kStrict) {
    for (double v : x.value().values()) {
      if (v < 1.0) throw DomainError("acosh argument " + std::to_string(v) + " below 1");
    }
  }
  return unary(
      Primitive::kAcosh, x, [](double v) { return std::acosh(std::max(v, 1.0)); },
      [guard](double v, double) {
        if (guard == DomainGuard::kClamp && v <= 1.0) return 0.0;
        return 1.0 / std::sqrt(v * v - 1.0);
      });
}

Var asin(const Var& x, DomainGuard guard) {
  if (guard == DomainGuard::kStrict) {
    for (double v : x.value().values()) {
      if (v < -1.0 || v > 1.0) throw DomainError("asin argument " + std::to_string(v) + " outside [-1, 1]");
    }
  }
  return unary(
      Primitive::kAsin, x, [](double v) { return std::asin(std::clamp(v, -1.0, 1.0)); },
      [guard](double v, double) {
        if (guard == DomainGuard::kClamp && std::fabs(v) >= 1.0) return 0.0;
        return 1.0 / std::sqrt(1.0 - v * v);
      });
}

Var acos(const Var& x, DomainGuard guard) {
  if (guard == DomainGuard::kStrict) {
    for (double v : x.value().values()) {
      if (v < -1.0 || v > 1.0) throw DomainError("acos argument " + std::to_string(v) + " outside [-1, 1]");
    }
  }
  return unary(
      Primitive::kAcos, x, [](double v) { return std::acos(std::clamp(v, -1.0, 1.0)); },
      [guard](double v, double) {
        if (guard == DomainGuard::kClamp && std::fabs(v) >= 1.0) return 0.0;
        return -1.0 / std::sqrt(1.0 - v * v);
      });
}

Var clamp(const Var& x, double lo, double hi) {
  if (lo > hi) throw DomainError("clamp bounds reversed");
  return unary(
      Primitive::kClamp, x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
      [lo, hi](double v, double) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
}

Var relu(const Var& x) {
  return unary(Primitive::kRelu, x, [](double v) { return v > 0.0 ? v : 0.0; },
               [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var broadcast_to(const Var& x, const Shape& shape) {
  const Tensor& xv = x.value();
  auto index = broadcast_index(xv.shape(), shape);
  Tensor out = Tensor::zeros(shape);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = xv[index[k]];
  Shape original = xv.shape();
  return x.graph().record(Primitive::kBroadcast, {x.id()}, std::move(out),
                          [original, index = std::move(index)](const Tensor& grad) {
                            Tensor gx = Tensor::zeros(original);
                            for (std::size_t k = 0; k < grad.size(); ++k) gx[index[k]] += grad[k];
                            return std::vector<Tensor>{std::move(gx)};
                          });
}

Var take(const Var& x, std::vector<std::size_t> indices, Shape shape) {
  const Tensor& xv = x.value();
  if (shape_size(shape) != indices.size()) {
    throw ShapeError("take: " + std::to_string(indices.size()) + " indices for shape " + shape_string(shape));
  }
  std::vector<double> values(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= xv.size()) throw ShapeError("take: index out of range");
    values[k] = xv[indices[k]];
  }
  Shape original = xv.shape();
  return x.graph().record(Primitive::kTake, {x.id()}, Tensor(std::move(shape), std::move(values)),
                          [original, indices = std::move(indices)](const Tensor& grad) {
                            Tensor gx = Tensor::zeros(original);
                            for (std::size_t k = 0; k < indices.size(); ++k) gx[indices[k]] += grad[k];
                            return std::vector<Tensor>{std::move(gx)};
                          });
}

Var custom_unary(const Var& x, std::function<double(double)> f, std::function<double(double)> df) {
  return unary(Primitive::kCustom, x, f, [df](double v, double) { return df(v); });
}

Var square(const Var& x) { return mul(x, x); }

Var rows(const Var& x, const std::vector<std::size_t>& row_ids) {
  const Tensor& xv = x.value();
  if (xv.rank() != 2) throw ShapeError("rows() needs a matrix");
  if (row_ids.empty()) throw ShapeError("rows() with no row ids");
  const std::size_t c = xv.cols();
  std::vector<std::size_t> idx;
  idx.reserve(row_ids.size() * c);
  for (std::size_t r : row_ids) {
    if (r >= xv.rows()) throw ShapeError("row id out of range");
    for (std::size_t j = 0; j < c; ++j) idx.push_back(r * c + j);
  }
  return take(x, std::move(idx), {row_ids.size(), c});
}

Var diagonal(const Var& x) {
  const Tensor& xv = x.value();
  if (xv.rank() != 2) throw ShapeError("diagonal() needs a matrix");
  const std::size_t n = std::min(xv.rows(), xv.cols());
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i * xv.cols() + i;
  return take(x, std::move(idx), {n});
}

Var block(const Var& x, const std::vector<std::size_t>& row_ids, const std::vector<std::size_t>& col_ids) {
  const Tensor& xv = x.value();
  if (xv.rank() != 2) throw ShapeError("block() needs a matrix");
  if (row_ids.empty() || col_ids.empty()) throw ShapeError("block() with an empty index set");
  std::vector<std::size_t> idx;
  idx.reserve(row_ids.size() * col_ids.size());
  for (std::size_t r : row_ids) {
    for (std::size_t c : col_ids) {
      if (r >= xv.rows() || c >= xv.cols()) throw ShapeError("block index out of range");
      idx.push_back(r * xv.cols() + c);
    }
  }
  return take(x, std::move(idx), {row_ids.size(), col_ids.size()});
}

Var operator+(const Var& a, const Var& b) { return add(a, b); }
Var operator-(const Var& a, const Var& b) { return sub(a, b); }
Var operator*(const Var& a, const Var& b) { return mul(a, b); }
Var operator/(const Var& a, const Var& b) { return div(a, b); }
Var operator-(const Var& x) { return neg(x); }
Var operator+(const Var& a, double b) { return add(a, scalar_constant(a.graph(), b)); }
Var operator+(double a, const Var& b) { return add(scalar_constant(b.graph(), a), b); }
Var operator-(const Var& a, double b) { return sub(a, scalar_constant(a.graph(), b)); }
Var operator-(double a, const Var& b) { return sub(scalar_constant(b.graph(), a), b); }
Var operator*(const Var& a, double b) { return mul(a, scalar_constant(a.graph(), b)); }
Var operator*(double a, const Var& b) { return mul(scalar_constant(b.graph(), a), b); }
Var operator/(const Var& a, double b) { return div(a, scalar_constant(a.graph(), b)); }
Var operator/(double a, const Var& b) { return div(scalar_constant(b.graph(), a), b); }

}  // namespace hac::ad
