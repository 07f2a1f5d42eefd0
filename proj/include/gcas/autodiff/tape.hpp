#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gcas/autodiff/parameters.hpp"
#include "gcas/autodiff/tensor.hpp"

namespace gcas {

/// Closed primitive set. Every kind has a forward rule in Tape::compute, a
/// backward rule in Tape::backward and a finite-difference test.
enum class OpKind {
  Constant,
  Parameter,
  Matmul,        // [m x n] * [n] -> [m], [m x n] * [n x k] -> [m x k]
  Add,
  Sub,
  Mul,           // elementwise
  Scale,         // multiply by args.scalar
  Concat,        // vectors -> vector
  StackColumns,  // l vectors of length n -> [n x l]
  Slice,         // [args.index, args.index + args.length)
  Sigmoid,
  Tanh,
  Relu,
  Softmax,
  Log,
  Embedding,            // row args.index of a [V x D] table -> [D]
  Sum,                  // -> [1]
  SoftmaxCrossEntropy,  // -log softmax(x)[args.index] -> [1]
  SigmoidCrossEntropy,  // sum_i BCE(sigmoid(x_i), args.targets[i]) -> [1]
};

inline const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::Constant: return "constant";
    case OpKind::Parameter: return "parameter";
    case OpKind::Matmul: return "matmul";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Scale: return "scale";
    case OpKind::Concat: return "concat";
    case OpKind::StackColumns: return "stack_columns";
    case OpKind::Slice: return "slice";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Tanh: return "tanh";
    case OpKind::Relu: return "relu";
    case OpKind::Softmax: return "softmax";
    case OpKind::Log: return "log";
    case OpKind::Embedding: return "embedding";
    case OpKind::Sum: return "sum";
    case OpKind::SoftmaxCrossEntropy: return "softmax_cross_entropy";
    case OpKind::SigmoidCrossEntropy: return "sigmoid_cross_entropy";
  }
  return "?";
}

struct OpArgs {
  double scalar = 0.0;
  std::size_t index = 0;
  std::size_t length = 0;
  std::vector<double> targets;
};

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

inline std::vector<double> softmax(std::span<const double> x) {
  const double mx = *std::max_element(x.begin(), x.end());
  std::vector<double> out(x.size());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) total += (out[i] = std::exp(x[i] - mx));
  for (double& v : out) v /= total;
  return out;
}

inline std::vector<double> log_softmax(std::span<const double> x) {
  const double mx = *std::max_element(x.begin(), x.end());
  double total = 0.0;
  for (double v : x) total += std::exp(v - mx);
  const double lse = mx + std::log(total);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - lse;
  return out;
}

class Tape;

/// Handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;
  const Tensor& value() const;
};

/// Append-only reverse-mode computation record. Nodes are topologically
/// ordered by construction; parameters are read from a ParameterStore that
/// must outlive the tape.
class Tape {
 public:
  explicit Tape(const ParameterStore& params) : params_(&params) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  std::size_t size() const { return nodes_.size(); }
  const Tensor& value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.external ? *n.external : n.value;
  }
  OpKind kind(std::size_t id) const { return nodes_[id].op; }

  Var constant(Tensor t) {
    Node n;
    n.op = OpKind::Constant;
    n.value = std::move(t);
    return push(std::move(n));
  }

  /// Leaf for a stored parameter; repeated calls return the same node.
  Var param(ParamId id) {
    auto it = param_nodes_.find(id);
    if (it != param_nodes_.end()) return Var{this, it->second};
    Node n;
    n.op = OpKind::Parameter;
    n.param = id;
    n.external = &(*params_)[id];
    Var v = push(std::move(n));
    param_nodes_.emplace(id, v.id);
    return v;
  }

  /// Generic entry point: validates shapes, computes the forward value and
  /// records the node.
  Var apply(OpKind op, std::span<const Var> inputs, OpArgs args = {}) {
    std::vector<const Tensor*> in;
    in.reserve(inputs.size());
    Node n;
    n.op = op;
    n.inputs.reserve(inputs.size());
    for (const Var& v : inputs) {
      if (v.tape != this) throw std::invalid_argument("input belongs to a different tape");
      in.push_back(&value(v.id));
      n.inputs.push_back(v.id);
    }
    n.value = compute(op, in, args);
    n.args = std::move(args);
    return push(std::move(n));
  }

  Var matmul(Var a, Var b) { return apply2(OpKind::Matmul, a, b); }
  Var add(Var a, Var b) { return apply2(OpKind::Add, a, b); }
  Var sub(Var a, Var b) { return apply2(OpKind::Sub, a, b); }
  Var mul(Var a, Var b) { return apply2(OpKind::Mul, a, b); }
  Var scale(Var a, double s) { return apply1(OpKind::Scale, a, OpArgs{.scalar = s}); }
  Var concat(std::span<const Var> parts) { return apply(OpKind::Concat, parts); }
  Var concat(std::initializer_list<Var> parts) {
    return apply(OpKind::Concat, std::span<const Var>(parts.begin(), parts.size()));
  }
  Var stack_columns(std::span<const Var> cols) { return apply(OpKind::StackColumns, cols); }
  Var slice(Var a, std::size_t offset, std::size_t length) {
    return apply1(OpKind::Slice, a, OpArgs{.index = offset, .length = length});
  }
  Var sigmoid(Var a) { return apply1(OpKind::Sigmoid, a); }
  Var tanh(Var a) { return apply1(OpKind::Tanh, a); }
  Var relu(Var a) { return apply1(OpKind::Relu, a); }
  Var softmax(Var a) { return apply1(OpKind::Softmax, a); }
  Var log(Var a) { return apply1(OpKind::Log, a); }
  Var embedding(Var table, std::size_t row) {
    return apply1(OpKind::Embedding, table, OpArgs{.index = row});
  }
  Var sum(Var a) { return apply1(OpKind::Sum, a); }
  Var softmax_cross_entropy(Var logits, std::size_t target) {
    return apply1(OpKind::SoftmaxCrossEntropy, logits, OpArgs{.index = target});
  }
  Var sigmoid_cross_entropy(Var logits, std::vector<double> targets) {
    return apply1(OpKind::SigmoidCrossEntropy, logits, OpArgs{.targets = std::move(targets)});
  }
  Var affine(Var w, Var x, Var b) { return add(matmul(w, x), b); }

  /// Gradient of a scalar node with respect to every parameter of the store.
  /// Parameters the loss does not reach get zero gradients.
  Gradients backward(Var loss) {
    if (loss.tape != this) throw std::invalid_argument("loss belongs to a different tape");
    const Tensor& lv = value(loss.id);
    if (lv.size() != 1) {
      throw ShapeError("backward needs a scalar loss, got " + shape_string(lv.shape));
    }
    std::vector<Tensor> grads(nodes_.size());
    grads[loss.id] = Tensor(lv.shape, 1.0);
    for (std::size_t id = loss.id + 1; id-- > 0;) {
      if (grads[id].values.empty()) continue;
      propagate(id, grads);
    }
    Gradients out = zero_gradients(*params_);
    for (const auto& [pid, nid] : param_nodes_) {
      if (!grads[nid].values.empty()) out[pid] = std::move(grads[nid]);
    }
    return out;
  }

  /// Recomputes every non-leaf node from its inputs and reports whether all
  /// stored outputs are reproduced bit-exactly.
  bool replay_matches() const {
    for (std::size_t id = 0; id < nodes_.size(); ++id) {
      const Node& n = nodes_[id];
      if (n.op == OpKind::Constant || n.op == OpKind::Parameter) continue;
      std::vector<const Tensor*> in;
      for (std::size_t i : n.inputs) in.push_back(&value(i));
      if (compute(n.op, in, n.args) != n.value) return false;
    }
    return true;
  }

  static Tensor compute(OpKind op, const std::vector<const Tensor*>& in, const OpArgs& args);

 private:
  struct Node {
    OpKind op = OpKind::Constant;
    std::vector<std::size_t> inputs;
    Tensor value;
    OpArgs args;
    const Tensor* external = nullptr;
    ParamId param = 0;
  };

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
  }
  Var apply1(OpKind op, Var a, OpArgs args = {}) {
    const Var in[1] = {a};
    return apply(op, in, std::move(args));
  }
  Var apply2(OpKind op, Var a, Var b) {
    const Var in[2] = {a, b};
    return apply(op, in);
  }

  void propagate(std::size_t id, std::vector<Tensor>& grads) const;

  const ParameterStore* params_;
  std::vector<Node> nodes_;
  std::unordered_map<ParamId, std::size_t> param_nodes_;
};

inline const Tensor& Var::value() const { return tape->value(id); }

namespace detail {

[[noreturn]] inline void shape_fail(OpKind op, const std::vector<const Tensor*>& in,
                                    const std::string& what = "incompatible shapes") {
  std::string msg = std::string(op_name(op)) + ": " + what + " (";
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (i) msg += ", ";
    msg += shape_string(in[i]->shape);
  }
  throw ShapeError(msg + ")");
}

inline void expect_arity(OpKind op, const std::vector<const Tensor*>& in, std::size_t n) {
  if (in.size() != n) {
    throw ShapeError(std::string(op_name(op)) + ": expected " + std::to_string(n) +
                     " inputs, got " + std::to_string(in.size()));
  }
}

inline Tensor& grad_slot(std::vector<Tensor>& grads, std::size_t id, const Shape& shape) {
  if (grads[id].values.empty()) grads[id] = Tensor(shape, 0.0);
  return grads[id];
}

}  // namespace detail

inline Tensor Tape::compute(OpKind op, const std::vector<const Tensor*>& in, const OpArgs& args) {
  using detail::expect_arity;
  using detail::shape_fail;
  switch (op) {
    case OpKind::Constant:
    case OpKind::Parameter:
      throw std::invalid_argument("leaf nodes are not computed");
    case OpKind::Matmul: {
      expect_arity(op, in, 2);
      const Tensor& a = *in[0];
      const Tensor& b = *in[1];
      if (!a.is_matrix() || a.cols() != b.rows()) shape_fail(op, in);
      const std::size_t m = a.rows(), n = a.cols();
      if (b.is_vector()) {
        Tensor out({m});
        for (std::size_t i = 0; i < m; ++i) {
          const double* row = &a.values[i * n];
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += row[j] * b.values[j];
          out.values[i] = acc;
        }
        return out;
      }
      const std::size_t k = b.cols();
      Tensor out({m, k});
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double aij = a.values[i * n + j];
          for (std::size_t c = 0; c < k; ++c) out.values[i * k + c] += aij * b.values[j * k + c];
        }
      return out;
    }
    case OpKind::Add:
    case OpKind::Sub:
    case OpKind::Mul: {
      expect_arity(op, in, 2);
      if (in[0]->shape != in[1]->shape) shape_fail(op, in);
      Tensor out = *in[0];
      const auto& b = in[1]->values;
      for (std::size_t i = 0; i < out.size(); ++i) {
        if (op == OpKind::Add) out.values[i] += b[i];
        else if (op == OpKind::Sub) out.values[i] -= b[i];
        else out.values[i] *= b[i];
      }
      return out;
    }
    case OpKind::Scale: {
      expect_arity(op, in, 1);
      Tensor out = *in[0];
      for (double& v : out.values) v *= args.scalar;
      return out;
    }
    case OpKind::Concat: {
      if (in.empty()) shape_fail(op, in, "no inputs");
      std::vector<double> v;
      for (const Tensor* t : in) {
        if (!t->is_vector()) shape_fail(op, in, "inputs must be vectors");
        v.insert(v.end(), t->values.begin(), t->values.end());
      }
      return Tensor::vector(std::move(v));
    }
    case OpKind::StackColumns: {
      if (in.empty()) shape_fail(op, in, "no inputs");
      const std::size_t n = in[0]->size(), l = in.size();
      Tensor out({n, l});
      for (std::size_t c = 0; c < l; ++c) {
        if (!in[c]->is_vector() || in[c]->size() != n) shape_fail(op, in);
        for (std::size_t r = 0; r < n; ++r) out.values[r * l + c] = in[c]->values[r];
      }
      return out;
    }
    case OpKind::Slice: {
      expect_arity(op, in, 1);
      const Tensor& a = *in[0];
      if (!a.is_vector() || args.length == 0 || args.index + args.length > a.size()) {
        shape_fail(op, in, "slice [" + std::to_string(args.index) + ", " +
                               std::to_string(args.index + args.length) + ") out of range");
      }
      return Tensor::vector(std::vector<double>(a.values.begin() + args.index,
                                                a.values.begin() + args.index + args.length));
    }
    case OpKind::Sigmoid:
    case OpKind::Tanh:
    case OpKind::Relu:
    case OpKind::Log: {
      expect_arity(op, in, 1);
      Tensor out = *in[0];
      for (double& v : out.values) {
        if (op == OpKind::Sigmoid) v = gcas::sigmoid(v);
        else if (op == OpKind::Tanh) v = std::tanh(v);
        else if (op == OpKind::Relu) v = v > 0.0 ? v : 0.0;
        else v = std::log(v);
      }
      return out;
    }
    case OpKind::Softmax: {
      expect_arity(op, in, 1);
      if (!in[0]->is_vector()) shape_fail(op, in, "input must be a vector");
      return Tensor::vector(gcas::softmax(in[0]->values));
    }
    case OpKind::Embedding: {
      expect_arity(op, in, 1);
      const Tensor& table = *in[0];
      if (!table.is_matrix() || args.index >= table.rows()) {
        shape_fail(op, in, "row " + std::to_string(args.index) + " out of range");
      }
      const std::size_t d = table.cols();
      return Tensor::vector(std::vector<double>(table.values.begin() + args.index * d,
                                                table.values.begin() + (args.index + 1) * d));
    }
    case OpKind::Sum: {
      expect_arity(op, in, 1);
      double s = 0.0;
      for (double v : in[0]->values) s += v;
      return Tensor::scalar(s);
    }
    case OpKind::SoftmaxCrossEntropy: {
      expect_arity(op, in, 1);
      if (!in[0]->is_vector() || args.index >= in[0]->size()) {
        shape_fail(op, in, "target " + std::to_string(args.index) + " out of range");
      }
      return Tensor::scalar(-gcas::log_softmax(in[0]->values)[args.index]);
    }
    case OpKind::SigmoidCrossEntropy: {
      expect_arity(op, in, 1);
      const Tensor& x = *in[0];
      if (!x.is_vector() || args.targets.size() != x.size()) {
        shape_fail(op, in, "expected " + std::to_string(args.targets.size()) + " targets");
      }
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        s += softplus(x.values[i]) - args.targets[i] * x.values[i];
      }
      return Tensor::scalar(s);
    }
  }
  throw std::invalid_argument("unknown op");
}

inline void Tape::propagate(std::size_t id, std::vector<Tensor>& grads) const {
  using detail::grad_slot;
  const Node& n = nodes_[id];
  const Tensor& g = grads[id];
  const Tensor& out = n.value;
  auto input = [&](std::size_t i) -> const Tensor& { return value(n.inputs[i]); };
  auto slot = [&](std::size_t i) -> Tensor& {
    return grad_slot(grads, n.inputs[i], input(i).shape);
  };

  switch (n.op) {
    case OpKind::Constant:
    case OpKind::Parameter:
      return;
    case OpKind::Matmul: {
      const Tensor& a = input(0);
      const Tensor& b = input(1);
      const std::size_t m = a.rows(), k = a.cols();
      const std::size_t c = b.is_vector() ? 1 : b.cols();
      Tensor& ga = slot(0);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t cc = 0; cc < c; ++cc) {
          const double gi = g.values[i * c + cc];
          if (gi == 0.0) continue;
          double* row = &ga.values[i * k];
          for (std::size_t j = 0; j < k; ++j) row[j] += gi * b.values[j * c + cc];
        }
      Tensor& gb = slot(1);
      for (std::size_t i = 0; i < m; ++i) {
        const double* row = &a.values[i * k];
        for (std::size_t cc = 0; cc < c; ++cc) {
          const double gi = g.values[i * c + cc];
          if (gi == 0.0) continue;
          for (std::size_t j = 0; j < k; ++j) gb.values[j * c + cc] += gi * row[j];
        }
      }
      return;
    }
    case OpKind::Add: {
      Tensor& ga = slot(0);
      for (std::size_t i = 0; i < g.size(); ++i) ga.values[i] += g.values[i];
      Tensor& gb = slot(1);
      for (std::size_t i = 0; i < g.size(); ++i) gb.values[i] += g.values[i];
      return;
    }
    case OpKind::Sub: {
      Tensor& ga = slot(0);
      for (std::size_t i = 0; i < g.size(); ++i) ga.values[i] += g.values[i];
      Tensor& gb = slot(1);
      for (std::size_t i = 0; i < g.size(); ++i) gb.values[i] -= g.values[i];
      return;
    }
    case OpKind::Mul: {
      const Tensor& a = input(0);
      const Tensor& b = input(1);
      Tensor& ga = slot(0);
      for (std::size_t i = 0; i < g.size(); ++i) ga.values[i] += g.values[i] * b.values[i];
      Tensor& gb = slot(1);
      for (std::size_t i = 0; i < g.size(); ++i) gb.values[i] += g.values[i] * a.values[i];
      return;
    }
    case OpKind::Scale: {
      Tensor& ga = slot(0);
      for (std::size_t i = 0; i < g.size(); ++i) ga.values[i] += g.values[i] * n.args.scalar;
      return;
    }
    case OpKind::Concat: {
      std::size_t offset = 0;
      for (std::size_t p = 0; p < n.inputs.size(); ++p) {
        Tensor& gp = slot(p);
        for (std::size_t i = 0; i < gp.size(); ++i) gp.values[i] += g.values[offset + i];
        offset += gp.size();
      }
      return;
    }
    case OpKind::StackColumns: {
      const std::size_t rows = out.rows(), l = out.cols();
      for (std::size_t c = 0; c < l; ++c) {
        Tensor& gc = slot(c);
        for (std::size_t r = 0; r < rows; ++r) gc.values[r] += g.values[r * l + c];
      }
      return;
    }
    case OpKind::Slice: {
      Tensor& ga = slot(0);
      for (std::size_t i = 0; i < g.size(); ++i) ga.values[n.args.index + i] += g.values[i];
      return;
    }
    case OpKind::Sigmoid: {
      Tensor& ga = slot(0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double s = out.values[i];
        ga.values[i] += g.values[i] * s * (1.0 - s);
      }
      return;
    }
    case OpKind::Tanh: {
      Tensor& ga = slot(0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double t = out.values[i];
        ga.values[i] += g.values[i] * (1.0 - t * t);
      }
      return;
    }
    case OpKind::Relu: {
      const Tensor& a = input(0);
      Tensor& ga = slot(0);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (a.values[i] > 0.0) ga.values[i] += g.values[i];
      return;
    }
    case OpKind::Log: {
      const Tensor& a = input(0);
      Tensor& ga = slot(0);
      for (std::size_t i = 0; i < g.size(); ++i) ga.values[i] += g.values[i] / a.values[i];
      return;
    }
    case OpKind::Softmax: {
      double dot = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) dot += g.values[i] * out.values[i];
      Tensor& ga = slot(0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga.values[i] += out.values[i] * (g.values[i] - dot);
      }
      return;
    }
    case OpKind::Embedding: {
      Tensor& gt = slot(0);
      const std::size_t d = out.size();
      for (std::size_t j = 0; j < d; ++j) gt.values[n.args.index * d + j] += g.values[j];
      return;
    }
    case OpKind::Sum: {
      Tensor& ga = slot(0);
      for (double& v : ga.values) v += g.values[0];
      return;
    }
    case OpKind::SoftmaxCrossEntropy: {
      const auto p = gcas::softmax(input(0).values);
      Tensor& ga = slot(0);
      for (std::size_t i = 0; i < p.size(); ++i) {
        ga.values[i] += g.values[0] * (p[i] - (i == n.args.index ? 1.0 : 0.0));
      }
      return;
    }
    case OpKind::SigmoidCrossEntropy: {
      const Tensor& x = input(0);
      Tensor& ga = slot(0);
      for (std::size_t i = 0; i < x.size(); ++i) {
        ga.values[i] += g.values[0] * (gcas::sigmoid(x.values[i]) - n.args.targets[i]);
      }
      return;
    }
  }
}

}  // namespace gcas
