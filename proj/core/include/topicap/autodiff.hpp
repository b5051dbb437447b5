#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "topicap/tensor.hpp"

namespace topicap {

// A named learnable tensor together with its accumulated gradient. The
// gradient is scratch state written by Tape::backward, hence mutable.
struct Parameter {
  std::string name;
  Tensor value;
  mutable Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(Tensor::zeros_like(value)) {}

  void zero_grad() const { grad.fill(0.0); }
};

// Name-ordered collection of parameters. Element addresses are stable for the
// lifetime of the set, so tapes may hold raw pointers into it.
class ParameterSet {
 public:
  Parameter& add(const std::string& name, Tensor value);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  // Parameters whose name starts with `prefix`.
  std::vector<Parameter*> with_prefix(const std::string& prefix);

  void zero_grad() const;
  std::size_t scalar_count() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  std::size_t size() const { return params_.size(); }

  friend bool operator==(const ParameterSet& a, const ParameterSet& b);

 private:
  std::map<std::string, Parameter> params_;
};

class Tape;

// Handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  std::size_t size() const { return value().size(); }
};

// Records operations in execution order and replays their local derivative
// rules in reverse. One tape per forward pass; not thread-safe.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  // When gradients are disabled parameters enter as constants and no
  // backward rules are kept.
  explicit Tape(bool record_gradients = true) : record_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var param(const Parameter& p);

  // Appends a node. `inputs` decide whether the node needs a gradient.
  Var push(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var push(Tensor value, std::span<const Var> inputs, BackwardFn backward);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  // Gradient buffer of a node, allocated as zeros on first access.
  Tensor& grad(std::size_t id);
  const Tensor& upstream(std::size_t id) const { return nodes_[id].grad; }

  // Accumulates d(loss)/d(param) into every reachable Parameter::grad.
  // `seed` scales the initial gradient (1 for a plain loss).
  void backward(Var loss, double seed = 1.0);

  bool recording() const noexcept { return record_; }
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    const Parameter* param = nullptr;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
  bool record_;
};

// ---- operations -----------------------------------------------------------
// Shapes are checked eagerly; mismatches throw DimensionError naming both.

Var matmul(Var a, Var b);   // [m x k] * [k x n] -> [m x n]
Var matvec(Var a, Var x);   // [m x k] * [k] -> [m]
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);      // elementwise
Var scale(Var a, double c);
Var tanh(Var a);
Var sigmoid(Var a);
Var softmax(Var a);         // rank-1 only
Var log_softmax(Var a);     // rank-1 only
Var sum(Var a);             // -> scalar
Var dot(Var a, Var b);      // rank-1 -> scalar
Var squared_norm(Var a);    // -> scalar
Var squared_distance(Var a, Var b);  // ||a - b||^2 -> scalar
Var concat(std::span<const Var> parts);  // rank-1 pieces
Var concat(std::initializer_list<Var> parts);
Var slice(Var a, std::size_t offset, std::size_t length);  // rank-1
Var row(Var matrix, std::size_t index);                     // -> rank-1
Var pick(Var a, std::size_t index);                         // -> scalar
Var stack(std::span<const Var> scalars);                    // scalars -> [n]
Var mean(std::span<const Var> vectors);
Var weighted_sum(Var weights, std::span<const Var> vectors);  // sum_i w_i v_i
Var add_n(std::span<const Var> terms);
// -log softmax(logits)[target], fused for stability.
Var cross_entropy(Var logits, std::size_t target);

// Elementwise op family by name, used by the gradient-check harness.
enum class Elementwise { kAdd, kMul, kTanh, kSigmoid };
Var elementwise(Elementwise op, std::span<const Var> args);

}  // namespace topicap
