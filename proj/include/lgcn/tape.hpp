#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lgcn/tensor.hpp"

namespace lgcn::ad {

/// An operation produced a NaN or infinity.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands with incompatible shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Handle to a value recorded on a Tape.
struct Var {
  std::uint32_t tape = 0;
  std::uint32_t index = 0;
  bool valid() const { return tape != 0; }
};

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

/// Named trainable tensors in registration order. Element addresses are
/// stable, so tapes may hold pointers into the set.
class ParameterSet {
 public:
  Parameter& add(std::string name, Tensor init);
  Parameter& operator[](std::string_view name);
  const Parameter& operator[](std::string_view name) const;
  Parameter* find(std::string_view name);
  bool contains(std::string_view name) const;

  std::deque<Parameter>& all() { return params_; }
  const std::deque<Parameter>& all() const { return params_; }
  std::size_t size() const { return params_.size(); }
  /// Total number of scalar parameters.
  std::size_t count() const;
  void zero_grad();

 private:
  std::deque<Parameter> params_;
};

/// Records one forward pass for reverse-mode differentiation. Nodes are
/// appended in execution order, which is a topological order; backward()
/// walks them exactly in reverse and may run only once.
class Tape {
 public:
  /// Receives the tape and the gradient flowing into the node's output.
  using BackwardFn = std::function<void(Tape&, const Tensor&)>;

  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Leaf that requires a gradient, readable through grad() after backward.
  Var variable(Tensor value);
  /// Leaf bound to a parameter; backward adds into `p.grad`.
  Var parameter(Parameter& p);

  /// Appends an op node. The node requires a gradient iff any input does;
  /// otherwise `fn` is dropped. Throws NumericError on non-finite output.
  Var record(std::string_view op, Tensor value, std::span<const Var> inputs, BackwardFn fn);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;
  /// Gradient buffer of `v`, allocated as zeros on first use.
  Tensor& grad(Var v);
  bool has_grad(Var v) const;

  /// Seeds d(loss)/d(loss) = 1 and propagates to every reachable node.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::string_view op;
    BackwardFn backward;
    Parameter* param = nullptr;
  };

  const Node& node(Var v) const;
  Node& node(Var v);

  std::uint32_t id_;
  std::vector<Node> nodes_;
  bool consumed_ = false;
};

}  // namespace lgcn::ad
