#include "lgcn/tape.hpp"

#include <algorithm>
#include <atomic>

namespace lgcn::ad {

Parameter& ParameterSet::add(std::string name, Tensor init) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  Tensor grad(init.shape(), 0.0);
  params_.push_back({std::move(name), std::move(init), std::move(grad)});
  return params_.back();
}

Parameter* ParameterSet::find(std::string_view name) {
  for (auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

bool ParameterSet::contains(std::string_view name) const {
  return std::any_of(params_.begin(), params_.end(), [&](const Parameter& p) { return p.name == name; });
}

Parameter& ParameterSet::operator[](std::string_view name) {
  if (auto* p = find(name)) return *p;
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

const Parameter& ParameterSet::operator[](std::string_view name) const {
  return const_cast<ParameterSet&>(*this)[name];
}

std::size_t ParameterSet::count() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += p.value.size();
  return total;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

namespace {
std::atomic<std::uint32_t> next_tape_id{1};
}

Tape::Tape() : id_(next_tape_id.fetch_add(1)) {}

const Tape::Node& Tape::node(Var v) const {
  if (v.tape != id_ || v.index >= nodes_.size()) {
    throw std::invalid_argument("variable does not belong to this tape");
  }
  return nodes_[v.index];
}

Tape::Node& Tape::node(Var v) {
  return const_cast<Node&>(static_cast<const Tape&>(*this).node(v));
}

Var Tape::constant(Tensor value) {
  nodes_.push_back({std::move(value), {}, false, "constant", {}, nullptr});
  return {id_, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::variable(Tensor value) {
  nodes_.push_back({std::move(value), {}, true, "variable", {}, nullptr});
  return {id_, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::parameter(Parameter& p) {
  nodes_.push_back({p.value, {}, true, "parameter", {}, &p});
  return {id_, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::record(std::string_view op, Tensor value, std::span<const Var> inputs, BackwardFn fn) {
  if (!value.all_finite()) {
    throw NumericError(std::string(op) + " produced a non-finite value (output shape " +
                       shape_string(value.shape()) + ")");
  }
  bool needs = false;
  for (const Var& in : inputs) needs = needs || node(in).requires_grad;
  nodes_.push_back({std::move(value), {}, needs, op, needs ? std::move(fn) : BackwardFn{}, nullptr});
  return {id_, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

Tensor& Tape::grad(Var v) {
  Node& n = node(v);
  if (n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

bool Tape::has_grad(Var v) const { return node(v).grad.shape() == node(v).value.shape(); }

void Tape::backward(Var loss) {
  if (consumed_) throw std::logic_error("tape already consumed by a backward pass");
  const Node& l = node(loss);
  if (l.value.size() != 1) {
    throw ShapeError("backward needs a scalar loss, got shape " + shape_string(l.value.shape()));
  }
  consumed_ = true;
  grad(loss)[0] = 1.0;
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.shape() != n.value.shape()) continue;
    if (n.backward) {
      // An op never writes its own gradient, so it can be lent out.
      Tensor g = std::move(n.grad);
      n.backward(*this, g);
      nodes_[i].grad = std::move(g);
    }
    if (nodes_[i].param) {
      auto& dst = nodes_[i].param->grad.storage();
      const auto& src = nodes_[i].grad.storage();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
}

}  // namespace lgcn::ad
