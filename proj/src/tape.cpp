// SPDX-License-Identifier: Apache-2.0
#include "tanet/tape.hpp"

#include <stdexcept>
#include <string>

namespace tanet {

const Tensor& Var::value() const {
  if (!tape_) throw std::logic_error("use of an unbound Var");
  return tape_->value(*this);
}

bool Var::requires_grad() const { return tape_ && tape_->requires_grad(*this); }

void Tape::check_owner(const Var& v) const {
  if (v.tape_ != this) throw std::logic_error("Var belongs to a different tape");
}

Var Tape::leaf(Tensor& tensor) {
  Node n;
  n.op = "leaf";
  n.leaf = &tensor;
  n.requires_grad = tensor.requires_grad();
  nodes_.push_back(std::move(n));
  return make(static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::constant(Tensor tensor) {
  Node n;
  n.op = "constant";
  n.owned = std::move(tensor);
  nodes_.push_back(std::move(n));
  return make(static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::view(const Tensor& tensor) {
  Node n;
  n.op = "view";
  n.view = &tensor;
  nodes_.push_back(std::move(n));
  return make(static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::record(std::string_view op, Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  Node n;
  n.op = op;
  n.owned = std::move(value);
  for (const Var& in : inputs) {
    check_owner(in);
    n.inputs.push_back(in.id_);
    n.requires_grad = n.requires_grad || nodes_[in.id_].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return make(static_cast<std::uint32_t>(nodes_.size() - 1));
}

std::span<double> Tape::grad_buffer(const Var& v) {
  check_owner(v);
  if (grads_.size() < nodes_.size()) grads_.resize(nodes_.size());
  auto& g = grads_[v.id_];
  if (g.empty()) g.assign(nodes_[v.id_].value().size(), 0.0);
  return g;
}

std::span<const double> Tape::grad(const Var& v) const {
  check_owner(v);
  if (v.id_ >= grads_.size()) return {};
  return grads_[v.id_];
}

void Tape::backward(const Var& loss) {
  check_owner(loss);
  if (backward_done_) throw std::logic_error("backward() already ran on this tape");
  const Node& root = nodes_[loss.id_];
  if (root.value().size() != 1)
    throw ShapeError("backward() needs a scalar loss, got shape " + to_string(root.value().shape()));
  if (!root.requires_grad) throw std::logic_error("loss is detached: no input requires grad");
  backward_done_ = true;

  grads_.resize(nodes_.size());
  grad_buffer(loss)[0] = 1.0;
  for (std::size_t id = loss.id_ + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || grads_[id].empty()) continue;
    if (n.leaf) {
      auto dst = n.leaf->mutable_grad();
      const auto& src = grads_[id];
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
    } else if (n.backward) {
      n.backward(*this, n.owned, grads_[id]);
    }
  }
}

}  // namespace tanet
