// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "tanet/tensor.hpp"

namespace tanet {

class Tape;

/// Handle to a value recorded on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t dim(std::size_t axis) const { return value().dim(axis); }
  std::size_t rank() const { return value().rank(); }
  bool requires_grad() const;

  Tape* tape() const { return tape_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Define-by-run computation record for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so the node list is already a
/// topological order and backward is a single reverse sweep. A tape is
/// single-threaded and is meant to be rebuilt for every forward pass.
class Tape {
 public:
  /// Propagates the output gradient of one node into its inputs' gradient
  /// buffers. `out` is the node's own forward value.
  using BackwardFn = std::function<void(Tape& tape, const Tensor& out, std::span<const double> grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Registers a caller-owned tensor. When it requires grad, backward()
  /// accumulates into its gradient slot. The tensor must outlive the tape.
  Var leaf(Tensor& tensor);
  /// Records a value that never receives gradients.
  Var constant(Tensor tensor);
  /// Like constant() but by reference; the tensor must outlive the tape.
  Var view(const Tensor& tensor);

  /// Appends an op result. `backward` is dropped when no input requires grad.
  Var record(std::string_view op, Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);

  const Tensor& value(const Var& v) const { return nodes_[v.id_].value(); }
  bool requires_grad(const Var& v) const { return nodes_[v.id_].requires_grad; }
  std::string_view op_name(const Var& v) const { return nodes_[v.id_].op; }

  /// Gradient buffer of a node, allocated as zeros on first use. Backward
  /// functions accumulate into this.
  std::span<double> grad_buffer(const Var& v);
  /// Gradient of a node after backward(), empty if none reached it.
  std::span<const double> grad(const Var& v) const;

  /// Reverse sweep from a scalar loss. Leaf gradients are accumulated into
  /// their tensors' gradient slots.
  void backward(const Var& loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    std::string_view op;
    Tensor owned;
    Tensor* leaf = nullptr;
    const Tensor* view = nullptr;
    bool requires_grad = false;
    std::vector<std::uint32_t> inputs;
    BackwardFn backward;
    const Tensor& value() const { return leaf ? *leaf : view ? *view : owned; }
  };

  Var make(std::uint32_t id) { return Var(this, id); }
  void check_owner(const Var& v) const;

  std::deque<Node> nodes_;
  std::vector<std::vector<double>> grads_;
  bool backward_done_ = false;
};

/// Free-function spelling of Tape::backward.
inline void backward(Tape& tape, const Var& loss) { tape.backward(loss); }

}  // namespace tanet
