// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "tanet/tape.hpp"

namespace tanet {

/// Builds a scalar on `tape` from leaves bound to the checked inputs.
using ScalarFn = std::function<Var(Tape& tape, std::span<const Var> inputs)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

/// Compares tape gradients against central differences
///   (f(x + h e_i) - f(x - h e_i)) / 2h
/// for every coordinate of every input, returning the maximum of
///   |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
/// Inputs are copied; the caller's tensors are left untouched.
GradCheckResult grad_check(const ScalarFn& f, std::span<const Tensor> inputs, double h = 1e-5);

/// Single-input convenience form.
double grad_check(const std::function<Var(Tape&, const Var&)>& f, const Tensor& x, double h = 1e-5);

}  // namespace tanet
