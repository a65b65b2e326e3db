// SPDX-License-Identifier: Apache-2.0
#include "tanet/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tanet {

namespace {

double evaluate(const ScalarFn& f, std::vector<Tensor>& xs) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(xs.size());
  for (auto& x : xs) vars.push_back(tape.leaf(x));
  return f(tape, vars).value().item();
}

}  // namespace

GradCheckResult grad_check(const ScalarFn& f, std::span<const Tensor> inputs, double h) {
  std::vector<Tensor> xs(inputs.begin(), inputs.end());
  for (auto& x : xs) {
    x.clear_grad();
    x.set_requires_grad(true);
  }
  {
    Tape tape;
    std::vector<Var> vars;
    for (auto& x : xs) vars.push_back(tape.leaf(x));
    Var y = f(tape, vars);
    if (y.value().size() != 1) throw ShapeError("grad_check: function must be scalar-valued");
    tape.backward(y);
  }

  std::vector<Tensor> probe = xs;
  for (auto& p : probe) p.set_requires_grad(false);

  GradCheckResult res;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    auto analytic = xs[t].grad();
    for (std::size_t i = 0; i < xs[t].size(); ++i) {
      const double orig = probe[t][i];
      probe[t][i] = orig + h;
      const double fp = evaluate(f, probe);
      probe[t][i] = orig - h;
      const double fm = evaluate(f, probe);
      probe[t][i] = orig;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic.empty() ? 0.0 : analytic[i];
      const double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      ++res.coordinates;
      if (err > res.max_rel_error) {
        res.max_rel_error = err;
        res.worst_input = t;
        res.worst_index = i;
        res.analytic = a;
        res.numeric = numeric;
      }
    }
  }
  return res;
}

double grad_check(const std::function<Var(Tape&, const Var&)>& f, const Tensor& x, double h) {
  ScalarFn wrapped = [&f](Tape& tape, std::span<const Var> vars) { return f(tape, vars[0]); };
  return grad_check(wrapped, std::span<const Tensor>(&x, 1), h).max_rel_error;
}

}  // namespace tanet
