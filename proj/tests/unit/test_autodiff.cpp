// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "tanet/grad_check.hpp"
#include "tanet/ops.hpp"

using namespace tanet;

namespace {

Tensor randn(Shape s, std::uint64_t seed, double sd = 1.0) {
  Rng rng(seed);
  return Tensor::normal(std::move(s), rng, sd);
}

// Weighted sum with fixed random weights so every output coordinate matters.
Var probe(Tape& tape, const Var& y, std::uint64_t seed) {
  Tensor w = randn(y.shape(), seed + 1000);
  return sum(mul(y, tape.constant(std::move(w))));
}

void check_over_seeds(const std::string& name, const std::function<std::vector<Tensor>(std::uint64_t)>& make,
                      const std::function<Var(Tape&, std::span<const Var>)>& body) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inputs = make(seed);
    ScalarFn f = [&](Tape& tape, std::span<const Var> v) { return probe(tape, body(tape, v), seed); };
    const auto r = grad_check(f, inputs);
    INFO(name << " seed " << seed << " worst input " << r.worst_input << " index " << r.worst_index);
    CHECK(r.max_rel_error < 1e-4);
  }
}

std::vector<double> values(const Var& v) {
  const auto d = v.value().data();
  return {d.begin(), d.end()};
}

}  // namespace

TEST_SUITE("autodiff") {
  TEST_CASE("backward oracles: sum and square") {
    Tensor x = randn({2, 3}, 1);
    x.set_requires_grad(true);
    {
      Tape tape;
      tape.backward(sum(tape.leaf(x)));
    }
    for (double g : x.grad()) CHECK(g == 1.0);
    x.clear_grad();
    {
      Tape tape;
      const Var v = tape.leaf(x);
      tape.backward(sum(mul(v, v)));
    }
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(x.grad()[i] == doctest::Approx(2 * x[i]).epsilon(1e-15));
  }

  TEST_CASE("gradient accumulates across use sites") {
    Tensor x = randn({4}, 2);
    Tensor y = x;
    x.set_requires_grad(true);
    y.set_requires_grad(true);
    Tensor y2 = y;
    y2.set_requires_grad(true);
    {
      Tape tape;
      const Var v = tape.leaf(x);
      tape.backward(sum(add(sigmoid(v), mul(v, v))));
    }
    {
      // duplicated-input construction: two distinct leaves holding the same values
      Tape tape;
      const Var a = tape.leaf(y), b = tape.leaf(y2);
      tape.backward(sum(add(sigmoid(a), mul(b, b))));
    }
    for (std::size_t i = 0; i < 4; ++i) CHECK(x.grad()[i] == doctest::Approx(y.grad()[i] + y2.grad()[i]));
  }

  TEST_CASE("backward errors") {
    Tensor x = randn({3}, 3);
    x.set_requires_grad(true);
    Tape tape;
    const Var v = tape.leaf(x);
    CHECK_THROWS_AS(tape.backward(relu(v)), ShapeError);  // non-scalar
    Tape other;
    const Var c = other.constant(Tensor::scalar(1.0));
    CHECK_THROWS(tape.backward(c));  // not recorded on this tape
  }

  TEST_CASE("grad_check oracles") {
    const Tensor x = randn({3, 4}, 4);
    CHECK(grad_check([](Tape&, const Var& v) { return sum(sigmoid(v)); }, x) < 1e-6);
    CHECK(grad_check([](Tape&, const Var& v) { return sum(scale(v, 3.0)); }, x) < 1e-10);
  }

  TEST_CASE("matmul values") {
    Tape tape;
    const Var a = tape.constant(Tensor({2, 2}, {1, 2, 3, 4}));
    const Var b = tape.constant(Tensor({2, 2}, {5, 6, 7, 8}));
    CHECK(values(matmul(a, b)) == std::vector<double>{19, 22, 43, 50});
    const Var eye = tape.constant(Tensor({2, 2}, {1, 0, 0, 1}));
    CHECK(values(matmul(a, eye)) == values(a));
    CHECK(values(matmul(a, tape.constant(Tensor::zeros({2, 2})))) == std::vector<double>(4, 0.0));
    CHECK_THROWS_AS(matmul(a, tape.constant(Tensor::zeros({3, 2}))), ShapeError);
  }

  TEST_CASE("conv2d oracles") {
    Tape tape;
    const Var x = tape.constant(Tensor({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9}));
    const Var ones = tape.constant(Tensor::full({1, 1, 3, 3}, 1.0));
    const Var zero_b = tape.constant(Tensor::zeros({1}));
    CHECK(conv2d(x, ones, zero_b, 1, 1).value()[4] == 45.0);

    Tensor dirac = Tensor::zeros({2, 2, 3, 3});
    dirac[(0 * 2 + 0) * 9 + 4] = 1.0;
    dirac[(1 * 2 + 1) * 9 + 4] = 1.0;
    for (std::uint64_t s = 0; s < 5; ++s) {
      const Var in = tape.constant(randn({2, 2, 5, 4}, s));
      CHECK(identical(conv2d(in, tape.constant(dirac), tape.constant(Tensor::zeros({2})), 1, 1).value(), in.value()));
    }
    const Var two = tape.constant(randn({1, 2, 3, 3}, 9));
    const auto y = conv2d(two, tape.constant(Tensor::full({1, 2, 1, 1}, 1.0)), zero_b, 1, 0).value();
    for (std::size_t i = 0; i < 9; ++i) CHECK(y[i] == two.value()[i] + two.value()[9 + i]);
    CHECK_THROWS_AS(conv2d(two, ones, zero_b, 1, 1), ShapeError);  // Cin mismatch
  }

  TEST_CASE("softmax oracles") {
    Tape tape;
    const auto s = softmax_lastdim(tape.constant(Tensor({2, 2}, {0, 0, std::log(3.0), 0}))).value();
    CHECK(s[0] == doctest::Approx(0.5));
    CHECK(s[2] == doctest::Approx(0.75));
    CHECK(s[3] == doctest::Approx(0.25));
    CHECK(softmax_lastdim(tape.constant(Tensor({1}, {7.0}))).value()[0] == 1.0);
    const auto big = softmax_lastdim(tape.constant(randn({6, 9}, 5, 30.0))).value();
    for (std::size_t r = 0; r < 6; ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < 9; ++c) {
        CHECK(big[r * 9 + c] > 0.0);
        CHECK(big[r * 9 + c] <= 1.0);
        total += big[r * 9 + c];
      }
      CHECK(std::abs(total - 1.0) < 1e-12);
    }
  }

  TEST_CASE("elementwise oracles") {
    Tape tape;
    CHECK(sigmoid(tape.constant(Tensor::scalar(0.0))).value().item() == 0.5);
    CHECK(values(relu(tape.constant(Tensor({2}, {-2, 3})))) == std::vector<double>{0, 3});
    const Var x = tape.constant(randn({5}, 6));
    CHECK(values(mul(x, tape.constant(Tensor::zeros({5})))) == std::vector<double>(5, 0.0));
    CHECK_THROWS_AS(add(x, tape.constant(Tensor::zeros({4}))), ShapeError);
  }

  TEST_CASE("layer_norm oracles") {
    Tape tape;
    const Var g = tape.constant(Tensor::full({2}, 1.0)), b = tape.constant(Tensor::zeros({2}));
    const auto y = layer_norm(tape.constant(Tensor({2}, {1, -1})), g, b).value();
    CHECK(y[0] == doctest::Approx(1.0 / std::sqrt(1.0 + 1e-5)).epsilon(1e-14));
    const auto c = layer_norm(tape.constant(Tensor::full({1, 2}, 3.0)), g, b).value();
    CHECK(c[0] == 0.0);
    const Var g8 = tape.constant(Tensor::full({8}, 1.0));
    const Var beta = tape.constant(Tensor::full({8}, 0.25));
    const auto z = layer_norm(tape.constant(randn({3, 8}, 7)), g8, beta).value();
    for (std::size_t r = 0; r < 3; ++r) {
      double m = 0.0;
      for (std::size_t i = 0; i < 8; ++i) m += z[r * 8 + i];
      CHECK(std::abs(m / 8 - 0.25) < 1e-10);
    }
  }

  TEST_CASE("concat and slice") {
    Tape tape;
    const Var a = tape.constant(randn({1, 3, 2, 2}, 8)), b = tape.constant(randn({1, 2, 2, 2}, 9));
    const Var c = concat_channels(a, b);
    CHECK(c.shape() == Shape{1, 5, 2, 2});
    CHECK(identical(slice_channels(c, 0, 3).value(), a.value()));
    CHECK(identical(slice_channels(c, 3, 5).value(), b.value()));
    CHECK(identical(concat_channels(a, tape.constant(Tensor::zeros({1, 0, 2, 2}))).value(), a.value()));
    CHECK_THROWS_AS(concat_channels(a, tape.constant(Tensor::zeros({1, 2, 3, 2}))), ShapeError);
  }

  TEST_CASE("pixel shuffle") {
    Tape tape;
    const Var x = tape.constant(Tensor({1, 4, 1, 1}, {0, 1, 2, 3}));
    const auto y = pixel_shuffle(x, 2);
    CHECK(y.shape() == Shape{1, 1, 2, 2});
    CHECK(values(y) == std::vector<double>{0, 1, 2, 3});  // channel c*r*r + i*r + j -> (i, j)
    const Var z = tape.constant(randn({2, 8, 3, 2}, 10));
    CHECK(identical(pixel_shuffle(z, 1).value(), z.value()));
    CHECK(identical(pixel_unshuffle(pixel_shuffle(z, 2), 2).value(), z.value()));
    CHECK(pixel_shuffle(tape.constant(randn({1, 4, 2, 2}, 11)), 2).shape() == Shape{1, 1, 4, 4});
    CHECK_THROWS_AS(pixel_shuffle(tape.constant(Tensor::zeros({1, 3, 2, 2})), 2), ShapeError);
  }

  TEST_CASE("l1 loss oracles") {
    Tape tape;
    const Var p = tape.constant(Tensor({2}, {1, 2})), t = tape.constant(Tensor::zeros({2}));
    CHECK(l1_loss(p, t).value().item() == 1.5);
    CHECK(l1_loss(p, p).value().item() == 0.0);
    Tensor x({4}, {1, 2, -1, 0.5});
    x.set_requires_grad(true);
    Tape t2;
    t2.backward(l1_loss(t2.leaf(x), t2.constant(Tensor({4}, {0, 0, 0, 0.5}))));
    CHECK(x.grad()[0] == 0.25);
    CHECK(x.grad()[2] == -0.25);
    CHECK(x.grad()[3] == 0.0);  // tie
  }

  TEST_CASE("primitive gradients match central differences over 10 seeds") {
    auto one = [](Shape s) { return [s](std::uint64_t seed) { return std::vector<Tensor>{randn(s, seed)}; }; };
    auto two = [](Shape a, Shape b) {
      return [a, b](std::uint64_t seed) { return std::vector<Tensor>{randn(a, seed), randn(b, seed + 50)}; };
    };
    check_over_seeds("add", two({3, 4}, {3, 4}), [](Tape&, auto v) { return add(v[0], v[1]); });
    check_over_seeds("sub", two({3, 4}, {3, 4}), [](Tape&, auto v) { return sub(v[0], v[1]); });
    check_over_seeds("mul", two({3, 4}, {3, 4}), [](Tape&, auto v) { return mul(v[0], v[1]); });
    check_over_seeds("scale", one({5}), [](Tape&, auto v) { return scale(v[0], -1.7); });
    check_over_seeds("relu", one({12}), [](Tape&, auto v) { return relu(v[0]); });
    check_over_seeds("sigmoid", one({12}), [](Tape&, auto v) { return sigmoid(v[0]); });
    check_over_seeds("gelu", one({12}), [](Tape&, auto v) { return gelu(v[0]); });
    check_over_seeds("add_tiled", two({2, 3, 4}, {3, 4}), [](Tape&, auto v) { return add_tiled(v[0], v[1]); });
    check_over_seeds("matmul shared", two({2, 3, 4}, {4, 5}), [](Tape&, auto v) { return matmul(v[0], v[1]); });
    check_over_seeds("matmul batched", two({2, 3, 4}, {2, 4, 2}), [](Tape&, auto v) { return matmul(v[0], v[1]); });
    check_over_seeds("transpose", one({2, 3, 4}), [](Tape&, auto v) { return transpose_last2(v[0]); });
    check_over_seeds("permute", one({2, 3, 4, 2}), [](Tape&, auto v) { return permute(v[0], {3, 0, 2, 1}); });
    check_over_seeds("reshape", one({2, 6}), [](Tape&, auto v) { return reshape(v[0], {3, 4}); });
    check_over_seeds("softmax", one({3, 5}), [](Tape&, auto v) { return softmax_lastdim(v[0]); });
    check_over_seeds("layer_norm", [](std::uint64_t s) {
      return std::vector<Tensor>{randn({3, 6}, s), randn({6}, s + 1), randn({6}, s + 2)};
    }, [](Tape&, auto v) { return layer_norm(v[0], v[1], v[2]); });
    check_over_seeds("conv3x3", [](std::uint64_t s) {
      return std::vector<Tensor>{randn({2, 2, 5, 4}, s), randn({3, 2, 3, 3}, s + 1), randn({3}, s + 2)};
    }, [](Tape&, auto v) { return conv2d(v[0], v[1], v[2], 1, 1); });
    check_over_seeds("conv1x1 strided", [](std::uint64_t s) {
      return std::vector<Tensor>{randn({1, 3, 5, 5}, s), randn({2, 3, 1, 1}, s + 1), randn({2}, s + 2)};
    }, [](Tape&, auto v) { return conv2d(v[0], v[1], v[2], 2, 0); });
    check_over_seeds("concat", two({1, 2, 3, 3}, {1, 3, 3, 3}), [](Tape&, auto v) { return concat_channels(v[0], v[1]); });
    check_over_seeds("slice", one({1, 5, 2, 2}), [](Tape&, auto v) { return slice_channels(v[0], 1, 4); });
    check_over_seeds("pixel_shuffle", one({1, 8, 2, 3}), [](Tape&, auto v) { return pixel_shuffle(v[0], 2); });
    check_over_seeds("pixel_unshuffle", one({1, 2, 4, 6}), [](Tape&, auto v) { return pixel_unshuffle(v[0], 2); });
    check_over_seeds("mean", one({4, 3}), [](Tape&, auto v) { return reshape(mean(v[0]), {1}); });
    check_over_seeds("l1", two({3, 3}, {3, 3}), [](Tape&, auto v) { return reshape(l1_loss(v[0], v[1]), {1}); });
  }

  TEST_CASE("random two-layer net matches finite differences") {
    const std::vector<Tensor> inputs = {randn({4, 6}, 1), randn({6, 8}, 2), randn({8, 3}, 3)};
    ScalarFn f = [](Tape&, std::span<const Var> v) { return sum(sigmoid(matmul(gelu(matmul(v[0], v[1])), v[2]))); };
    CHECK(grad_check(f, inputs).max_rel_error < 1e-4);
  }

  TEST_CASE("forward and backward are deterministic") {
    auto run = [] {
      Tensor x = randn({2, 3, 4, 4}, 12), w = randn({3, 3, 3, 3}, 13), b = randn({3}, 14);
      x.set_requires_grad(true);
      w.set_requires_grad(true);
      Tape tape;
      const Var y = conv2d(tape.leaf(x), tape.leaf(w), tape.view(b), 1, 1);
      tape.backward(sum(mul(y, softmax_lastdim(y))));
      return std::pair{x, w};
    };
    const auto [x1, w1] = run();
    const auto [x2, w2] = run();
    CHECK(std::equal(x1.grad().begin(), x1.grad().end(), x2.grad().begin()));
    CHECK(std::equal(w1.grad().begin(), w1.grad().end(), w2.grad().begin()));
  }
}
