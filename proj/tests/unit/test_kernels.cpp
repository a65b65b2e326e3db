// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "tanet/kernels.hpp"

using namespace tanet::kernels;

namespace {

std::vector<double> rnd(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("conv2d parallel matches serial reference") {
    const ConvGeom geoms[] = {
        {.batch = 2, .in_channels = 3, .height = 7, .width = 5, .out_channels = 4, .kernel = 3, .stride = 1, .padding = 1},
        {.batch = 1, .in_channels = 2, .height = 8, .width = 8, .out_channels = 3, .kernel = 1, .stride = 1, .padding = 0},
        {.batch = 1, .in_channels = 2, .height = 9, .width = 6, .out_channels = 2, .kernel = 3, .stride = 2, .padding = 1},
        {.batch = 3, .in_channels = 1, .height = 4, .width = 4, .out_channels = 1, .kernel = 3, .stride = 1, .padding = 0},
    };
    unsigned seed = 1;
    for (const auto& g : geoms) {
      const auto x = rnd(g.batch * g.in_channels * g.height * g.width, seed++);
      const auto w = rnd(g.out_channels * g.in_channels * g.kernel * g.kernel, seed++);
      const auto b = rnd(g.out_channels, seed++);
      const std::size_t on = g.batch * g.out_channels * g.out_height() * g.out_width();
      std::vector<double> ys(on), yp(on);
      serial::conv2d_forward(g, x, w, b, ys);
      parallel::conv2d_forward(g, x, w, b, yp);
      CHECK(max_abs_diff(ys, yp) < 1e-12);

      const auto go = rnd(on, seed++);
      std::vector<double> gxs(x.size(), 0.5), gxp(x.size(), 0.5);  // non-zero: kernels accumulate
      serial::conv2d_backward_input(g, go, w, gxs);
      parallel::conv2d_backward_input(g, go, w, gxp);
      CHECK(max_abs_diff(gxs, gxp) < 1e-12);

      std::vector<double> gws(w.size()), gwp(w.size()), gbs(b.size()), gbp(b.size());
      serial::conv2d_backward_weight(g, x, go, gws, gbs);
      parallel::conv2d_backward_weight(g, x, go, gwp, gbp);
      CHECK(max_abs_diff(gws, gwp) < 1e-12);
      CHECK(max_abs_diff(gbs, gbp) < 1e-12);
    }
  }

  TEST_CASE("conv2d hand oracle: 3x3 ones kernel sums neighborhoods") {
    const ConvGeom g{.batch = 1, .in_channels = 1, .height = 3, .width = 3, .out_channels = 1, .kernel = 3, .stride = 1, .padding = 1};
    const std::vector<double> x = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    const std::vector<double> w(9, 1.0), b = {0.5};
    std::vector<double> y(9);
    parallel::conv2d_forward(g, x, w, b, y);
    // corner (0,0): 1+2+4+5; centre: 45
    CHECK(y[0] == 12.5);
    CHECK(y[4] == 45.5);
    CHECK(y[8] == 28.5);
  }

  TEST_CASE("gemm transposes and accumulate agree with serial") {
    for (int ta = 0; ta < 2; ++ta)
      for (int tb = 0; tb < 2; ++tb)
        for (int acc = 0; acc < 2; ++acc) {
          const GemmGeom g{.batch = 3, .m = 5, .k = 7, .n = 4, .trans_a = ta == 1, .trans_b = tb == 1, .accumulate = acc == 1};
          const auto a = rnd(g.batch * g.m * g.k, 10 + ta);
          const auto b = rnd(g.batch * g.k * g.n, 20 + tb);
          std::vector<double> cs(g.batch * g.m * g.n, 1.0), cp = cs;
          serial::gemm(g, a, b, cs);
          parallel::gemm(g, a, b, cp);
          CHECK(max_abs_diff(cs, cp) < 1e-12);
        }
  }

  TEST_CASE("gemm hand oracle") {
    const GemmGeom g{.batch = 1, .m = 2, .k = 2, .n = 2};
    const std::vector<double> a = {1, 2, 3, 4}, b = {5, 6, 7, 8};
    std::vector<double> c(4);
    parallel::gemm(g, a, b, c);
    CHECK(c == std::vector<double>{19, 22, 43, 50});
  }

  TEST_CASE("results do not depend on the thread count") {
    const ConvGeom g{.batch = 2, .in_channels = 4, .height = 12, .width = 12, .out_channels = 4, .kernel = 3, .stride = 1, .padding = 1};
    const auto x = rnd(g.batch * 4 * 144, 3), w = rnd(4 * 4 * 9, 4), b = rnd(4, 5);
    std::vector<double> y1(g.batch * 4 * 144), y2(y1.size());
    const int before = max_threads();
    set_max_threads(1);
    parallel::conv2d_forward(g, x, w, b, y1);
    set_max_threads(4);
    parallel::conv2d_forward(g, x, w, b, y2);
    set_max_threads(before);
    CHECK(y1 == y2);
  }
}
