// SPDX-License-Identifier: Apache-2.0
// Serial reference vs OpenMP kernels at the shapes the model actually uses.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "tanet/kernels.hpp"

namespace {

using namespace tanet::kernels;

std::vector<double> random_vec(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

ConvGeom conv_geom(const benchmark::State& st) {
  ConvGeom g;
  g.batch = 1;
  g.in_channels = static_cast<std::size_t>(st.range(0));
  g.out_channels = g.in_channels;
  g.height = g.width = static_cast<std::size_t>(st.range(1));
  g.kernel = 3;
  g.padding = 1;
  return g;
}

template <bool Parallel>
void BM_ConvForward(benchmark::State& st) {
  const ConvGeom g = conv_geom(st);
  const auto x = random_vec(g.batch * g.in_channels * g.height * g.width, 1);
  const auto w = random_vec(g.out_channels * g.in_channels * 9, 2);
  const auto b = random_vec(g.out_channels, 3);
  std::vector<double> out(g.batch * g.out_channels * g.out_height() * g.out_width());
  for (auto _ : st) {
    if constexpr (Parallel)
      parallel::conv2d_forward(g, x, w, b, out);
    else
      serial::conv2d_forward(g, x, w, b, out);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<int64_t>(out.size() * g.in_channels * 9));
}

template <bool Parallel>
void BM_ConvBackward(benchmark::State& st) {
  const ConvGeom g = conv_geom(st);
  const auto x = random_vec(g.batch * g.in_channels * g.height * g.width, 1);
  const auto w = random_vec(g.out_channels * g.in_channels * 9, 2);
  const auto go = random_vec(g.batch * g.out_channels * g.out_height() * g.out_width(), 3);
  std::vector<double> gx(x.size()), gw(w.size()), gb(g.out_channels);
  for (auto _ : st) {
    if constexpr (Parallel) {
      parallel::conv2d_backward_input(g, go, w, gx);
      parallel::conv2d_backward_weight(g, x, go, gw, gb);
    } else {
      serial::conv2d_backward_input(g, go, w, gx);
      serial::conv2d_backward_weight(g, x, go, gw, gb);
    }
    benchmark::DoNotOptimize(gx.data());
    benchmark::DoNotOptimize(gw.data());
  }
}

template <bool Parallel>
void BM_Gemm(benchmark::State& st) {
  GemmGeom g;
  g.batch = static_cast<std::size_t>(st.range(0));
  g.m = g.n = 16;  // one 4x4 patch of tokens
  g.k = static_cast<std::size_t>(st.range(1));
  const auto a = random_vec(g.batch * g.m * g.k, 4);
  const auto b = random_vec(g.batch * g.k * g.n, 5);
  std::vector<double> c(g.batch * g.m * g.n);
  for (auto _ : st) {
    if constexpr (Parallel)
      parallel::gemm(g, a, b, c);
    else
      serial::gemm(g, a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
}

}  // namespace

BENCHMARK(BM_ConvForward<false>)->Args({8, 16})->Args({32, 32})->Args({64, 64});
BENCHMARK(BM_ConvForward<true>)->Args({8, 16})->Args({32, 32})->Args({64, 64});
BENCHMARK(BM_ConvBackward<false>)->Args({8, 16})->Args({32, 32});
BENCHMARK(BM_ConvBackward<true>)->Args({8, 16})->Args({32, 32});
BENCHMARK(BM_Gemm<false>)->Args({16, 8})->Args({256, 64});
BENCHMARK(BM_Gemm<true>)->Args({16, 8})->Args({256, 64});

BENCHMARK_MAIN();
