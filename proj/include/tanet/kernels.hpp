// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dense compute kernels. Each kernel exists twice:
//   serial::   textbook loops, kept as the reference for tests and benchmarks
//   parallel:: OpenMP, cache-friendly loop order
// The parallel kernels give every output element a fixed summation order that
// does not depend on the thread count, so results are reproducible bit-for-bit
// across TANET_THREADS settings.

#include <cstddef>
#include <span>

namespace tanet::kernels {

/// Geometry of a batched square-kernel 2D cross-correlation.
struct ConvGeom {
  std::size_t batch = 1;
  std::size_t in_channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t out_channels = 1;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t out_height() const { return (height + 2 * padding - kernel) / stride + 1; }
  std::size_t out_width() const { return (width + 2 * padding - kernel) / stride + 1; }
};

/// Batched matrix product C[b] (+)= op(A[b]) * op(B[b]), row-major, where op
/// optionally transposes. A[b] is M x K after op, B[b] is K x N after op.
struct GemmGeom {
  std::size_t batch = 1;
  std::size_t m = 1;
  std::size_t k = 1;
  std::size_t n = 1;
  bool trans_a = false;
  bool trans_b = false;
  bool accumulate = false;
};

namespace serial {
void conv2d_forward(const ConvGeom& g, std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> out);
void conv2d_backward_input(const ConvGeom& g, std::span<const double> grad_out, std::span<const double> w,
                           std::span<double> grad_x);
void conv2d_backward_weight(const ConvGeom& g, std::span<const double> x, std::span<const double> grad_out,
                            std::span<double> grad_w, std::span<double> grad_bias);
void gemm(const GemmGeom& g, std::span<const double> a, std::span<const double> b, std::span<double> c);
}  // namespace serial

namespace parallel {
void conv2d_forward(const ConvGeom& g, std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> out);
void conv2d_backward_input(const ConvGeom& g, std::span<const double> grad_out, std::span<const double> w,
                           std::span<double> grad_x);
void conv2d_backward_weight(const ConvGeom& g, std::span<const double> x, std::span<const double> grad_out,
                            std::span<double> grad_w, std::span<double> grad_bias);
void gemm(const GemmGeom& g, std::span<const double> a, std::span<const double> b, std::span<double> c);
}  // namespace parallel

// Backward kernels accumulate into their outputs (grad buffers may already hold
// contributions from other use sites). Forward kernels overwrite.

/// Caps the OpenMP worker count; 0 leaves the runtime default.
void set_max_threads(int threads);
int max_threads();

}  // namespace tanet::kernels
