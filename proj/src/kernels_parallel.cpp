// SPDX-License-Identifier: Apache-2.0
#include "tanet/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cstddef>
#include <vector>

namespace tanet::kernels {

void set_max_threads(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

int max_threads() { return omp_get_max_threads(); }

namespace parallel {

namespace {

// Output indices o in [lo, hi) for which o*stride + k - padding lands inside [0, extent).
struct Span1 {
  std::size_t lo, hi;
};

inline Span1 valid_outputs(std::size_t k, std::size_t stride, std::size_t padding, std::size_t extent,
                           std::size_t out_extent) {
  const long s = static_cast<long>(stride);
  const long off = static_cast<long>(k) - static_cast<long>(padding);
  long lo = off >= 0 ? 0 : (-off + s - 1) / s;
  long hi = (static_cast<long>(extent) - 1 - off);
  hi = hi < 0 ? 0 : hi / s + 1;
  hi = std::min<long>(hi, static_cast<long>(out_extent));
  if (lo > hi) lo = hi;
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

}  // namespace

void conv2d_forward(const ConvGeom& g, std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> out) {
  const std::size_t oh = g.out_height(), ow = g.out_width(), k = g.kernel, s = g.stride;
  const long planes = static_cast<long>(g.batch * g.out_channels);
#pragma omp parallel for schedule(static)
  for (long plane = 0; plane < planes; ++plane) {
    const std::size_t b = static_cast<std::size_t>(plane) / g.out_channels;
    const std::size_t co = static_cast<std::size_t>(plane) % g.out_channels;
    double* o = out.data() + static_cast<std::size_t>(plane) * oh * ow;
    std::fill(o, o + oh * ow, bias.empty() ? 0.0 : bias[co]);
    for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
      const double* xp = x.data() + (b * g.in_channels + ci) * g.height * g.width;
      const double* wp = w.data() + (co * g.in_channels + ci) * k * k;
      for (std::size_t ky = 0; ky < k; ++ky) {
        const Span1 ys = valid_outputs(ky, s, g.padding, g.height, oh);
        for (std::size_t kx = 0; kx < k; ++kx) {
          const Span1 xs = valid_outputs(kx, s, g.padding, g.width, ow);
          const double wv = wp[ky * k + kx];
          for (std::size_t oy = ys.lo; oy < ys.hi; ++oy) {
            const double* row = xp + static_cast<std::ptrdiff_t>((oy * s + ky - g.padding) * g.width) +
                                static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(g.padding);
            double* orow = o + oy * ow;
            for (std::size_t ox = xs.lo; ox < xs.hi; ++ox) orow[ox] += wv * row[ox * s];
          }
        }
      }
    }
  }
}

void conv2d_backward_input(const ConvGeom& g, std::span<const double> grad_out, std::span<const double> w,
                           std::span<double> grad_x) {
  const std::size_t oh = g.out_height(), ow = g.out_width(), k = g.kernel, s = g.stride;
  const long planes = static_cast<long>(g.batch * g.in_channels);
#pragma omp parallel for schedule(static)
  for (long plane = 0; plane < planes; ++plane) {
    const std::size_t b = static_cast<std::size_t>(plane) / g.in_channels;
    const std::size_t ci = static_cast<std::size_t>(plane) % g.in_channels;
    double* gx = grad_x.data() + static_cast<std::size_t>(plane) * g.height * g.width;
    for (std::size_t co = 0; co < g.out_channels; ++co) {
      const double* go = grad_out.data() + (b * g.out_channels + co) * oh * ow;
      const double* wp = w.data() + (co * g.in_channels + ci) * k * k;
      for (std::size_t ky = 0; ky < k; ++ky) {
        const Span1 ys = valid_outputs(ky, s, g.padding, g.height, oh);
        for (std::size_t kx = 0; kx < k; ++kx) {
          const Span1 xs = valid_outputs(kx, s, g.padding, g.width, ow);
          const double wv = wp[ky * k + kx];
          for (std::size_t oy = ys.lo; oy < ys.hi; ++oy) {
            double* row = gx + static_cast<std::ptrdiff_t>((oy * s + ky - g.padding) * g.width) +
                                static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(g.padding);
            const double* grow = go + oy * ow;
            for (std::size_t ox = xs.lo; ox < xs.hi; ++ox) row[ox * s] += wv * grow[ox];
          }
        }
      }
    }
  }
}

void conv2d_backward_weight(const ConvGeom& g, std::span<const double> x, std::span<const double> grad_out,
                            std::span<double> grad_w, std::span<double> grad_bias) {
  const std::size_t oh = g.out_height(), ow = g.out_width(), k = g.kernel, s = g.stride;
  const long couts = static_cast<long>(g.out_channels);
#pragma omp parallel for schedule(static)
  for (long col = 0; col < couts; ++col) {
    const std::size_t co = static_cast<std::size_t>(col);
    if (!grad_bias.empty()) {
      double acc = 0.0;
      for (std::size_t b = 0; b < g.batch; ++b) {
        const double* go = grad_out.data() + (b * g.out_channels + co) * oh * ow;
        for (std::size_t i = 0; i < oh * ow; ++i) acc += go[i];
      }
      grad_bias[co] += acc;
    }
    for (std::size_t ci = 0; ci < g.in_channels; ++ci)
      for (std::size_t ky = 0; ky < k; ++ky) {
        const Span1 ys = valid_outputs(ky, s, g.padding, g.height, oh);
        for (std::size_t kx = 0; kx < k; ++kx) {
          const Span1 xs = valid_outputs(kx, s, g.padding, g.width, ow);
          double acc = 0.0;
          for (std::size_t b = 0; b < g.batch; ++b) {
            const double* xp = x.data() + (b * g.in_channels + ci) * g.height * g.width;
            const double* go = grad_out.data() + (b * g.out_channels + co) * oh * ow;
            for (std::size_t oy = ys.lo; oy < ys.hi; ++oy) {
              const double* row = xp + static_cast<std::ptrdiff_t>((oy * s + ky - g.padding) * g.width) +
                                static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(g.padding);
              const double* grow = go + oy * ow;
              for (std::size_t ox = xs.lo; ox < xs.hi; ++ox) acc += grow[ox] * row[ox * s];
            }
          }
          grad_w[((co * g.in_channels + ci) * k + ky) * k + kx] += acc;
        }
      }
  }
}

void gemm(const GemmGeom& g, std::span<const double> a, std::span<const double> b, std::span<double> c) {
  const std::size_t sa = g.m * g.k, sb = g.k * g.n, sc = g.m * g.n;
  const long rows = static_cast<long>(g.batch * g.m);
#pragma omp parallel
  {
    std::vector<double> acc(g.n);
#pragma omp for schedule(static)
    for (long r = 0; r < rows; ++r) {
      const std::size_t p = static_cast<std::size_t>(r) / g.m;
      const std::size_t i = static_cast<std::size_t>(r) % g.m;
      const double* ap = a.data() + p * sa;
      const double* bp = b.data() + p * sb;
      if (g.trans_b) {
        for (std::size_t j = 0; j < g.n; ++j) {
          double sum = 0.0;
          const double* brow = bp + j * g.k;
          for (std::size_t q = 0; q < g.k; ++q) sum += (g.trans_a ? ap[q * g.m + i] : ap[i * g.k + q]) * brow[q];
          acc[j] = sum;
        }
      } else {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t q = 0; q < g.k; ++q) {
          const double av = g.trans_a ? ap[q * g.m + i] : ap[i * g.k + q];
          const double* brow = bp + q * g.n;
          for (std::size_t j = 0; j < g.n; ++j) acc[j] += av * brow[j];
        }
      }
      double* crow = c.data() + p * sc + i * g.n;
      if (g.accumulate)
        for (std::size_t j = 0; j < g.n; ++j) crow[j] += acc[j];
      else
        std::copy(acc.begin(), acc.end(), crow);
    }
  }
}

}  // namespace parallel
}  // namespace tanet::kernels
