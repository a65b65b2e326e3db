// SPDX-License-Identifier: Apache-2.0
#include "tanet/kernels.hpp"

namespace tanet::kernels::serial {

namespace {

inline bool tap(const ConvGeom& g, std::size_t o, std::size_t k, std::size_t extent, std::size_t& i) {
  const long pos = static_cast<long>(o * g.stride + k) - static_cast<long>(g.padding);
  if (pos < 0 || pos >= static_cast<long>(extent)) return false;
  i = static_cast<std::size_t>(pos);
  return true;
}

}  // namespace

void conv2d_forward(const ConvGeom& g, std::span<const double> x, std::span<const double> w,
                    std::span<const double> bias, std::span<double> out) {
  const std::size_t oh = g.out_height(), ow = g.out_width(), k = g.kernel;
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::size_t co = 0; co < g.out_channels; ++co)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          double acc = bias.empty() ? 0.0 : bias[co];
          for (std::size_t ci = 0; ci < g.in_channels; ++ci)
            for (std::size_t ky = 0; ky < k; ++ky)
              for (std::size_t kx = 0; kx < k; ++kx) {
                std::size_t iy, ix;
                if (!tap(g, oy, ky, g.height, iy) || !tap(g, ox, kx, g.width, ix)) continue;
                acc += w[((co * g.in_channels + ci) * k + ky) * k + kx] *
                       x[((b * g.in_channels + ci) * g.height + iy) * g.width + ix];
              }
          out[((b * g.out_channels + co) * oh + oy) * ow + ox] = acc;
        }
}

void conv2d_backward_input(const ConvGeom& g, std::span<const double> grad_out, std::span<const double> w,
                           std::span<double> grad_x) {
  const std::size_t oh = g.out_height(), ow = g.out_width(), k = g.kernel;
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::size_t co = 0; co < g.out_channels; ++co)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const double go = grad_out[((b * g.out_channels + co) * oh + oy) * ow + ox];
          for (std::size_t ci = 0; ci < g.in_channels; ++ci)
            for (std::size_t ky = 0; ky < k; ++ky)
              for (std::size_t kx = 0; kx < k; ++kx) {
                std::size_t iy, ix;
                if (!tap(g, oy, ky, g.height, iy) || !tap(g, ox, kx, g.width, ix)) continue;
                grad_x[((b * g.in_channels + ci) * g.height + iy) * g.width + ix] +=
                    go * w[((co * g.in_channels + ci) * k + ky) * k + kx];
              }
        }
}

void conv2d_backward_weight(const ConvGeom& g, std::span<const double> x, std::span<const double> grad_out,
                            std::span<double> grad_w, std::span<double> grad_bias) {
  const std::size_t oh = g.out_height(), ow = g.out_width(), k = g.kernel;
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::size_t co = 0; co < g.out_channels; ++co)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const double go = grad_out[((b * g.out_channels + co) * oh + oy) * ow + ox];
          if (!grad_bias.empty()) grad_bias[co] += go;
          for (std::size_t ci = 0; ci < g.in_channels; ++ci)
            for (std::size_t ky = 0; ky < k; ++ky)
              for (std::size_t kx = 0; kx < k; ++kx) {
                std::size_t iy, ix;
                if (!tap(g, oy, ky, g.height, iy) || !tap(g, ox, kx, g.width, ix)) continue;
                grad_w[((co * g.in_channels + ci) * k + ky) * k + kx] +=
                    go * x[((b * g.in_channels + ci) * g.height + iy) * g.width + ix];
              }
        }
}

void gemm(const GemmGeom& g, std::span<const double> a, std::span<const double> b, std::span<double> c) {
  const std::size_t sa = g.m * g.k, sb = g.k * g.n, sc = g.m * g.n;
  for (std::size_t p = 0; p < g.batch; ++p)
    for (std::size_t i = 0; i < g.m; ++i)
      for (std::size_t j = 0; j < g.n; ++j) {
        double acc = 0.0;
        for (std::size_t q = 0; q < g.k; ++q) {
          const double av = g.trans_a ? a[p * sa + q * g.m + i] : a[p * sa + i * g.k + q];
          const double bv = g.trans_b ? b[p * sb + j * g.k + q] : b[p * sb + q * g.n + j];
          acc += av * bv;
        }
        double& dst = c[p * sc + i * g.n + j];
        dst = g.accumulate ? dst + acc : acc;
      }
}

}  // namespace tanet::kernels::serial
