// SPDX-License-Identifier: Apache-2.0
#include "tanet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>

#include "tanet/kernels.hpp"

namespace tanet {

namespace kp = kernels::parallel;

namespace {

Tape& tape_of(const Var& a) {
  if (!a.valid()) throw std::logic_error("op on an unbound Var");
  return *a.tape();
}

Tape& tape_of(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  if (b.tape() != &t) throw std::logic_error("op inputs live on different tapes");
  return t;
}

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
}

template <class F>
Var unary(const char* name, const Var& x, F&& fwd, Tape::BackwardFn bwd) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  auto src = xv.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = fwd(src[i]);
  return tape_of(x).record(name, std::move(out), {x}, std::move(bwd));
}

std::size_t leading(const Shape& s, std::size_t trailing) {
  std::size_t n = 1;
  for (std::size_t i = 0; i + trailing < s.size(); ++i) n *= s[i];
  return n;
}

void require_rank4(const char* op, const Var& x) {
  if (x.rank() != 4) throw ShapeError(std::string(op) + ": expected B x C x H x W, got " + to_string(x.shape()));
}

}  // namespace

Var add(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  require_same_shape("add", a, b);
  Tensor out(a.shape());
  auto x = a.value().data(), y = b.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] + y[i];
  return t.record("add", std::move(out), {a, b}, [a, b](Tape& tp, const Tensor&, std::span<const double> g) {
    for (const Var& in : {a, b}) {
      if (!in.requires_grad()) continue;
      auto gi = tp.grad_buffer(in);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    }
  });
}

Var sub(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  require_same_shape("sub", a, b);
  Tensor out(a.shape());
  auto x = a.value().data(), y = b.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] - y[i];
  return t.record("sub", std::move(out), {a, b}, [a, b](Tape& tp, const Tensor&, std::span<const double> g) {
    if (a.requires_grad()) {
      auto ga = tp.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (b.requires_grad()) {
      auto gb = tp.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  require_same_shape("mul", a, b);
  Tensor out(a.shape());
  auto x = a.value().data(), y = b.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * y[i];
  return t.record("mul", std::move(out), {a, b}, [a, b](Tape& tp, const Tensor&, std::span<const double> g) {
    auto x = a.value().data(), y = b.value().data();
    if (a.requires_grad()) {
      auto ga = tp.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
    }
    if (b.requires_grad()) {
      auto gb = tp.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * x[i];
    }
  });
}

Var scale(const Var& x, double s) {
  return unary("scale", x, [s](double v) { return s * v; },
               [x, s](Tape& tp, const Tensor&, std::span<const double> g) {
                 auto gx = tp.grad_buffer(x);
                 for (std::size_t i = 0; i < g.size(); ++i) gx[i] += s * g[i];
               });
}

Var relu(const Var& x) {
  return unary("relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
               [x](Tape& tp, const Tensor&, std::span<const double> g) {
                 auto xv = x.value().data();
                 auto gx = tp.grad_buffer(x);
                 for (std::size_t i = 0; i < g.size(); ++i)
                   if (xv[i] > 0.0) gx[i] += g[i];
               });
}

Var sigmoid(const Var& x) {
  return unary("sigmoid", x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
               [x](Tape& tp, const Tensor& out, std::span<const double> g) {
                 auto y = out.data();
                 auto gx = tp.grad_buffer(x);
                 for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
               });
}

Var gelu(const Var& x) {
  constexpr double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  constexpr double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
  return unary("gelu", x, [](double v) { return 0.5 * v * (1.0 + std::erf(v * inv_sqrt2)); },
               [x](Tape& tp, const Tensor&, std::span<const double> g) {
                 auto xv = x.value().data();
                 auto gx = tp.grad_buffer(x);
                 for (std::size_t i = 0; i < g.size(); ++i) {
                   const double v = xv[i];
                   const double cdf = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
                   const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
                   gx[i] += g[i] * (cdf + v * pdf);
                 }
               });
}

Var add_tiled(const Var& x, const Var& tile) {
  Tape& t = tape_of(x, tile);
  const Shape& xs = x.shape();
  const Shape& ts = tile.shape();
  if (ts.size() > xs.size() || !std::equal(ts.begin(), ts.end(), xs.end() - static_cast<long>(ts.size())))
    throw ShapeError("add_tiled: " + to_string(ts) + " is not a trailing block of " + to_string(xs));
  const std::size_t block = tile.value().size();
  Tensor out(xs);
  auto xv = x.value().data(), tv = tile.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = xv[i] + tv[i % block];
  return t.record("add_tiled", std::move(out), {x, tile},
                  [x, tile, block](Tape& tp, const Tensor&, std::span<const double> g) {
                    if (x.requires_grad()) {
                      auto gx = tp.grad_buffer(x);
                      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                    }
                    if (tile.requires_grad()) {
                      auto gt = tp.grad_buffer(tile);
                      for (std::size_t i = 0; i < g.size(); ++i) gt[i % block] += g[i];
                    }
                  });
}

Var matmul(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  auto mismatch = [&] {
    return ShapeError("matmul: dimension mismatch " + to_string(as) + " x " + to_string(bs));
  };
  if (as.size() < 2 || bs.size() < 2) throw mismatch();
  const std::size_t m = as[as.size() - 2], k = as.back(), n = bs.back();
  if (bs[bs.size() - 2] != k) throw mismatch();
  const bool shared = bs.size() == 2;
  if (!shared && (bs.size() != as.size() || !std::equal(as.begin(), as.end() - 2, bs.begin()))) throw mismatch();

  const std::size_t batch = leading(as, 2);
  Shape out_shape = as;
  out_shape.back() = n;
  Tensor out(out_shape);
  kernels::GemmGeom fwd;
  if (shared) {
    fwd = {.batch = 1, .m = batch * m, .k = k, .n = n};
  } else {
    fwd = {.batch = batch, .m = m, .k = k, .n = n};
  }
  kp::gemm(fwd, a.value().data(), b.value().data(), out.data());

  return t.record("matmul", std::move(out), {a, b}, [a, b, fwd](Tape& tp, const Tensor&, std::span<const double> g) {
    if (a.requires_grad()) {
      // dA = dC * B^T
      kernels::GemmGeom ga{.batch = fwd.batch, .m = fwd.m, .k = fwd.n, .n = fwd.k, .trans_b = true, .accumulate = true};
      kp::gemm(ga, g, b.value().data(), tp.grad_buffer(a));
    }
    if (b.requires_grad()) {
      // dB = A^T * dC
      kernels::GemmGeom gb{.batch = fwd.batch, .m = fwd.k, .k = fwd.m, .n = fwd.n, .trans_a = true, .accumulate = true};
      kp::gemm(gb, a.value().data(), g, tp.grad_buffer(b));
    }
  });
}

Var permute(const Var& x, const std::vector<std::size_t>& perm) {
  Tape& t = tape_of(x);
  const Shape& xs = x.shape();
  const std::size_t r = xs.size();
  if (perm.size() != r) throw ShapeError("permute: rank mismatch for " + to_string(xs));
  std::vector<bool> seen(r, false);
  for (auto p : perm) {
    if (p >= r || seen[p]) throw ShapeError("permute: invalid axis permutation");
    seen[p] = true;
  }
  std::vector<std::size_t> in_stride(r, 1);
  for (std::size_t i = r; i-- > 1;) in_stride[i - 1] = in_stride[i] * xs[i];
  Shape os(r);
  std::vector<std::size_t> stride(r);
  for (std::size_t i = 0; i < r; ++i) {
    os[i] = xs[perm[i]];
    stride[i] = in_stride[perm[i]];
  }
  // gather index: out flat i -> in flat index
  const std::size_t total = numel(os);
  auto index = std::make_shared<std::vector<std::size_t>>(total);
  std::vector<std::size_t> ctr(r, 0);
  std::size_t src = 0;
  for (std::size_t i = 0; i < total; ++i) {
    (*index)[i] = src;
    for (std::size_t ax = r; ax-- > 0;) {
      if (++ctr[ax] < os[ax]) {
        src += stride[ax];
        break;
      }
      src -= stride[ax] * (os[ax] - 1);
      ctr[ax] = 0;
    }
  }
  Tensor out(os);
  auto xv = x.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < total; ++i) o[i] = xv[(*index)[i]];
  return t.record("permute", std::move(out), {x}, [x, index](Tape& tp, const Tensor&, std::span<const double> g) {
    auto gx = tp.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[(*index)[i]] += g[i];
  });
}

Var transpose_last2(const Var& x) {
  if (x.rank() < 2) throw ShapeError("transpose_last2: rank < 2");
  std::vector<std::size_t> perm(x.rank());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::swap(perm[perm.size() - 1], perm[perm.size() - 2]);
  return permute(x, perm);
}

Var reshape(const Var& x, Shape shape) {
  Tape& t = tape_of(x);
  Tensor out = x.value().reshaped(std::move(shape));
  return t.record("reshape", std::move(out), {x}, [x](Tape& tp, const Tensor&, std::span<const double> g) {
    auto gx = tp.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Var conv2d(const Var& x, const Var& w, const Var& bias, std::size_t stride, std::size_t padding) {
  Tape& t = tape_of(x, w);
  if (bias.tape() != &t) throw std::logic_error("op inputs live on different tapes");
  require_rank4("conv2d", x);
  const Shape& ws = w.shape();
  if (ws.size() != 4 || ws[2] != ws[3])
    throw ShapeError("conv2d: weight must be Cout x Cin x k x k, got " + to_string(ws));
  if (ws[1] != x.dim(1))
    throw ShapeError("conv2d: channel mismatch, input " + to_string(x.shape()) + " vs weight " + to_string(ws));
  if (bias.shape() != Shape{ws[0]})
    throw ShapeError("conv2d: bias " + to_string(bias.shape()) + " does not match Cout=" + std::to_string(ws[0]));
  if (stride == 0) throw ShapeError("conv2d: stride must be positive");
  kernels::ConvGeom g{.batch = x.dim(0), .in_channels = x.dim(1), .height = x.dim(2), .width = x.dim(3),
                      .out_channels = ws[0], .kernel = ws[2], .stride = stride, .padding = padding};
  if (g.height + 2 * padding < g.kernel || g.width + 2 * padding < g.kernel)
    throw ShapeError("conv2d: non-positive output extent for input " + to_string(x.shape()) + " and kernel " +
                     std::to_string(g.kernel) + " with padding " + std::to_string(padding));
  Tensor out({g.batch, g.out_channels, g.out_height(), g.out_width()});
  kp::conv2d_forward(g, x.value().data(), w.value().data(), bias.value().data(), out.data());
  return t.record("conv2d", std::move(out), {x, w, bias},
                  [x, w, bias, g](Tape& tp, const Tensor&, std::span<const double> go) {
                    if (x.requires_grad()) kp::conv2d_backward_input(g, go, w.value().data(), tp.grad_buffer(x));
                    if (w.requires_grad() || bias.requires_grad()) {
                      std::vector<double> scratch_w, scratch_b;
                      std::span<double> gw, gb;
                      if (w.requires_grad()) {
                        gw = tp.grad_buffer(w);
                      } else {
                        scratch_w.assign(w.value().size(), 0.0);
                        gw = scratch_w;
                      }
                      if (bias.requires_grad()) gb = tp.grad_buffer(bias);
                      kp::conv2d_backward_weight(g, x.value().data(), go, gw, gb);
                    }
                  });
}

Var softmax_lastdim(const Var& x) {
  Tape& t = tape_of(x);
  if (x.rank() == 0) throw ShapeError("softmax_lastdim: rank 0");
  const std::size_t n = x.shape().back();
  const std::size_t rows = x.value().size() / n;
  Tensor out(x.shape());
  auto xv = x.value().data();
  auto o = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xv.data() + r * n;
    double* y = o.data() + r * n;
    const double mx = *std::max_element(in, in + n);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) z += (y[i] = std::exp(in[i] - mx));
    for (std::size_t i = 0; i < n; ++i) y[i] /= z;
  }
  return t.record("softmax", std::move(out), {x}, [x, n, rows](Tape& tp, const Tensor& out, std::span<const double> g) {
    auto y = out.data();
    auto gx = tp.grad_buffer(x);
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += g[r * n + i] * y[r * n + i];
      for (std::size_t i = 0; i < n; ++i) gx[r * n + i] += y[r * n + i] * (g[r * n + i] - dot);
    }
  });
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  Tape& t = tape_of(x, gamma);
  if (beta.tape() != &t) throw std::logic_error("op inputs live on different tapes");
  if (!(eps > 0.0)) throw std::invalid_argument("layer_norm: eps must be positive");
  if (x.rank() == 0) throw ShapeError("layer_norm: rank 0");
  const std::size_t c = x.shape().back();
  if (gamma.shape() != Shape{c} || beta.shape() != Shape{c})
    throw ShapeError("layer_norm: affine params must have shape (" + std::to_string(c) + ")");
  const std::size_t rows = x.value().size() / c;
  auto xhat = std::make_shared<std::vector<double>>(x.value().size());
  auto rstd = std::make_shared<std::vector<double>>(rows);
  Tensor out(x.shape());
  auto xv = x.value().data();
  auto gv = gamma.value().data(), bv = beta.value().data();
  auto o = out.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xv.data() + r * c;
    double mu = 0.0;
    for (std::size_t i = 0; i < c; ++i) mu += in[i];
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t i = 0; i < c; ++i) var += (in[i] - mu) * (in[i] - mu);
    var /= static_cast<double>(c);
    const double rs = 1.0 / std::sqrt(var + eps);
    (*rstd)[r] = rs;
    for (std::size_t i = 0; i < c; ++i) {
      const double h = (in[i] - mu) * rs;
      (*xhat)[r * c + i] = h;
      o[r * c + i] = gv[i] * h + bv[i];
    }
  }
  return t.record("layer_norm", std::move(out), {x, gamma, beta},
                  [x, gamma, beta, c, rows, xhat, rstd](Tape& tp, const Tensor&, std::span<const double> g) {
                    auto gv = gamma.value().data();
                    if (gamma.requires_grad()) {
                      auto gg = tp.grad_buffer(gamma);
                      for (std::size_t r = 0; r < rows; ++r)
                        for (std::size_t i = 0; i < c; ++i) gg[i] += g[r * c + i] * (*xhat)[r * c + i];
                    }
                    if (beta.requires_grad()) {
                      auto gb = tp.grad_buffer(beta);
                      for (std::size_t r = 0; r < rows; ++r)
                        for (std::size_t i = 0; i < c; ++i) gb[i] += g[r * c + i];
                    }
                    if (x.requires_grad()) {
                      auto gx = tp.grad_buffer(x);
                      const double inv_c = 1.0 / static_cast<double>(c);
                      for (std::size_t r = 0; r < rows; ++r) {
                        double m1 = 0.0, m2 = 0.0;
                        for (std::size_t i = 0; i < c; ++i) {
                          const double dh = g[r * c + i] * gv[i];
                          m1 += dh;
                          m2 += dh * (*xhat)[r * c + i];
                        }
                        m1 *= inv_c;
                        m2 *= inv_c;
                        for (std::size_t i = 0; i < c; ++i) {
                          const double dh = g[r * c + i] * gv[i];
                          gx[r * c + i] += (*rstd)[r] * (dh - m1 - (*xhat)[r * c + i] * m2);
                        }
                      }
                    }
                  });
}

Var concat_channels(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  require_rank4("concat_channels", a);
  require_rank4("concat_channels", b);
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (as[0] != bs[0] || as[2] != bs[2] || as[3] != bs[3])
    throw ShapeError("concat_channels: batch/spatial mismatch " + to_string(as) + " vs " + to_string(bs));
  const std::size_t plane = as[2] * as[3];
  const std::size_t ca = as[1], cb = bs[1];
  Tensor out({as[0], ca + cb, as[2], as[3]});
  auto av = a.value().data(), bv = b.value().data();
  auto o = out.data();
  for (std::size_t n = 0; n < as[0]; ++n) {
    std::copy_n(av.data() + n * ca * plane, ca * plane, o.data() + n * (ca + cb) * plane);
    std::copy_n(bv.data() + n * cb * plane, cb * plane, o.data() + (n * (ca + cb) + ca) * plane);
  }
  return t.record("concat_channels", std::move(out), {a, b},
                  [a, b, ca, cb, plane, batch = as[0]](Tape& tp, const Tensor&, std::span<const double> g) {
                    if (a.requires_grad()) {
                      auto ga = tp.grad_buffer(a);
                      for (std::size_t n = 0; n < batch; ++n)
                        for (std::size_t i = 0; i < ca * plane; ++i) ga[n * ca * plane + i] += g[n * (ca + cb) * plane + i];
                    }
                    if (b.requires_grad()) {
                      auto gb = tp.grad_buffer(b);
                      for (std::size_t n = 0; n < batch; ++n)
                        for (std::size_t i = 0; i < cb * plane; ++i)
                          gb[n * cb * plane + i] += g[(n * (ca + cb) + ca) * plane + i];
                    }
                  });
}

Var slice_channels(const Var& x, std::size_t begin, std::size_t end) {
  Tape& t = tape_of(x);
  require_rank4("slice_channels", x);
  const Shape& xs = x.shape();
  if (begin > end || end > xs[1])
    throw ShapeError("slice_channels: [" + std::to_string(begin) + "," + std::to_string(end) + ") outside " +
                     to_string(xs));
  const std::size_t plane = xs[2] * xs[3], c = xs[1], w = end - begin;
  Tensor out({xs[0], w, xs[2], xs[3]});
  auto xv = x.value().data();
  auto o = out.data();
  for (std::size_t n = 0; n < xs[0]; ++n)
    std::copy_n(xv.data() + (n * c + begin) * plane, w * plane, o.data() + n * w * plane);
  return t.record("slice_channels", std::move(out), {x},
                  [x, begin, w, c, plane, batch = xs[0]](Tape& tp, const Tensor&, std::span<const double> g) {
                    auto gx = tp.grad_buffer(x);
                    for (std::size_t n = 0; n < batch; ++n)
                      for (std::size_t i = 0; i < w * plane; ++i) gx[(n * c + begin) * plane + i] += g[n * w * plane + i];
                  });
}

namespace {

// Flat source index in the (B, C*r*r, H, W) tensor for every element of the
// (B, C, rH, rW) tensor.
std::shared_ptr<std::vector<std::size_t>> shuffle_index(std::size_t b, std::size_t c, std::size_t h, std::size_t w,
                                                        std::size_t r) {
  auto idx = std::make_shared<std::vector<std::size_t>>(b * c * h * w * r * r);
  std::size_t o = 0;
  for (std::size_t n = 0; n < b; ++n)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < h * r; ++y)
        for (std::size_t x = 0; x < w * r; ++x) {
          const std::size_t src_c = ch * r * r + (y % r) * r + (x % r);
          (*idx)[o++] = ((n * c * r * r + src_c) * h + y / r) * w + x / r;
        }
  return idx;
}

}  // namespace

Var pixel_shuffle(const Var& x, std::size_t r) {
  Tape& t = tape_of(x);
  require_rank4("pixel_shuffle", x);
  const Shape& xs = x.shape();
  if (r == 0 || xs[1] % (r * r) != 0)
    throw ShapeError("pixel_shuffle: channels " + std::to_string(xs[1]) + " not divisible by r^2=" +
                     std::to_string(r * r));
  const std::size_t c = xs[1] / (r * r);
  auto idx = shuffle_index(xs[0], c, xs[2], xs[3], r);
  Tensor out({xs[0], c, xs[2] * r, xs[3] * r});
  auto xv = x.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = xv[(*idx)[i]];
  return t.record("pixel_shuffle", std::move(out), {x}, [x, idx](Tape& tp, const Tensor&, std::span<const double> g) {
    auto gx = tp.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[(*idx)[i]] += g[i];
  });
}

Var pixel_unshuffle(const Var& x, std::size_t r) {
  Tape& t = tape_of(x);
  require_rank4("pixel_unshuffle", x);
  const Shape& xs = x.shape();
  if (r == 0 || xs[2] % r != 0 || xs[3] % r != 0)
    throw ShapeError("pixel_unshuffle: spatial dims of " + to_string(xs) + " not divisible by " + std::to_string(r));
  const std::size_t h = xs[2] / r, w = xs[3] / r;
  auto idx = shuffle_index(xs[0], xs[1], h, w, r);
  Tensor out({xs[0], xs[1] * r * r, h, w});
  auto xv = x.value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < xv.size(); ++i) o[(*idx)[i]] = xv[i];
  return t.record("pixel_unshuffle", std::move(out), {x},
                  [x, idx](Tape& tp, const Tensor&, std::span<const double> g) {
                    auto gx = tp.grad_buffer(x);
                    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[(*idx)[i]];
                  });
}

Var sum(const Var& x) {
  Tape& t = tape_of(x);
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return t.record("sum", Tensor::scalar(s), {x}, [x](Tape& tp, const Tensor&, std::span<const double> g) {
    auto gx = tp.grad_buffer(x);
    for (auto& v : gx) v += g[0];
  });
}

Var mean(const Var& x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

Var l1_loss(const Var& pred, const Var& target) {
  Tape& t = tape_of(pred, target);
  require_same_shape("l1_loss", pred, target);
  auto p = pred.value().data(), q = target.value().data();
  const double n = static_cast<double>(p.size());
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return t.record("l1_loss", Tensor::scalar(s / n), {pred, target},
                  [pred, target, n](Tape& tp, const Tensor&, std::span<const double> g) {
                    auto p = pred.value().data(), q = target.value().data();
                    const double k = g[0] / n;
                    auto sign = [](double d) { return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0); };
                    if (pred.requires_grad()) {
                      auto gp = tp.grad_buffer(pred);
                      for (std::size_t i = 0; i < p.size(); ++i) gp[i] += k * sign(p[i] - q[i]);
                    }
                    if (target.requires_grad()) {
                      auto gt = tp.grad_buffer(target);
                      for (std::size_t i = 0; i < p.size(); ++i) gt[i] -= k * sign(p[i] - q[i]);
                    }
                  });
}

}  // namespace tanet
