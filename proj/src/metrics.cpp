// SPDX-License-Identifier: Apache-2.0
#include "tanet/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <stdexcept>

namespace tanet {

MetricSpace parse_metric_space(std::string_view s) {
  if (s == "rgb") return MetricSpace::rgb;
  if (s == "y" || s == "luma") return MetricSpace::luma;
  throw std::invalid_argument("metric space must be rgb or y, got '" + std::string(s) + "'");
}

std::string_view to_string(MetricSpace s) { return s == MetricSpace::rgb ? "rgb" : "y"; }

Image to_luma(const Image& img) {
  if (img.channels == 1) return img;
  if (img.channels != 3) throw ShapeError("to_luma: expected 1 or 3 channels");
  Image y(img.height, img.width, 1);
  for (std::size_t i = 0; i < img.height * img.width; ++i)
    y.pixels[i] = 0.299 * img.pixels[3 * i] + 0.587 * img.pixels[3 * i + 1] + 0.114 * img.pixels[3 * i + 2];
  return y;
}

namespace {

void require_same(const char* what, const Image& a, const Image& b) {
  if (!a.same_dims(b))
    throw ShapeError(std::string(what) + ": dimension mismatch " + std::to_string(a.height) + "x" +
                     std::to_string(a.width) + "x" + std::to_string(a.channels) + " vs " + std::to_string(b.height) +
                     "x" + std::to_string(b.width) + "x" + std::to_string(b.channels));
}

constexpr std::size_t kWindow = 11;
constexpr double kSigma = 1.5;

std::vector<double> gaussian_window() {
  std::vector<double> g(kWindow);
  double total = 0.0;
  for (std::size_t i = 0; i < kWindow; ++i) {
    const double d = static_cast<double>(i) - static_cast<double>(kWindow / 2);
    g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    total += g[i];
  }
  for (auto& v : g) v /= total;
  return g;
}

// Valid-mode separable filtering of one channel plane.
std::vector<double> filter_valid(const std::vector<double>& plane, std::size_t h, std::size_t w,
                                 const std::vector<double>& g) {
  const std::size_t ow = w - kWindow + 1, oh = h - kWindow + 1;
  std::vector<double> tmp(h * ow), out(oh * ow);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < kWindow; ++k) acc += g[k] * plane[y * w + x + k];
      tmp[y * ow + x] = acc;
    }
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < kWindow; ++k) acc += g[k] * tmp[(y + k) * ow + x];
      out[y * ow + x] = acc;
    }
  return out;
}

double ssim_plane(const Image& a, const Image& b, std::size_t ch) {
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const std::size_t h = a.height, w = a.width, n = h * w;
  std::vector<double> pa(n), pb(n), aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    pa[i] = a.pixels[i * a.channels + ch];
    pb[i] = b.pixels[i * b.channels + ch];
    aa[i] = pa[i] * pa[i];
    bb[i] = pb[i] * pb[i];
    ab[i] = pa[i] * pb[i];
  }
  static const std::vector<double> g = gaussian_window();
  const auto mu_a = filter_valid(pa, h, w, g), mu_b = filter_valid(pb, h, w, g);
  const auto e_aa = filter_valid(aa, h, w, g), e_bb = filter_valid(bb, h, w, g), e_ab = filter_valid(ab, h, w, g);
  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = e_aa[i] - ma * ma, vb = e_bb[i] - mb * mb, cov = e_ab[i] - ma * mb;
    const double num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
    const double den = (ma * ma + mb * mb + c1) * (va + vb + c2);
    total += num / den;
  }
  return total / static_cast<double>(mu_a.size());
}

}  // namespace

double psnr(const Image& a, const Image& b, MetricSpace space) {
  require_same("psnr", a, b);
  if (space == MetricSpace::luma && a.channels == 3) return psnr(to_luma(a), to_luma(b), MetricSpace::rgb);
  double se = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = a.pixels[i] - b.pixels[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.pixels.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b, MetricSpace space) {
  require_same("ssim", a, b);
  if (a.height < kWindow || a.width < kWindow)
    throw ShapeError("ssim: images must be at least 11x11, got " + std::to_string(a.height) + "x" +
                     std::to_string(a.width));
  if (space == MetricSpace::luma && a.channels == 3) return ssim(to_luma(a), to_luma(b), MetricSpace::rgb);
  double total = 0.0;
  for (std::size_t c = 0; c < a.channels; ++c) total += ssim_plane(a, b, c);
  return total / static_cast<double>(a.channels);
}

std::string format_db(double v) {
  if (std::isinf(v) && v > 0) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// ---------------------------------------------------------------------------

void EvalReport::add_method(const std::string& method, const std::vector<std::string>& names,
                            const std::vector<Image>& outputs, const std::vector<Image>& references, MetricSpace space,
                            const std::optional<std::vector<double>>& lpips) {
  if (names.size() != outputs.size() || outputs.size() != references.size())
    throw std::invalid_argument("EvalReport: names/outputs/references differ in length");
  if (lpips && lpips->size() != names.size()) throw std::invalid_argument("EvalReport: LPIPS list misaligned");
  EvalRow mean_row;
  mean_row.method = method;
  mean_row.image = "mean";
  double lp_total = 0.0;
  for (std::size_t i = 0; i < names.size(); ++i) {
    EvalRow r;
    r.method = method;
    r.image = names[i];
    r.psnr = psnr(outputs[i], references[i], space);
    r.ssim = ssim(outputs[i], references[i], space);
    if (lpips) {
      r.lpips = (*lpips)[i];
      r.mps = mps(r.ssim, *r.lpips);
      lp_total += *r.lpips;
    }
    mean_row.psnr += r.psnr;
    mean_row.ssim += r.ssim;
    rows.push_back(std::move(r));
  }
  const double n = static_cast<double>(names.size());
  if (n > 0) {
    mean_row.psnr /= n;
    mean_row.ssim /= n;
    if (lpips) {
      mean_row.lpips = lp_total / n;
      mean_row.mps = mps(mean_row.ssim, *mean_row.lpips);
    }
  }
  rows.push_back(std::move(mean_row));
}

const EvalRow* EvalReport::find(const std::string& method, const std::string& image) const {
  for (const auto& r : rows)
    if (r.method == method && r.image == image) return &r;
  return nullptr;
}

void EvalReport::write_csv(std::ostream& os) const {
  os << "method,image,psnr,ssim,lpips,mps,seed\n";
  char buf[64];
  for (const auto& r : rows) {
    os << r.method << ',' << r.image << ',' << format_db(r.psnr) << ',';
    std::snprintf(buf, sizeof buf, "%.6f", r.ssim);
    os << buf << ',';
    if (r.lpips) {
      std::snprintf(buf, sizeof buf, "%.6f", *r.lpips);
      os << buf;
    }
    os << ',';
    if (r.mps) {
      std::snprintf(buf, sizeof buf, "%.6f", *r.mps);
      os << buf;
    }
    os << ',' << seed << '\n';
  }
}

void EvalReport::write_table(std::ostream& os) const {
  os << std::left << std::setw(12) << "method" << std::setw(24) << "image" << std::right << std::setw(10) << "PSNR"
     << std::setw(10) << "SSIM" << std::setw(10) << "LPIPS" << std::setw(10) << "MPS" << '\n';
  char buf[32];
  for (const auto& r : rows) {
    os << std::left << std::setw(12) << r.method << std::setw(24) << r.image << std::right << std::setw(10)
       << format_db(r.psnr);
    std::snprintf(buf, sizeof buf, "%.4f", r.ssim);
    os << std::setw(10) << buf;
    if (r.lpips) {
      std::snprintf(buf, sizeof buf, "%.4f", *r.lpips);
      os << std::setw(10) << buf;
      std::snprintf(buf, sizeof buf, "%.4f", *r.mps);
      os << std::setw(10) << buf;
    } else {
      os << std::setw(10) << "-" << std::setw(10) << "-";
    }
    os << '\n';
  }
  os << "seed " << seed << '\n';
}

}  // namespace tanet
