// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tanet/image.hpp"

namespace tanet {

/// RGB evaluates every channel (PSNR over all samples, SSIM averaged over
/// channels); luma first converts RGB to BT.601 luminance.
enum class MetricSpace { rgb, luma };

MetricSpace parse_metric_space(std::string_view s);
std::string_view to_string(MetricSpace s);

/// BT.601 luma (0.299 R + 0.587 G + 0.114 B); single-channel input is returned as is.
Image to_luma(const Image& img);

/// 10 log10(1 / MSE) with peak 1. Identical images give +infinity.
double psnr(const Image& a, const Image& b, MetricSpace space = MetricSpace::rgb);

/// Mean SSIM over valid 11x11 Gaussian (sigma 1.5) windows, K1 = 0.01,
/// K2 = 0.03, L = 1.
double ssim(const Image& a, const Image& b, MetricSpace space = MetricSpace::rgb);

/// Mean perceptual score from SSIM and an externally computed LPIPS.
inline double mps(double ssim_value, double lpips) { return 0.5 * (ssim_value + (1.0 - lpips)); }

/// "inf" for +infinity, fixed 4 decimals otherwise.
std::string format_db(double psnr_db);

struct EvalRow {
  std::string method;
  std::string image;  // "mean" for the aggregate row
  double psnr = 0.0;
  double ssim = 0.0;
  std::optional<double> lpips;
  std::optional<double> mps;
};

/// Per-image and mean rows for several methods.
struct EvalReport {
  std::uint64_t seed = 0;
  std::vector<EvalRow> rows;

  /// Adds one method's per-image rows plus its mean row. When `lpips` is
  /// given it must align with `names`, and MPS is filled in from it.
  void add_method(const std::string& method, const std::vector<std::string>& names, const std::vector<Image>& outputs,
                  const std::vector<Image>& references, MetricSpace space,
                  const std::optional<std::vector<double>>& lpips = std::nullopt);
  const EvalRow* find(const std::string& method, const std::string& image) const;

  void write_csv(std::ostream& os) const;
  void write_table(std::ostream& os) const;
};

}  // namespace tanet
