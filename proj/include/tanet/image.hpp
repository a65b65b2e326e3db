// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "tanet/tensor.hpp"

namespace tanet {

/// Raised for unreadable/undecodable image files and unsupported formats.
class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row-major, channel-interleaved pixels in [0, 1]; 1 or 3 channels.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 3;
  std::vector<double> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w, std::size_t c, double fill = 0.0)
      : height(h), width(w), channels(c), pixels(h * w * c, fill) {}

  double& at(std::size_t y, std::size_t x, std::size_t c) { return pixels[(y * width + x) * channels + c]; }
  double at(std::size_t y, std::size_t x, std::size_t c) const { return pixels[(y * width + x) * channels + c]; }
  bool same_dims(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

/// 8- or 16-bit grayscale / RGB (alpha is dropped, palette expanded).
Image load_png(const std::filesystem::path& path);
/// Clamps to [0,1] and quantizes with round-half-up to 8 bits.
void save_png(const Image& img, const std::filesystem::path& path);
/// 16-bit variant, used for tests of the 16-bit loader.
void save_png16(const Image& img, const std::filesystem::path& path);

Image clamp01(Image img);
/// Grayscale is replicated into three channels; RGB passes through.
Image to_rgb(Image img);
/// Round-trips every pixel through the 8-bit grid, exactly as save_png + load_png.
Image quantize8(Image img);

/// Catmull-Rom (a = -0.5) cubic kernel.
double cubic_kernel(double x);

/// Weights and edge-clamped source indices for one output sample of a 1-D
/// resize from `in` to `out` samples. Downscaling widens the kernel by the
/// reduction factor; weights are normalized to sum to 1.
struct ResampleTaps {
  std::vector<std::size_t> index;
  std::vector<double> weight;
};
ResampleTaps resample_taps(std::size_t in, std::size_t out, std::size_t dst);

/// Separable bicubic resize to an explicit size.
Image resize_bicubic(const Image& img, std::size_t out_h, std::size_t out_w);
/// Downscale by an integer factor: floor(h / factor) x floor(w / factor).
Image downscale(const Image& img, std::size_t factor);
Image upscale(const Image& img, std::size_t factor);

/// 3 x h x w planar view of an image (adds a batch axis: 1 x 3 x h x w).
Tensor to_tensor(const Image& img);
/// Copies batch item `index` of a B x C x h x w tensor back to interleaved form (unclamped).
Image from_tensor(const Tensor& t, std::size_t index = 0);
/// Stacks equally-sized images into one B x C x h x w tensor.
Tensor stack(std::span<const Image> images);

/// One of the 8 dihedral transforms: `rotation` quarter turns counter-clockwise
/// (0..3) followed by an optional horizontal flip.
struct Dihedral {
  int rotation = 0;
  bool flip = false;
  int index() const { return rotation * 2 + (flip ? 1 : 0); }
  static Dihedral from_index(int i) { return {i / 2, (i % 2) == 1}; }
};
Image apply(const Image& img, Dihedral d);

}  // namespace tanet
