// SPDX-License-Identifier: Apache-2.0
#include "tanet/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <string>

namespace tanet {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

void quiet_warning(png_structp, png_const_charp) {}

// Decodes into `raw` as 8- or 16-bit big-endian samples with 1 or 3 channels.
// Returns false with `error` set on failure. Everything with a destructor is
// constructed before setjmp.
bool decode_png(std::FILE* fp, std::vector<unsigned char>& raw, std::vector<png_bytep>& rows, std::size_t& h,
                std::size_t& w, std::size_t& channels, int& depth, std::string& error) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, quiet_warning);
  if (!png) {
    error = "out of memory";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    error = "out of memory";
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    error = "corrupt or truncated PNG data";
    return false;
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  h = png_get_image_height(png, info);
  w = png_get_image_width(png, info);
  channels = png_get_channels(png, info);
  depth = png_get_bit_depth(png, info);
  if ((channels != 1 && channels != 3) || (depth != 8 && depth != 16)) {
    png_destroy_read_struct(&png, &info, nullptr);
    error = "unsupported color type (channels=" + std::to_string(channels) + ", depth=" + std::to_string(depth) + ")";
    return false;
  }
  const std::size_t stride = png_get_rowbytes(png, info);
  raw.resize(stride * h);
  rows.resize(h);
  for (std::size_t y = 0; y < h; ++y) rows[y] = raw.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

bool encode_png(std::FILE* fp, std::vector<png_bytep>& rows, std::size_t h, std::size_t w, std::size_t channels,
                int depth, std::string& error) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, quiet_warning);
  if (!png) {
    error = "out of memory";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    error = "out of memory";
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    error = "PNG encoding failed";
    return false;
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), depth,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

void write_png(const Image& img, const std::filesystem::path& path, int depth) {
  if (img.channels != 1 && img.channels != 3) throw ImageError("save_png: only 1 or 3 channels supported");
  if (img.height == 0 || img.width == 0) throw ImageError("save_png: empty image");
  const std::size_t bytes = depth / 8;
  const std::size_t stride = img.width * img.channels * bytes;
  const double maxv = depth == 8 ? 255.0 : 65535.0;
  std::vector<unsigned char> raw(stride * img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const double v = std::clamp(img.pixels[i], 0.0, 1.0);
    const auto q = static_cast<unsigned>(std::floor(v * maxv + 0.5));
    if (bytes == 1) {
      raw[i] = static_cast<unsigned char>(q);
    } else {
      raw[2 * i] = static_cast<unsigned char>(q >> 8);
      raw[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
    }
  }
  std::vector<png_bytep> rows(img.height);
  for (std::size_t y = 0; y < img.height; ++y) rows[y] = raw.data() + y * stride;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  File fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw ImageError("cannot open " + path.string() + " for writing");
  std::string error;
  if (!encode_png(fp.get(), rows, img.height, img.width, img.channels, depth, error))
    throw ImageError(path.string() + ": " + error);
}

}  // namespace

Image load_png(const std::filesystem::path& path) {
  File fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw ImageError("cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw ImageError(path.string() + ": not a PNG file");
  std::rewind(fp.get());

  std::vector<unsigned char> raw;
  std::vector<png_bytep> rows;
  std::size_t h = 0, w = 0, c = 0;
  int depth = 0;
  std::string error;
  if (!decode_png(fp.get(), raw, rows, h, w, c, depth, error)) throw ImageError(path.string() + ": " + error);

  Image img(h, w, c);
  if (depth == 8) {
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = raw[i] / 255.0;
  } else {
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
      img.pixels[i] = static_cast<double>((raw[2 * i] << 8) | raw[2 * i + 1]) / 65535.0;
  }
  return img;
}

void save_png(const Image& img, const std::filesystem::path& path) { write_png(img, path, 8); }
void save_png16(const Image& img, const std::filesystem::path& path) { write_png(img, path, 16); }

Image clamp01(Image img) {
  for (auto& v : img.pixels) v = std::clamp(v, 0.0, 1.0);
  return img;
}

Image to_rgb(Image img) {
  if (img.channels == 3) return img;
  if (img.channels != 1) throw ImageError("to_rgb: expected 1 or 3 channels");
  Image rgb(img.height, img.width, 3);
  for (std::size_t i = 0; i < img.height * img.width; ++i)
    for (std::size_t c = 0; c < 3; ++c) rgb.pixels[3 * i + c] = img.pixels[i];
  return rgb;
}

Image quantize8(Image img) {
  for (auto& v : img.pixels) v = std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5) / 255.0;
  return img;
}

// ---------------------------------------------------------------------------

double cubic_kernel(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

ResampleTaps resample_taps(std::size_t in, std::size_t out, std::size_t dst) {
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  const double support = ratio > 1.0 ? ratio : 1.0;
  const double center = (static_cast<double>(dst) + 0.5) * ratio - 0.5;
  const double radius = 2.0 * support;
  const long first = static_cast<long>(std::ceil(center - radius));
  const long last = static_cast<long>(std::floor(center + radius));
  ResampleTaps taps;
  double total = 0.0;
  for (long j = first; j <= last; ++j) {
    const double wgt = cubic_kernel((center - static_cast<double>(j)) / support);
    if (wgt == 0.0) continue;
    taps.index.push_back(static_cast<std::size_t>(std::clamp<long>(j, 0, static_cast<long>(in) - 1)));
    taps.weight.push_back(wgt);
    total += wgt;
  }
  for (auto& wgt : taps.weight) wgt /= total;
  return taps;
}

Image resize_bicubic(const Image& img, std::size_t out_h, std::size_t out_w) {
  if (out_h < 1 || out_w < 1) throw ShapeError("resize_bicubic: output extent < 1");
  if (img.height == 0 || img.width == 0) throw ShapeError("resize_bicubic: empty input");
  const std::size_t c = img.channels;

  Image horiz(img.height, out_w, c);
  for (std::size_t x = 0; x < out_w; ++x) {
    const ResampleTaps t = resample_taps(img.width, out_w, x);
    for (std::size_t y = 0; y < img.height; ++y)
      for (std::size_t ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (std::size_t k = 0; k < t.index.size(); ++k) acc += t.weight[k] * img.at(y, t.index[k], ch);
        horiz.at(y, x, ch) = acc;
      }
  }
  Image out(out_h, out_w, c);
  for (std::size_t y = 0; y < out_h; ++y) {
    const ResampleTaps t = resample_taps(img.height, out_h, y);
    for (std::size_t x = 0; x < out_w; ++x)
      for (std::size_t ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (std::size_t k = 0; k < t.index.size(); ++k) acc += t.weight[k] * horiz.at(t.index[k], x, ch);
        out.at(y, x, ch) = acc;
      }
  }
  return out;
}

Image downscale(const Image& img, std::size_t factor) {
  if (factor == 0) throw ShapeError("downscale: factor must be positive");
  return resize_bicubic(img, img.height / factor, img.width / factor);
}

Image upscale(const Image& img, std::size_t factor) {
  if (factor == 0) throw ShapeError("upscale: factor must be positive");
  return resize_bicubic(img, img.height * factor, img.width * factor);
}

// ---------------------------------------------------------------------------

Tensor to_tensor(const Image& img) {
  Tensor t({1, img.channels, img.height, img.width});
  auto d = t.data();
  for (std::size_t c = 0; c < img.channels; ++c)
    for (std::size_t y = 0; y < img.height; ++y)
      for (std::size_t x = 0; x < img.width; ++x) d[(c * img.height + y) * img.width + x] = img.at(y, x, c);
  return t;
}

Image from_tensor(const Tensor& t, std::size_t index) {
  if (t.rank() != 4 || index >= t.dim(0)) throw ShapeError("from_tensor: bad tensor " + to_string(t.shape()));
  const std::size_t c = t.dim(1), h = t.dim(2), w = t.dim(3);
  Image img(h, w, c);
  auto d = t.data().subspan(index * c * h * w);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) img.at(y, x, ch) = d[(ch * h + y) * w + x];
  return img;
}

Tensor stack(std::span<const Image> images) {
  if (images.empty()) throw ShapeError("stack: no images");
  const Image& first = images.front();
  Tensor t({images.size(), first.channels, first.height, first.width});
  const std::size_t plane = first.channels * first.height * first.width;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!images[i].same_dims(first)) throw ShapeError("stack: images differ in size");
    Tensor one = to_tensor(images[i]);
    std::copy(one.data().begin(), one.data().end(), t.data().begin() + static_cast<long>(i * plane));
  }
  return t;
}

Image apply(const Image& img, Dihedral d) {
  Image cur = img;
  for (int r = 0; r < ((d.rotation % 4) + 4) % 4; ++r) {
    // quarter turn counter-clockwise: (y, x) -> (W-1-x, y)
    Image next(cur.width, cur.height, cur.channels);
    for (std::size_t y = 0; y < cur.height; ++y)
      for (std::size_t x = 0; x < cur.width; ++x)
        for (std::size_t c = 0; c < cur.channels; ++c) next.at(cur.width - 1 - x, y, c) = cur.at(y, x, c);
    cur = std::move(next);
  }
  if (d.flip) {
    for (std::size_t y = 0; y < cur.height; ++y)
      for (std::size_t x = 0; x < cur.width / 2; ++x)
        for (std::size_t c = 0; c < cur.channels; ++c) std::swap(cur.at(y, x, c), cur.at(y, cur.width - 1 - x, c));
  }
  return cur;
}

}  // namespace tanet
