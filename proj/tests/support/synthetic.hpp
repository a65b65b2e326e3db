// SPDX-License-Identifier: Apache-2.0
#pragma once

// Procedural face-like test images: smooth background, skin ellipse, hair cap,
// eyes, brows, nose shading and mouth, each with randomized geometry and
// color. Rendered with 4x4 supersampling so edges carry real high-frequency
// detail that bicubic upscaling blurs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "tanet/image.hpp"

namespace tanet::testing {

struct Rgb {
  double r, g, b;
};

inline Image synthetic_face(std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + 17);
  auto u = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };

  const Rgb bg0{u(0.1, 0.9), u(0.1, 0.9), u(0.1, 0.9)};
  const Rgb bg1{u(0.1, 0.9), u(0.1, 0.9), u(0.1, 0.9)};
  const Rgb skin{u(0.55, 0.95), u(0.4, 0.75), u(0.3, 0.6)};
  const Rgb hair{u(0.02, 0.45), u(0.02, 0.3), u(0.0, 0.25)};
  const Rgb iris{u(0.05, 0.5), u(0.1, 0.5), u(0.1, 0.6)};
  const Rgb lips{u(0.5, 0.85), u(0.15, 0.35), u(0.2, 0.4)};

  const double cx = u(0.45, 0.55), cy = u(0.5, 0.58);
  const double rx = u(0.27, 0.36), ry = u(0.35, 0.44);
  const double eye_y = cy - ry * u(0.12, 0.25), eye_dx = rx * u(0.35, 0.5);
  const double eye_r = rx * u(0.1, 0.16);
  const double mouth_y = cy + ry * u(0.45, 0.6), mouth_w = rx * u(0.3, 0.5), mouth_h = ry * u(0.05, 0.1);
  const double hair_line = cy - ry * u(0.45, 0.7);
  const double stripe_f = u(20.0, 40.0), stripe_a = u(0.0, 0.12);

  auto in_ellipse = [](double x, double y, double ex, double ey, double ax, double ay) {
    const double dx = (x - ex) / ax, dy = (y - ey) / ay;
    return dx * dx + dy * dy <= 1.0;
  };
  auto shade = [&](double x, double y) -> Rgb {
    const double t = std::clamp(0.5 * (x + y), 0.0, 1.0);
    Rgb c{bg0.r * (1 - t) + bg1.r * t, bg0.g * (1 - t) + bg1.g * t, bg0.b * (1 - t) + bg1.b * t};
    const bool head = in_ellipse(x, y, cx, cy, rx, ry);
    if (head) {
      const double lit = 1.0 - 0.25 * ((x - cx) / rx) * ((x - cx) / rx);
      c = {skin.r * lit, skin.g * lit, skin.b * lit};
      // nose: darker vertical wedge
      if (std::abs(x - cx) < rx * 0.08 * (y - eye_y) / (mouth_y - eye_y) && y > eye_y && y < mouth_y - mouth_h * 2)
        c = {c.r * 0.8, c.g * 0.8, c.b * 0.8};
      for (const double side : {-1.0, 1.0}) {
        const double ex = cx + side * eye_dx;
        if (in_ellipse(x, y, ex, eye_y, eye_r * 1.6, eye_r)) c = {0.95, 0.95, 0.95};
        if (in_ellipse(x, y, ex, eye_y, eye_r * 0.7, eye_r * 0.7)) c = iris;
        if (in_ellipse(x, y, ex, eye_y, eye_r * 0.3, eye_r * 0.3)) c = {0.02, 0.02, 0.02};
        if (in_ellipse(x, y, ex, eye_y - eye_r * 1.8, eye_r * 1.8, eye_r * 0.35)) c = hair;
      }
      if (in_ellipse(x, y, cx, mouth_y, mouth_w, mouth_h)) c = lips;
    }
    // hair cap with fine strands
    if (y < hair_line && in_ellipse(x, y, cx, cy, rx * 1.1, ry * 1.08)) {
      const double s = 1.0 + stripe_a * std::sin(stripe_f * x * 6.28318);
      c = {hair.r * s, hair.g * s, hair.b * s};
    }
    return c;
  };

  constexpr int ss = 4;
  Image img(h, w, 3);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      Rgb acc{0, 0, 0};
      for (int sy = 0; sy < ss; ++sy)
        for (int sx = 0; sx < ss; ++sx) {
          const Rgb c = shade((static_cast<double>(x) + (sx + 0.5) / ss) / static_cast<double>(w),
                              (static_cast<double>(y) + (sy + 0.5) / ss) / static_cast<double>(h));
          acc.r += c.r;
          acc.g += c.g;
          acc.b += c.b;
        }
      img.at(y, x, 0) = std::clamp(acc.r / (ss * ss), 0.0, 1.0);
      img.at(y, x, 1) = std::clamp(acc.g / (ss * ss), 0.0, 1.0);
      img.at(y, x, 2) = std::clamp(acc.b / (ss * ss), 0.0, 1.0);
    }
  return quantize8(std::move(img));
}

/// Writes `count` faces as face_000.png ... into `dir`.
inline void write_face_corpus(const std::filesystem::path& dir, std::size_t count, std::size_t h, std::size_t w,
                              std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "face_%03zu.png", i);
    save_png(synthetic_face(h, w, seed + i), dir / name);
  }
}

/// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("tanet_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace tanet::testing
