// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "synthetic.hpp"
#include "tanet/metrics.hpp"

using namespace tanet;

namespace {

Image random_image(std::size_t h, std::size_t w, std::uint64_t seed, std::size_t c = 3) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image img(h, w, c);
  for (auto& v : img.pixels) v = u(rng);
  return img;
}

}  // namespace

TEST_SUITE("imaging") {
  TEST_CASE("png round trip, 8 and 16 bit") {
    const auto dir = testing::scratch_dir("png");
    const Image img = quantize8(random_image(7, 5, 1));
    save_png(img, dir / "a.png");
    const Image back = load_png(dir / "a.png");
    CHECK(back.height == 7);
    CHECK(back.width == 5);
    CHECK(back.pixels == img.pixels);
    // idempotent after the first quantization
    save_png(back, dir / "b.png");
    CHECK(load_png(dir / "b.png").pixels == back.pixels);

    Image endpoints(1, 2, 1);
    endpoints.pixels = {1.0, 0.0};
    save_png(endpoints, dir / "e8.png");
    CHECK(load_png(dir / "e8.png").pixels[0] == 1.0);
    save_png16(endpoints, dir / "e16.png");
    const Image e16 = load_png(dir / "e16.png");
    CHECK(e16.channels == 1);
    CHECK(e16.pixels[0] == 1.0);
    CHECK(e16.pixels[1] == 0.0);

    Image out_of_range(1, 2, 1);
    out_of_range.pixels = {1.7, -0.3};
    save_png(out_of_range, dir / "c.png");
    CHECK(load_png(dir / "c.png").pixels == std::vector<double>{1.0, 0.0});
  }

  TEST_CASE("png errors") {
    const auto dir = testing::scratch_dir("png_err");
    CHECK_THROWS_AS(load_png(dir / "missing.png"), ImageError);
    std::ofstream(dir / "junk.png") << "not a png at all";
    try {
      load_png(dir / "junk.png");
      FAIL("expected ImageError");
    } catch (const ImageError& e) {
      CHECK(std::string(e.what()).find("junk.png") != std::string::npos);
    }
  }

  TEST_CASE("bicubic kernel and taps") {
    CHECK(cubic_kernel(0.0) == 1.0);
    CHECK(cubic_kernel(1.0) == 0.0);
    CHECK(cubic_kernel(2.0) == 0.0);
    CHECK(cubic_kernel(0.5) == doctest::Approx(0.5625));
    CHECK(cubic_kernel(1.5) == doctest::Approx(-0.0625));
    for (std::size_t in : {5u, 16u, 64u})
      for (std::size_t out : {3u, 16u, 40u, 128u})
        for (std::size_t d = 0; d < out; ++d) {
          const auto t = resample_taps(in, out, d);
          double s = 0.0;
          for (double w : t.weight) s += w;
          CHECK(std::abs(s - 1.0) < 1e-12);
        }
  }

  TEST_CASE("bicubic resize oracles") {
    Image flat(9, 6, 3, 0.37);
    for (const auto& [h, w] : {std::pair{3, 2}, std::pair{18, 12}, std::pair{5, 13}}) {
      const Image r = resize_bicubic(flat, h, w);
      for (double v : r.pixels) CHECK(std::abs(v - 0.37) < 1e-12);
    }
    const Image img = random_image(6, 8, 2);
    const Image same = resize_bicubic(img, 6, 8);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) CHECK(std::abs(same.pixels[i] - img.pixels[i]) < 1e-12);

    // ramp downscaled x2 against a direct per-pixel kernel evaluation
    Image ramp(1, 16, 1);
    for (std::size_t x = 0; x < 16; ++x) ramp.at(0, x, 0) = static_cast<double>(x) / 15.0;
    const Image half = resize_bicubic(ramp, 1, 8);
    for (std::size_t x = 0; x < 8; ++x) {
      const double center = (x + 0.5) * 2.0 - 0.5;
      double acc = 0.0, norm = 0.0;
      for (int j = -8; j < 24; ++j) {
        const double wgt = cubic_kernel((center - j) / 2.0);
        acc += wgt * ramp.at(0, static_cast<std::size_t>(std::clamp(j, 0, 15)), 0);
        norm += wgt;
      }
      CHECK(half.at(0, x, 0) == doctest::Approx(acc / norm).epsilon(1e-12));
    }
    CHECK(downscale(random_image(64, 48, 3), 8).height == 8);
    CHECK(downscale(random_image(64, 48, 3), 8).width == 6);
    CHECK(upscale(random_image(4, 5, 3), 4).width == 20);
    CHECK_THROWS_AS(downscale(random_image(4, 4, 1), 8), ShapeError);
  }

  TEST_CASE("tensor conversion and dihedral transforms") {
    const Image img = random_image(4, 6, 4);
    CHECK(to_tensor(img).shape() == Shape{1, 3, 4, 6});
    CHECK(from_tensor(to_tensor(img)).pixels == img.pixels);
    const std::vector<Image> two = {img, random_image(4, 6, 5)};
    const Tensor b = stack(two);
    CHECK(b.shape() == Shape{2, 3, 4, 6});
    CHECK(from_tensor(b, 1).pixels == two[1].pixels);

    const Image r = apply(img, Dihedral{1, false});
    CHECK(r.height == 6);
    CHECK(r.width == 4);
    // counter-clockwise quarter turn: top-right corner moves to top-left
    CHECK(r.at(0, 0, 0) == img.at(0, 5, 0));
    const Image f = apply(img, Dihedral{0, true});
    CHECK(f.at(0, 0, 1) == img.at(0, 5, 1));
    for (int i = 0; i < 8; ++i) CHECK(Dihedral::from_index(i).index() == i);
    Image four = img;
    for (int k = 0; k < 4; ++k) four = apply(four, Dihedral{1, false});
    CHECK(four.pixels == img.pixels);
  }
}

TEST_SUITE("imaging") {
  TEST_CASE("psnr oracles") {
    const Image a = random_image(16, 16, 6);
    CHECK(std::isinf(psnr(a, a)));
    CHECK(format_db(psnr(a, a)) == "inf");
    Image b(20, 20, 3, 0.25), c(20, 20, 3, 0.25 + 16.0 / 255.0);
    CHECK(std::abs(psnr(b, c) - 24.0486) < 1e-3);
    CHECK(psnr(Image(4, 4, 3, 0.0), Image(4, 4, 3, 1.0)) == 0.0);
    CHECK(psnr(b, c) == psnr(c, b));
    CHECK_THROWS_AS(psnr(b, Image(20, 21, 3)), ShapeError);

    // larger perturbation, lower PSNR
    Rng rng(1);
    std::uniform_real_distribution<double> n(-1.0, 1.0);
    Image noise(16, 16, 3);
    for (auto& v : noise.pixels) v = n(rng);
    double prev = 1e300;
    for (double amp : {0.01, 0.02, 0.05, 0.1}) {
      Image d = a;
      for (std::size_t i = 0; i < d.pixels.size(); ++i) d.pixels[i] += amp * noise.pixels[i];
      const double p = psnr(a, d);
      CHECK(p < prev);
      prev = p;
    }
  }

  TEST_CASE("ssim oracles") {
    const Image a = random_image(24, 20, 7);
    CHECK(ssim(a, a) == 1.0);
    CHECK(ssim(a, a, MetricSpace::luma) == 1.0);
    const double expected = 1e-4 / 1.0001;
    CHECK(ssim(Image(16, 16, 3, 0.0), Image(16, 16, 3, 1.0)) == doctest::Approx(expected).epsilon(1e-9));
    for (std::uint64_t s = 0; s < 5; ++s) {
      const Image x = random_image(16, 16, 10 + s), y = random_image(16, 16, 20 + s);
      const double v = ssim(x, y);
      CHECK(v == doctest::Approx(ssim(y, x)).epsilon(1e-14));
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
    CHECK_THROWS_AS(ssim(Image(8, 8, 3), Image(8, 8, 3)), ShapeError);
  }

  TEST_CASE("mps") {
    CHECK(std::abs(mps(0.8910, 0.1590) - 0.8660) < 1e-12);
    CHECK(std::abs(mps(0.7972, 0.2844) - 0.7564) < 1e-12);
    CHECK(mps(1.0, 0.0) == 1.0);
    CHECK(mps(0.5, 0.2) - mps(0.5, 0.3) == doctest::Approx(0.05).epsilon(1e-12));
  }

  TEST_CASE("eval report rows and csv") {
    const std::vector<std::string> names = {"x", "y"};
    const std::vector<Image> refs = {random_image(12, 12, 1), random_image(12, 12, 2)};
    EvalReport r;
    r.seed = 5;
    r.add_method("hr", names, refs, refs, MetricSpace::rgb);
    r.add_method("m", names, refs, refs, MetricSpace::rgb, std::vector<double>{0.1, 0.3});
    REQUIRE(r.find("hr", "mean"));
    CHECK(std::isinf(r.find("hr", "mean")->psnr));
    CHECK(r.find("hr", "x")->ssim == 1.0);
    CHECK_FALSE(r.find("hr", "x")->mps);
    CHECK(r.find("m", "mean")->lpips.value() == doctest::Approx(0.2));
    CHECK(r.find("m", "y")->mps.value() == doctest::Approx(0.85));
    std::ostringstream os;
    r.write_csv(os);
    const std::string csv = os.str();
    CHECK(csv.rfind("method,image,psnr,ssim,lpips,mps,seed\n", 0) == 0);
    CHECK(csv.find("hr,x,inf,1.000000,,,5\n") != std::string::npos);
    CHECK(csv.find("m,y,inf,1.000000,0.300000,0.850000,5\n") != std::string::npos);
  }
}
