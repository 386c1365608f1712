#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "natrob/error.hpp"
#include "natrob/image.hpp"
#include "natrob/rng.hpp"

using namespace natrob;

namespace {

Image random_image(int w, int h, uint64_t key) {
  CounterRng rng(key);
  Image img = Image::allocate(w, h);
  for (auto& p : img.pixels) p = static_cast<uint8_t>(rng.next_u64() & 0xff);
  return img;
}

}  // namespace

TEST_CASE("quantize_channel rounds half up and clamps") {
  CHECK(quantize_channel(0.0f) == 0);
  CHECK(quantize_channel(1.0f) == 255);
  CHECK(quantize_channel(-0.5f) == 0);
  CHECK(quantize_channel(2.0f) == 255);
  CHECK(quantize_channel(0.6f / 255.0f) == 1);
  CHECK(quantize_channel(0.4f / 255.0f) == 0);
  // 0.5 * 255 = 127.5 exactly; half rounds up
  CHECK(quantize_channel(0.5f) == 128);
}

TEST_CASE("u8/float round-trip is exact for all 256 levels") {
  Image img = Image::allocate(16, 16);
  for (int i = 0; i < 256; ++i) {
    img.pixels[static_cast<size_t>(i) * 3] = static_cast<uint8_t>(i);
  }
  CHECK(to_u8(to_float(img)) == img);
}

TEST_CASE("hsv round-trip on random pixels") {
  CounterRng rng(42);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    float r = static_cast<float>(rng.next_double());
    float g = static_cast<float>(rng.next_double());
    float b = static_cast<float>(rng.next_double());
    auto hsv = rgb_to_hsv(r, g, b);
    CHECK(hsv.h >= 0.0f);
    CHECK(hsv.h < 360.0f);
    CHECK(hsv.s >= 0.0f);
    CHECK(hsv.s <= 1.0f);
    float r2, g2, b2;
    hsv_to_rgb(hsv, r2, g2, b2);
    worst = std::max({worst, std::abs(double(r) - r2), std::abs(double(g) - g2),
                      std::abs(double(b) - b2)});
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("hsv primaries") {
  auto red = rgb_to_hsv(1.0f, 0.0f, 0.0f);
  CHECK(red.h == doctest::Approx(0.0));
  CHECK(red.s == doctest::Approx(1.0));
  CHECK(red.v == doctest::Approx(1.0));
  auto green = rgb_to_hsv(0.0f, 1.0f, 0.0f);
  CHECK(green.h == doctest::Approx(120.0));
  auto blue = rgb_to_hsv(0.0f, 0.0f, 1.0f);
  CHECK(blue.h == doctest::Approx(240.0));
  auto gray = rgb_to_hsv(0.5f, 0.5f, 0.5f);
  CHECK(gray.s == doctest::Approx(0.0));
  CHECK(gray.v == doctest::Approx(0.5));
}

TEST_CASE("linf_distance matches brute force and validates shapes") {
  Image a = random_image(13, 7, 1);
  Image b = random_image(13, 7, 2);
  int expected = 0;
  for (size_t i = 0; i < a.pixels.size(); ++i) {
    expected = std::max(expected, std::abs(int(a.pixels[i]) - int(b.pixels[i])));
  }
  CHECK(linf_distance(a, b) == expected);
  CHECK(linf_distance(a, a) == 0);
  Image c = random_image(7, 13, 3);
  CHECK_THROWS_WITH_AS(linf_distance(a, c), doctest::Contains("DimensionMismatch"), Error);
}

TEST_CASE("l2_rms_distance brute force") {
  Image a = random_image(9, 5, 4);
  Image b = random_image(9, 5, 5);
  double sum = 0.0;
  for (size_t i = 0; i < a.pixels.size(); ++i) {
    double d = double(a.pixels[i]) - double(b.pixels[i]);
    sum += d * d;
  }
  CHECK(l2_rms_distance(a, b) == doctest::Approx(std::sqrt(sum / a.pixels.size())).epsilon(1e-12));
}

TEST_CASE("crop is a bit-exact subwindow and composes") {
  Image img = random_image(20, 14, 6);
  Image w = crop(img, 3, 2, 10, 8);
  CHECK(w.width == 10);
  CHECK(w.height == 8);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 10; ++x) {
      for (int c = 0; c < 3; ++c) CHECK(w.at(x, y, c) == img.at(x + 3, y + 2, c));
    }
  }
  // crop of crop = crop with summed offsets
  CHECK(crop(w, 2, 1, 5, 4) == crop(img, 5, 3, 5, 4));
  CHECK_THROWS_WITH_AS(crop(img, 15, 0, 10, 5), doctest::Contains("OutOfBounds"), Error);
  CHECK_THROWS_WITH_AS(crop(img, -1, 0, 5, 5), doctest::Contains("OutOfBounds"), Error);
}

TEST_CASE("box resize averages exact coverage") {
  // 2x1 -> 1x1: plain mean, round half up
  Image img = Image::allocate(2, 1);
  img.at(0, 0, 0) = 0;
  img.at(1, 0, 0) = 255;
  Image out = resize(img, 1, 1, ResizeMode::box);
  CHECK(int(out.at(0, 0, 0)) == 128);

  // 3x1 -> 2x1 with fractional coverage: left tap = (a*1 + b*0.5)/1.5
  Image img3 = Image::allocate(3, 1);
  img3.at(0, 0, 1) = 30;
  img3.at(1, 0, 1) = 90;
  img3.at(2, 0, 1) = 210;
  Image out2 = resize(img3, 2, 1, ResizeMode::box);
  double left = (30.0 / 255 * 1.0 + 90.0 / 255 * 0.5) / 1.5;
  double right = (90.0 / 255 * 0.5 + 210.0 / 255 * 1.0) / 1.5;
  CHECK(int(out2.at(0, 0, 1)) == int(quantize_channel(float(left))));
  CHECK(int(out2.at(1, 0, 1)) == int(quantize_channel(float(right))));
}

TEST_CASE("box downscale of constant image is constant") {
  Image img = Image::allocate(37, 23, 173);
  Image out = resize(img, 7, 5, ResizeMode::box);
  for (auto p : out.pixels) CHECK(int(p) == 173);
}

TEST_CASE("bilinear upscale matches half-pixel-center oracle") {
  Image img = random_image(3, 3, 7);
  ImageF f = to_float(img);
  int W = 6, H = 6;
  ImageF up = resize(f, W, H, ResizeMode::bilinear);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double sx = (x + 0.5) * 3.0 / W - 0.5;
      double sy = (y + 0.5) * 3.0 / H - 0.5;
      double cx = std::clamp(sx, 0.0, 2.0);
      double cy = std::clamp(sy, 0.0, 2.0);
      int x0 = int(std::floor(cx)), y0 = int(std::floor(cy));
      int x1 = std::min(x0 + 1, 2), y1 = std::min(y0 + 1, 2);
      double fx = cx - x0, fy = cy - y0;
      for (int c = 0; c < 3; ++c) {
        double v = (1 - fy) * ((1 - fx) * f.at(x0, y0, c) + fx * f.at(x1, y0, c)) +
                   fy * ((1 - fx) * f.at(x0, y1, c) + fx * f.at(x1, y1, c));
        CHECK(up.at(x, y, c) == doctest::Approx(v).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("nearest resize picks center-nearest source pixel") {
  Image img = random_image(4, 4, 8);
  Image up = resize(img, 8, 8, ResizeMode::nearest);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      for (int c = 0; c < 3; ++c) CHECK(up.at(x, y, c) == img.at(x / 2, y / 2, c));
    }
  }
}

TEST_CASE("identity resize returns equal pixels") {
  Image img = random_image(11, 9, 9);
  CHECK(resize(img, 11, 9, ResizeMode::bilinear) == img);
  CHECK(resize(img, 11, 9, ResizeMode::box) == img);
  CHECK(resize(img, 11, 9, ResizeMode::nearest) == img);
}

TEST_CASE("resize_short_side scales the short side and keeps aspect") {
  Image img = random_image(100, 50, 10);
  Image out = resize_short_side(img, 256);
  CHECK(out.height == 256);
  CHECK(out.width == 512);
  Image tall = random_image(40, 90, 11);
  Image out2 = resize_short_side(tall, 256);
  CHECK(out2.width == 256);
  CHECK(out2.height == 576);
}

TEST_CASE("center_crop centers the window") {
  Image img = random_image(10, 8, 12);
  Image out = center_crop(img, 4, 4);
  CHECK(out == crop(img, 3, 2, 4, 4));
  CHECK_THROWS_WITH_AS(center_crop(img, 11, 4), doctest::Contains("OutOfBounds"), Error);
}

TEST_CASE("psnr of identical images is infinite, known-diff case checks out") {
  Image a = Image::allocate(4, 4, 100);
  CHECK(std::isinf(psnr(a, a)));
  Image b = a;
  for (auto& p : b.pixels) p = 101;  // uniform error of 1
  CHECK(psnr(a, b) == doctest::Approx(20.0 * std::log10(255.0)).epsilon(1e-9));
}

TEST_CASE("invalid sizes rejected") {
  CHECK_THROWS_WITH_AS(resize(Image::allocate(2, 2), 0, 2, ResizeMode::box),
                       doctest::Contains("InvalidSize"), Error);
}
