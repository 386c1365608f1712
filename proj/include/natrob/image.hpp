#pragma once

#include <cstdint>
#include <vector>

namespace natrob {

// Dense H x W x 3 RGB raster, 8-bit storage. All distortion math runs on the
// unit-interval float view (ImageF) and re-quantizes with round-half-up.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;  // row-major, RGB interleaved

  static Image allocate(int w, int h, uint8_t fill = 0);

  uint8_t& at(int x, int y, int c) { return pixels[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  uint8_t at(int x, int y, int c) const { return pixels[(static_cast<size_t>(y) * width + x) * 3 + c]; }

  bool same_shape(const Image& o) const { return width == o.width && height == o.height; }
  bool operator==(const Image& o) const = default;
};

// Unit-interval float view of an Image.
struct ImageF {
  int width = 0;
  int height = 0;
  std::vector<float> data;  // row-major, RGB interleaved

  static ImageF allocate(int w, int h, float fill = 0.0f);

  float& at(int x, int y, int c) { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  float at(int x, int y, int c) const { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
};

ImageF to_float(const Image& img);
// Round-half-up quantization, clamped to [0, 255].
Image to_u8(const ImageF& img);
uint8_t quantize_channel(float v);

struct PixelHSV {
  float h;  // degrees in [0, 360)
  float s;  // [0, 1]
  float v;  // [0, 1]
};

PixelHSV rgb_to_hsv(float r, float g, float b);
void hsv_to_rgb(const PixelHSV& p, float& r, float& g, float& b);

// Max absolute channel difference in 8-bit units. DimensionMismatch if shapes differ.
int linf_distance(const Image& a, const Image& b);
// Mean squared channel difference in 8-bit units (used for severity monotonicity checks).
double l2_rms_distance(const Image& a, const Image& b);

// Bit-exact subwindow copy. OutOfBounds if the window exceeds the source.
Image crop(const Image& img, int x0, int y0, int w, int h);

enum class ResizeMode { bilinear, box, nearest };

ImageF resize(const ImageF& img, int w, int h, ResizeMode mode);
Image resize(const Image& img, int w, int h, ResizeMode mode);

// Evaluation geometry: resize short side to `short_side` (bilinear), no crop.
Image resize_short_side(const Image& img, int short_side);
// Centered w x h crop.
Image center_crop(const Image& img, int w, int h);

double psnr(const Image& a, const Image& b);

}  // namespace natrob
