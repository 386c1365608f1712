#include "natrob/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "natrob/error.hpp"

namespace natrob {

Image Image::allocate(int w, int h, uint8_t fill) {
  if (w < 1 || h < 1) fail(ErrorCode::InvalidSize, "image dimensions must be positive");
  Image img;
  img.width = w;
  img.height = h;
  img.pixels.assign(static_cast<size_t>(w) * h * 3, fill);
  return img;
}

ImageF ImageF::allocate(int w, int h, float fill) {
  if (w < 1 || h < 1) fail(ErrorCode::InvalidSize, "image dimensions must be positive");
  ImageF img;
  img.width = w;
  img.height = h;
  img.data.assign(static_cast<size_t>(w) * h * 3, fill);
  return img;
}

ImageF to_float(const Image& img) {
  ImageF out;
  out.width = img.width;
  out.height = img.height;
  out.data.resize(img.pixels.size());
  for (size_t i = 0; i < img.pixels.size(); ++i) out.data[i] = img.pixels[i] / 255.0f;
  return out;
}

uint8_t quantize_channel(float v) {
  float q = std::floor(v * 255.0f + 0.5f);
  return static_cast<uint8_t>(std::clamp(q, 0.0f, 255.0f));
}

Image to_u8(const ImageF& img) {
  Image out;
  out.width = img.width;
  out.height = img.height;
  out.pixels.resize(img.data.size());
  for (size_t i = 0; i < img.data.size(); ++i) out.pixels[i] = quantize_channel(img.data[i]);
  return out;
}

PixelHSV rgb_to_hsv(float r, float g, float b) {
  float mx = std::max({r, g, b});
  float mn = std::min({r, g, b});
  float delta = mx - mn;
  PixelHSV out;
  out.v = mx;
  out.s = mx > 0.0f ? delta / mx : 0.0f;
  if (delta <= 0.0f) {
    out.h = 0.0f;
    return out;
  }
  float h;
  if (mx == r) {
    h = 60.0f * ((g - b) / delta);
  } else if (mx == g) {
    h = 60.0f * (2.0f + (b - r) / delta);
  } else {
    h = 60.0f * (4.0f + (r - g) / delta);
  }
  if (h < 0.0f) h += 360.0f;
  if (h >= 360.0f) h -= 360.0f;
  out.h = h;
  return out;
}

void hsv_to_rgb(const PixelHSV& p, float& r, float& g, float& b) {
  float h = std::fmod(p.h, 360.0f);
  if (h < 0.0f) h += 360.0f;
  float s = std::clamp(p.s, 0.0f, 1.0f);
  float v = std::clamp(p.v, 0.0f, 1.0f);
  float c = v * s;
  float hp = h / 60.0f;
  float x = c * (1.0f - std::fabs(std::fmod(hp, 2.0f) - 1.0f));
  float r1 = 0, g1 = 0, b1 = 0;
  switch (static_cast<int>(hp) % 6) {
    case 0: r1 = c; g1 = x; break;
    case 1: r1 = x; g1 = c; break;
    case 2: g1 = c; b1 = x; break;
    case 3: g1 = x; b1 = c; break;
    case 4: r1 = x; b1 = c; break;
    case 5: r1 = c; b1 = x; break;
  }
  float m = v - c;
  r = r1 + m;
  g = g1 + m;
  b = b1 + m;
}

int linf_distance(const Image& a, const Image& b) {
  if (!a.same_shape(b)) fail(ErrorCode::DimensionMismatch, "linf_distance on differing shapes");
  int mx = 0;
  for (size_t i = 0; i < a.pixels.size(); ++i) {
    mx = std::max(mx, std::abs(static_cast<int>(a.pixels[i]) - static_cast<int>(b.pixels[i])));
  }
  return mx;
}

double l2_rms_distance(const Image& a, const Image& b) {
  if (!a.same_shape(b)) fail(ErrorCode::DimensionMismatch, "l2_rms_distance on differing shapes");
  double acc = 0.0;
  for (size_t i = 0; i < a.pixels.size(); ++i) {
    double d = static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]);
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(a.pixels.size()));
}

Image crop(const Image& img, int x0, int y0, int w, int h) {
  if (w < 1 || h < 1) fail(ErrorCode::InvalidSize, "crop dimensions must be positive");
  if (x0 < 0 || y0 < 0 || x0 + w > img.width || y0 + h > img.height) {
    fail(ErrorCode::OutOfBounds, "crop window exceeds source image");
  }
  Image out = Image::allocate(w, h);
  for (int y = 0; y < h; ++y) {
    const uint8_t* src = &img.pixels[(static_cast<size_t>(y0 + y) * img.width + x0) * 3];
    std::copy(src, src + static_cast<size_t>(w) * 3, &out.pixels[static_cast<size_t>(y) * w * 3]);
  }
  return out;
}

namespace {

// Per-destination-index source taps for exact-coverage box filtering.
struct BoxTap {
  int begin;
  std::vector<float> weights;  // sum to 1
};

std::vector<BoxTap> box_taps(int src, int dst) {
  std::vector<BoxTap> taps(dst);
  double scale = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    double lo = i * scale;
    double hi = (i + 1) * scale;
    int jb = static_cast<int>(std::floor(lo));
    int je = std::min(src - 1, static_cast<int>(std::ceil(hi)) - 1);
    taps[i].begin = jb;
    double total = hi - lo;
    for (int j = jb; j <= je; ++j) {
      double cover = std::min(hi, static_cast<double>(j + 1)) - std::max(lo, static_cast<double>(j));
      taps[i].weights.push_back(static_cast<float>(cover / total));
    }
  }
  return taps;
}

}  // namespace

ImageF resize(const ImageF& img, int w, int h, ResizeMode mode) {
  if (w < 1 || h < 1) fail(ErrorCode::InvalidSize, "resize dimensions must be positive");
  ImageF out = ImageF::allocate(w, h);
  const double sx = static_cast<double>(img.width) / w;
  const double sy = static_cast<double>(img.height) / h;

  switch (mode) {
    case ResizeMode::nearest: {
      for (int y = 0; y < h; ++y) {
        int syi = std::min(img.height - 1, static_cast<int>((y + 0.5) * sy));
        for (int x = 0; x < w; ++x) {
          int sxi = std::min(img.width - 1, static_cast<int>((x + 0.5) * sx));
          for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(sxi, syi, c);
        }
      }
      break;
    }
    case ResizeMode::bilinear: {
      // Half-pixel-center alignment, edge-clamped.
      for (int y = 0; y < h; ++y) {
        double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(img.height - 1));
        int y0 = static_cast<int>(fy);
        int y1 = std::min(img.height - 1, y0 + 1);
        float wy = static_cast<float>(fy - y0);
        for (int x = 0; x < w; ++x) {
          double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(img.width - 1));
          int x0 = static_cast<int>(fx);
          int x1 = std::min(img.width - 1, x0 + 1);
          float wx = static_cast<float>(fx - x0);
          for (int c = 0; c < 3; ++c) {
            float top = img.at(x0, y0, c) * (1.0f - wx) + img.at(x1, y0, c) * wx;
            float bot = img.at(x0, y1, c) * (1.0f - wx) + img.at(x1, y1, c) * wx;
            out.at(x, y, c) = top * (1.0f - wy) + bot * wy;
          }
        }
      }
      break;
    }
    case ResizeMode::box: {
      auto tx = box_taps(img.width, w);
      auto ty = box_taps(img.height, h);
      // Horizontal pass into a temp, then vertical.
      ImageF tmp = ImageF::allocate(w, img.height);
      for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < w; ++x) {
          const auto& t = tx[x];
          float acc[3] = {0, 0, 0};
          for (size_t k = 0; k < t.weights.size(); ++k) {
            for (int c = 0; c < 3; ++c) acc[c] += t.weights[k] * img.at(t.begin + static_cast<int>(k), y, c);
          }
          for (int c = 0; c < 3; ++c) tmp.at(x, y, c) = acc[c];
        }
      }
      for (int y = 0; y < h; ++y) {
        const auto& t = ty[y];
        for (int x = 0; x < w; ++x) {
          float acc[3] = {0, 0, 0};
          for (size_t k = 0; k < t.weights.size(); ++k) {
            for (int c = 0; c < 3; ++c) acc[c] += t.weights[k] * tmp.at(x, t.begin + static_cast<int>(k), c);
          }
          for (int c = 0; c < 3; ++c) out.at(x, y, c) = acc[c];
        }
      }
      break;
    }
  }
  return out;
}

Image resize(const Image& img, int w, int h, ResizeMode mode) {
  if (w == img.width && h == img.height && mode != ResizeMode::bilinear) {
    return img;  // box/nearest at identity scale are exact
  }
  return to_u8(resize(to_float(img), w, h, mode));
}

Image resize_short_side(const Image& img, int short_side) {
  if (short_side < 1) fail(ErrorCode::InvalidSize, "short side must be positive");
  int w, h;
  if (img.width <= img.height) {
    w = short_side;
    h = std::max(1, static_cast<int>(std::lround(static_cast<double>(img.height) * short_side / img.width)));
  } else {
    h = short_side;
    w = std::max(1, static_cast<int>(std::lround(static_cast<double>(img.width) * short_side / img.height)));
  }
  if (w == img.width && h == img.height) return img;
  return resize(img, w, h, ResizeMode::bilinear);
}

Image center_crop(const Image& img, int w, int h) {
  if (w > img.width || h > img.height) fail(ErrorCode::OutOfBounds, "center crop larger than image");
  return crop(img, (img.width - w) / 2, (img.height - h) / 2, w, h);
}

double psnr(const Image& a, const Image& b) {
  if (!a.same_shape(b)) fail(ErrorCode::DimensionMismatch, "psnr on differing shapes");
  double mse = 0.0;
  for (size_t i = 0; i < a.pixels.size(); ++i) {
    double d = static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]);
    mse += d * d;
  }
  mse /= static_cast<double>(a.pixels.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace natrob
