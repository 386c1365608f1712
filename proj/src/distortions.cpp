#include "natrob/distortions.hpp"

#include <algorithm>
#include <cmath>

#include "natrob/error.hpp"
#include "natrob/image_io.hpp"
#include "natrob/rng.hpp"

namespace natrob {

namespace {

constexpr const char* kFamilyNames[kNumFamilies] = {
    "gaussian_noise", "shot_noise", "gaussian_blur", "pixelate", "jpeg_quality",
    "hue",            "saturation", "brightness",    "contrast", "translation"};

void check_severity(int severity) {
  if (severity < 0 || severity > 5) fail(ErrorCode::InvalidSeverity, "severity must be in 0..5");
}

int severity_index(int severity) {
  check_severity(severity);
  if (severity == 0) fail(ErrorCode::InvalidSeverity, "severity 0 handled by caller");
  return severity - 1;
}

template <typename T>
void check_monotone(const std::array<T, 5>& a, bool increasing, const char* name) {
  for (int i = 1; i < 5; ++i) {
    bool ok = increasing ? a[i] > a[i - 1] : a[i] < a[i - 1];
    if (!ok) fail(ErrorCode::InvalidConfig, std::string("severity table not monotone: ") + name);
  }
}

}  // namespace

const char* family_name(Family f) { return kFamilyNames[static_cast<int>(f)]; }

bool parse_family(const std::string& name, Family& out) {
  for (int i = 0; i < kNumFamilies; ++i) {
    if (name == kFamilyNames[i]) {
      out = static_cast<Family>(i);
      return true;
    }
  }
  return false;
}

bool family_is_stochastic(Family f) {
  return f == Family::gaussian_noise || f == Family::shot_noise;
}

const char* direction_name(Direction d) {
  switch (d) {
    case Direction::pos_x: return "+x";
    case Direction::neg_x: return "-x";
    case Direction::pos_y: return "+y";
    case Direction::neg_y: return "-y";
  }
  return "?";
}

bool parse_direction(const std::string& name, Direction& out) {
  if (name == "+x") out = Direction::pos_x;
  else if (name == "-x") out = Direction::neg_x;
  else if (name == "+y") out = Direction::pos_y;
  else if (name == "-y") out = Direction::neg_y;
  else return false;
  return true;
}

void SeverityTable::validate() const {
  check_monotone(gaussian_noise_sigma, true, "gaussian_noise");
  check_monotone(shot_noise_lambda, false, "shot_noise");
  check_monotone(gaussian_blur_sigma, true, "gaussian_blur");
  check_monotone(pixelate_factor, false, "pixelate");
  check_monotone(jpeg_quality, false, "jpeg_quality");
  check_monotone(hue_shift_deg, true, "hue");
  check_monotone(saturation_factor, true, "saturation");
  check_monotone(brightness_delta, true, "brightness");
  check_monotone(contrast_factor, false, "contrast");
  check_monotone(translation_offset_px, true, "translation");
}

uint64_t distortion_seed(uint64_t master_seed, const std::string& frame_id, Family family,
                         int severity) {
  return CounterRng::derive_key({master_seed, CounterRng::hash_string(frame_id),
                                 static_cast<uint64_t>(family), static_cast<uint64_t>(severity)});
}

Image apply_noise(Family family, int severity, uint64_t seed, const Image& img,
                  const SeverityTable& table) {
  int idx = severity_index(severity);
  ImageF f = to_float(img);
  CounterRng rng(seed);
  if (family == Family::gaussian_noise) {
    const float sigma = static_cast<float>(table.gaussian_noise_sigma[idx]);
    for (auto& v : f.data) v = std::clamp(v + sigma * static_cast<float>(rng.next_gaussian()), 0.0f, 1.0f);
  } else if (family == Family::shot_noise) {
    const double lambda = table.shot_noise_lambda[idx];
    for (auto& v : f.data) {
      double n = static_cast<double>(rng.next_poisson(v * lambda)) / lambda;
      v = std::clamp(static_cast<float>(n), 0.0f, 1.0f);
    }
  } else {
    fail(ErrorCode::InvalidConfig, "apply_noise requires a noise family");
  }
  return to_u8(f);
}

Image apply_blur(int severity, const Image& img, const SeverityTable& table) {
  int idx = severity_index(severity);
  const double sigma = table.gaussian_blur_sigma[idx];
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += kernel[i + radius];
  }
  for (auto& k : kernel) k /= sum;

  ImageF src = to_float(img);
  ImageF tmp = ImageF::allocate(img.width, img.height);
  ImageF dst = ImageF::allocate(img.width, img.height);
  // horizontal pass, clamp-to-edge
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc[3] = {0, 0, 0};
      for (int i = -radius; i <= radius; ++i) {
        int sx = std::clamp(x + i, 0, img.width - 1);
        for (int c = 0; c < 3; ++c) acc[c] += kernel[i + radius] * src.at(sx, y, c);
      }
      for (int c = 0; c < 3; ++c) tmp.at(x, y, c) = static_cast<float>(acc[c]);
    }
  }
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double acc[3] = {0, 0, 0};
      for (int i = -radius; i <= radius; ++i) {
        int sy = std::clamp(y + i, 0, img.height - 1);
        for (int c = 0; c < 3; ++c) acc[c] += kernel[i + radius] * tmp.at(x, sy, c);
      }
      for (int c = 0; c < 3; ++c) dst.at(x, y, c) = static_cast<float>(acc[c]);
    }
  }
  return to_u8(dst);
}

Image apply_pixelate(int severity, const Image& img, const SeverityTable& table) {
  int idx = severity_index(severity);
  const double f = table.pixelate_factor[idx];
  int w = std::max(1, static_cast<int>(std::ceil(img.width * f)));
  int h = std::max(1, static_cast<int>(std::ceil(img.height * f)));
  Image small = resize(img, w, h, ResizeMode::box);
  return resize(small, img.width, img.height, ResizeMode::nearest);
}

Image apply_jpeg(int severity, const Image& img, const SeverityTable& table) {
  int idx = severity_index(severity);
  auto bytes = encode_jpeg(img, table.jpeg_quality[idx]);
  Image out = decode_jpeg(bytes.data(), bytes.size());
  if (!out.same_shape(img)) fail(ErrorCode::CodecFailure, "jpeg round trip changed dimensions");
  return out;
}

ImageF hue_rotate(const ImageF& img, double delta_deg) {
  ImageF out = img;
  for (size_t i = 0; i < out.data.size(); i += 3) {
    PixelHSV p = rgb_to_hsv(out.data[i], out.data[i + 1], out.data[i + 2]);
    p.h = static_cast<float>(std::fmod(p.h + delta_deg, 360.0));
    if (p.h < 0.0f) p.h += 360.0f;
    hsv_to_rgb(p, out.data[i], out.data[i + 1], out.data[i + 2]);
  }
  return out;
}

ImageF saturation_scale(const ImageF& img, double factor) {
  ImageF out = img;
  for (size_t i = 0; i < out.data.size(); i += 3) {
    PixelHSV p = rgb_to_hsv(out.data[i], out.data[i + 1], out.data[i + 2]);
    p.s = std::clamp(static_cast<float>(p.s * factor), 0.0f, 1.0f);
    hsv_to_rgb(p, out.data[i], out.data[i + 1], out.data[i + 2]);
  }
  return out;
}

ImageF brightness_add(const ImageF& img, double delta) {
  ImageF out = img;
  for (size_t i = 0; i < out.data.size(); i += 3) {
    PixelHSV p = rgb_to_hsv(out.data[i], out.data[i + 1], out.data[i + 2]);
    p.v = std::clamp(static_cast<float>(p.v + delta), 0.0f, 1.0f);
    hsv_to_rgb(p, out.data[i], out.data[i + 1], out.data[i + 2]);
  }
  return out;
}

ImageF contrast_scale(const ImageF& img, double factor) {
  double mu = 0.0;
  for (size_t i = 0; i < img.data.size(); i += 3) {
    mu += 0.299 * img.data[i] + 0.587 * img.data[i + 1] + 0.114 * img.data[i + 2];
  }
  mu /= static_cast<double>(img.data.size() / 3);
  ImageF out = img;
  for (auto& v : out.data) {
    v = std::clamp(static_cast<float>(mu + factor * (v - mu)), 0.0f, 1.0f);
  }
  return out;
}

Image apply_color(Family family, int severity, const Image& img, const SeverityTable& table) {
  int idx = severity_index(severity);
  ImageF f = to_float(img);
  switch (family) {
    case Family::hue: f = hue_rotate(f, table.hue_shift_deg[idx]); break;
    case Family::saturation: f = saturation_scale(f, table.saturation_factor[idx]); break;
    case Family::brightness: f = brightness_add(f, table.brightness_delta[idx]); break;
    case Family::contrast: f = contrast_scale(f, table.contrast_factor[idx]); break;
    default: fail(ErrorCode::InvalidConfig, "apply_color requires a color family");
  }
  return to_u8(f);
}

Image apply_translation(int severity, Direction dir, const Image& frame, const CropGeometry& geom,
                        const SeverityTable& table) {
  check_severity(severity);
  int offset = severity == 0 ? 0 : table.translation_offset_px[severity - 1];
  int dx = 0, dy = 0;
  switch (dir) {
    case Direction::pos_x: dx = offset; break;
    case Direction::neg_x: dx = -offset; break;
    case Direction::pos_y: dy = offset; break;
    case Direction::neg_y: dy = -offset; break;
  }
  int cx = (frame.width - geom.width) / 2;
  int cy = (frame.height - geom.height) / 2;
  int x0 = cx + dx;
  int y0 = cy + dy;
  if (x0 < 0 || y0 < 0 || x0 + geom.width > frame.width || y0 + geom.height > frame.height) {
    fail(ErrorCode::OutOfBounds, "translation margin insufficient for offset " + std::to_string(offset));
  }
  return crop(frame, x0, y0, geom.width, geom.height);
}

Image apply(const DistortionSpec& spec, const Image& img, const SeverityTable& table,
            const CropGeometry& geom) {
  check_severity(spec.severity);
  if (spec.severity == 0) {
    if (spec.family == Family::translation) return apply_translation(0, spec.direction, img, geom, table);
    return img;
  }
  switch (spec.family) {
    case Family::gaussian_noise:
    case Family::shot_noise:
      return apply_noise(spec.family, spec.severity, spec.seed, img, table);
    case Family::gaussian_blur:
      return apply_blur(spec.severity, img, table);
    case Family::pixelate:
      return apply_pixelate(spec.severity, img, table);
    case Family::jpeg_quality:
      return apply_jpeg(spec.severity, img, table);
    case Family::hue:
    case Family::saturation:
    case Family::brightness:
    case Family::contrast:
      return apply_color(spec.family, spec.severity, img, table);
    case Family::translation:
      return apply_translation(spec.severity, spec.direction, img, geom, table);
  }
  fail(ErrorCode::InvalidConfig, "unknown distortion family");
}

}  // namespace natrob
