#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "natrob/image.hpp"

namespace natrob {

enum class Family {
  gaussian_noise,
  shot_noise,
  gaussian_blur,
  pixelate,
  jpeg_quality,
  hue,
  saturation,
  brightness,
  contrast,
  translation,
};

constexpr int kNumFamilies = 10;
constexpr std::array<Family, kNumFamilies> kAllFamilies = {
    Family::gaussian_noise, Family::shot_noise, Family::gaussian_blur, Family::pixelate,
    Family::jpeg_quality,   Family::hue,        Family::saturation,    Family::brightness,
    Family::contrast,       Family::translation};

const char* family_name(Family f);
bool parse_family(const std::string& name, Family& out);
bool family_is_stochastic(Family f);

enum class Direction { pos_x, neg_x, pos_y, neg_y };
const char* direction_name(Direction d);
bool parse_direction(const std::string& name, Direction& out);

// Transformation descriptor. Severity 0 is the identity for every family
// (for translation, the unshifted evaluation crop).
struct DistortionSpec {
  Family family;
  int severity = 1;  // 0..5
  uint64_t seed = 0; // required for stochastic families, ignored otherwise
  Direction direction = Direction::pos_x;  // translation only
};

// Per-family strength parameters for severities 1..5. Each array is strictly
// monotone in the family's documented strength direction.
struct SeverityTable {
  std::array<double, 5> gaussian_noise_sigma = {0.04, 0.08, 0.12, 0.18, 0.26};
  std::array<double, 5> shot_noise_lambda = {60, 25, 12, 5, 3};
  std::array<double, 5> gaussian_blur_sigma = {0.5, 1, 2, 3, 4};
  std::array<double, 5> pixelate_factor = {0.8, 0.6, 0.4, 0.25, 0.15};
  std::array<int, 5> jpeg_quality = {80, 60, 40, 25, 15};
  std::array<double, 5> hue_shift_deg = {9, 18, 36, 54, 72};
  std::array<double, 5> saturation_factor = {1.5, 2.0, 2.5, 3.0, 4.0};
  std::array<double, 5> brightness_delta = {0.1, 0.2, 0.3, 0.4, 0.5};
  std::array<double, 5> contrast_factor = {0.75, 0.6, 0.45, 0.3, 0.2};
  std::array<int, 5> translation_offset_px = {1, 2, 4, 8, 16};

  void validate() const;  // InvalidConfig on non-monotone tables
};

// Evaluation-crop geometry for translation. The source frame must leave a
// margin of at least the largest offset on every side.
struct CropGeometry {
  int width = 224;
  int height = 224;
};

// Dispatch by family. For translation `img` is the full frame and the output
// is the shifted evaluation crop; for every other family `img` passes through
// unchanged in size.
Image apply(const DistortionSpec& spec, const Image& img, const SeverityTable& table = {},
            const CropGeometry& geom = {});

Image apply_noise(Family family, int severity, uint64_t seed, const Image& img,
                  const SeverityTable& table = {});
Image apply_blur(int severity, const Image& img, const SeverityTable& table = {});
Image apply_pixelate(int severity, const Image& img, const SeverityTable& table = {});
Image apply_jpeg(int severity, const Image& img, const SeverityTable& table = {});
Image apply_color(Family family, int severity, const Image& img, const SeverityTable& table = {});
Image apply_translation(int severity, Direction dir, const Image& frame,
                        const CropGeometry& geom = {}, const SeverityTable& table = {});

// Float-view color transforms with explicit parameters (test hooks and the
// severity-table implementations share these).
ImageF hue_rotate(const ImageF& img, double delta_deg);
ImageF saturation_scale(const ImageF& img, double factor);
ImageF brightness_add(const ImageF& img, double delta);
ImageF contrast_scale(const ImageF& img, double factor);

// Per-image stream key for stochastic families: hash(master seed, frame id,
// family, severity). Parallel evaluation order cannot change results.
uint64_t distortion_seed(uint64_t master_seed, const std::string& frame_id, Family family,
                         int severity);

}  // namespace natrob
