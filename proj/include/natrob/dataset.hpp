#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "natrob/image.hpp"

namespace natrob {

enum class Split { train, val, test };
const char* split_name(Split s);
bool parse_split(const std::string& name, Split& out);

// One anchor frame per shot plus up to ten temporal neighbors at 15Hz.
struct ManifestEntry {
  std::string video_id;
  std::string shot_id;
  Split split = Split::train;
  int label = 0;
  std::string anchor_path;                 // relative to the manifest directory
  std::map<int, std::string> neighbors;    // offset index in {-5..-1, +1..+5} -> path
};

struct FrameManifest {
  std::vector<ManifestEntry> entries;
  int num_classes = 0;
  std::filesystem::path base_dir;  // resolved from the manifest location

  std::filesystem::path resolve(const std::string& rel) const { return base_dir / rel; }
  const ManifestEntry* find_shot(const std::string& shot_id) const;
};

// Milliseconds per neighbor step at 15Hz.
constexpr double kFrameStepMs = 1000.0 / 15.0;

struct FramePair {
  std::string shot_id;
  std::string anchor_path;
  std::string other_path;
  double delta_ms = 0.0;  // signed
  int label = 0;
};

// CSV schema: video_id,shot_id,split,label,anchor_path,n-5..n-1,n+1..n+5.
FrameManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const FrameManifest& manifest, const std::filesystem::path& path);

std::vector<FramePair> pairs_at_offset(const FrameManifest& manifest, int offset);

// Deterministic assignment keyed on video_id; fractions (train, val, test)
// must sum to 1 within 1e-9.
std::map<std::string, Split> split_by_video(const std::vector<std::string>& video_ids,
                                            const std::array<double, 3>& fractions, uint64_t seed);

struct SynthVideoConfig {
  int num_classes = 8;       // 4 shapes x 2 colors
  int num_shots = 400;
  int frames_per_shot = 11;  // odd, anchor in the middle
  int frame_size = 64;
  double velocity_min = 0.05;  // px per frame
  double velocity_max = 0.18;
  double jitter_sigma = 0.03;      // px
  double brightness_drift = 0.012;  // value units per frame
  std::array<double, 3> split_fractions = {0.7, 0.15, 0.15};
  uint64_t seed = 1;

  void validate() const;
};

// Renders shots of a moving anti-aliased shape over a textured background,
// writes PNG frames under out_dir and a manifest.csv. Deterministic in seed.
FrameManifest generate_synthetic(const SynthVideoConfig& config, const std::filesystem::path& out_dir);

// Renders the frames of one shot in memory (shots are RNG-independent).
std::vector<Image> render_shot(const SynthVideoConfig& config, int shot_index, int& label_out);

// Canonical evaluation preprocessing: resize short side to 256 (bilinear),
// center 224x224 crop. The 16 px margin accommodates every translation offset.
constexpr int kEvalShortSide = 256;
constexpr int kEvalCropSize = 224;
Image preprocess_frame(const Image& raw);      // -> 256-short-side frame
Image eval_crop(const Image& frame256);        // -> centered 224x224

}  // namespace natrob
