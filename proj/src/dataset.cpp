#include "natrob/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "natrob/error.hpp"
#include "natrob/image_io.hpp"
#include "natrob/rng.hpp"

namespace natrob {

namespace {

const char* kSplitNames[3] = {"train", "val", "test"};

const char* kHeader =
    "video_id,shot_id,split,label,anchor_path,n-5,n-4,n-3,n-2,n-1,n+1,n+2,n+3,n+4,n+5";

constexpr int kNeighborOffsets[10] = {-5, -4, -3, -2, -1, 1, 2, 3, 4, 5};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

const char* split_name(Split s) { return kSplitNames[static_cast<int>(s)]; }

bool parse_split(const std::string& name, Split& out) {
  for (int i = 0; i < 3; ++i) {
    if (name == kSplitNames[i]) {
      out = static_cast<Split>(i);
      return true;
    }
  }
  return false;
}

const ManifestEntry* FrameManifest::find_shot(const std::string& shot_id) const {
  for (const auto& e : entries) {
    if (e.shot_id == shot_id) return &e;
  }
  return nullptr;
}

FrameManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::MissingFile, "cannot open manifest " + path.string());

  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::ParseError, "empty manifest");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) {
    fail(ErrorCode::ParseError, "manifest header mismatch (anchors carry no offset-0 column): " + line);
  }

  FrameManifest manifest;
  manifest.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

  std::set<std::string> shot_ids;
  std::map<std::string, Split> video_split;
  int max_label = -1;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 15) {
      fail(ErrorCode::ParseError,
           "line " + std::to_string(line_no) + ": expected 15 fields, got " + std::to_string(fields.size()));
    }
    ManifestEntry e;
    e.video_id = fields[0];
    e.shot_id = fields[1];
    if (e.video_id.empty() || e.shot_id.empty()) {
      fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": empty id");
    }
    if (!parse_split(fields[2], e.split)) {
      fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad split " + fields[2]);
    }
    try {
      size_t pos = 0;
      e.label = std::stoi(fields[3], &pos);
      if (pos != fields[3].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad label " + fields[3]);
    }
    if (e.label < 0) fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": negative label");
    e.anchor_path = fields[4];
    if (e.anchor_path.empty()) fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": no anchor path");
    for (int i = 0; i < 10; ++i) {
      if (!fields[5 + i].empty()) e.neighbors[kNeighborOffsets[i]] = fields[5 + i];
    }

    if (!shot_ids.insert(e.shot_id).second) {
      fail(ErrorCode::SchemaViolation, "duplicate anchor for shot " + e.shot_id);
    }
    auto [it, inserted] = video_split.emplace(e.video_id, e.split);
    if (!inserted && it->second != e.split) {
      fail(ErrorCode::SchemaViolation, "video " + e.video_id + " straddles splits");
    }
    max_label = std::max(max_label, e.label);
    manifest.entries.push_back(std::move(e));
  }
  manifest.num_classes = max_label + 1;
  return manifest;
}

void save_manifest(const FrameManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write manifest " + path.string());
  out << kHeader << "\n";
  for (const auto& e : manifest.entries) {
    out << e.video_id << ',' << e.shot_id << ',' << split_name(e.split) << ',' << e.label << ','
        << e.anchor_path;
    for (int k : kNeighborOffsets) {
      out << ',';
      auto it = e.neighbors.find(k);
      if (it != e.neighbors.end()) out << it->second;
    }
    out << "\n";
  }
}

std::vector<FramePair> pairs_at_offset(const FrameManifest& manifest, int offset) {
  if (offset == 0 || offset < -5 || offset > 5) {
    fail(ErrorCode::InvalidOffset, "offset must be in {-5..-1, +1..+5}");
  }
  std::vector<FramePair> out;
  for (const auto& e : manifest.entries) {
    auto it = e.neighbors.find(offset);
    if (it == e.neighbors.end()) continue;
    out.push_back({e.shot_id, e.anchor_path, it->second, offset * kFrameStepMs, e.label});
  }
  return out;
}

std::map<std::string, Split> split_by_video(const std::vector<std::string>& video_ids,
                                            const std::array<double, 3>& fractions, uint64_t seed) {
  double sum = fractions[0] + fractions[1] + fractions[2];
  if (std::fabs(sum - 1.0) > 1e-9 || fractions[0] < 0 || fractions[1] < 0 || fractions[2] < 0) {
    fail(ErrorCode::BadFractions, "fractions must be non-negative and sum to 1");
  }
  std::map<std::string, Split> out;
  for (const auto& id : video_ids) {
    CounterRng rng(CounterRng::derive_key({seed, CounterRng::hash_string(id), 0x5eedULL}));
    double u = rng.next_double();
    Split s = u < fractions[0] ? Split::train : (u < fractions[0] + fractions[1] ? Split::val : Split::test);
    out[id] = s;
  }
  return out;
}

void SynthVideoConfig::validate() const {
  if (num_classes < 1 || num_classes > 8) fail(ErrorCode::InvalidConfig, "num_classes must be 1..8");
  if (num_shots < 1) fail(ErrorCode::InvalidConfig, "num_shots must be positive");
  if (frames_per_shot < 1 || frames_per_shot % 2 == 0) {
    fail(ErrorCode::InvalidConfig, "frames_per_shot must be odd so an anchor exists");
  }
  if (frame_size < 16) fail(ErrorCode::InvalidConfig, "frame_size too small");
  if (velocity_min < 0 || velocity_max < velocity_min || jitter_sigma < 0 || brightness_drift < 0) {
    fail(ErrorCode::InvalidConfig, "ranges must be non-negative");
  }
}

namespace {

struct ShapeColor {
  float r, g, b;
};
constexpr ShapeColor kPalette[2] = {{0.85f, 0.20f, 0.15f}, {0.15f, 0.30f, 0.85f}};

bool inside_shape(int shape, double dx, double dy, double r) {
  switch (shape & 3) {
    case 0:  // circle
      return dx * dx + dy * dy <= r * r;
    case 1:  // square
      return std::max(std::fabs(dx), std::fabs(dy)) <= r * 0.88;
    case 2: {  // upward triangle
      // vertices (0,-r), (-0.95r, 0.75r), (0.95r, 0.75r)
      if (dy > 0.75 * r) return false;
      double half = 0.95 * r * (dy + r) / (1.75 * r);
      return std::fabs(dx) <= half;
    }
    default:  // diamond
      return std::fabs(dx) + std::fabs(dy) <= r * 1.1;
  }
}

}  // namespace

std::vector<Image> render_shot(const SynthVideoConfig& config, int shot_index, int& label_out) {
  config.validate();
  const int n = config.frames_per_shot;
  const int half = n / 2;
  const int fs = config.frame_size;

  CounterRng rng(CounterRng::derive_key({config.seed, 0x5107ULL, static_cast<uint64_t>(shot_index)}));
  const int label = shot_index % config.num_classes;
  label_out = label;
  const int shape = label % 4;
  const ShapeColor col = kPalette[(label / 4) % 2];

  // Static textured background: per-channel base plus a low-frequency field.
  float base[3];
  for (auto& b : base) b = 0.38f + 0.12f * static_cast<float>(rng.next_double());
  const int grid = 8;
  ImageF texture = ImageF::allocate(grid, grid);
  for (auto& v : texture.data) v = static_cast<float>((rng.next_double() - 0.5) * 0.18);
  ImageF tex = resize(texture, fs, fs, ResizeMode::bilinear);

  const double radius = fs * 0.30 * (0.9 + 0.2 * rng.next_double());
  const double cx0 = fs * 0.5 + (rng.next_double() - 0.5) * fs * 0.25;
  const double cy0 = fs * 0.5 + (rng.next_double() - 0.5) * fs * 0.25;
  const double angle = 2.0 * M_PI * rng.next_double();
  const double speed = config.velocity_min + (config.velocity_max - config.velocity_min) * rng.next_double();
  const double vx = speed * std::cos(angle);
  const double vy = speed * std::sin(angle);

  std::vector<Image> frames;
  frames.reserve(n);
  for (int fi = 0; fi < n; ++fi) {
    const int t = fi - half;  // anchor at t = 0
    const double jx = config.jitter_sigma * rng.next_gaussian();
    const double jy = config.jitter_sigma * rng.next_gaussian();
    const double cx = cx0 + vx * t + jx;
    const double cy = cy0 + vy * t + jy;
    const float shift = static_cast<float>(config.brightness_drift * t);

    ImageF img = ImageF::allocate(fs, fs);
    for (int y = 0; y < fs; ++y) {
      for (int x = 0; x < fs; ++x) {
        // 4x4 supersampled coverage
        int hits = 0;
        for (int sy = 0; sy < 4; ++sy) {
          for (int sx = 0; sx < 4; ++sx) {
            double px = x + (sx + 0.5) / 4.0;
            double py = y + (sy + 0.5) / 4.0;
            if (inside_shape(shape, px - cx, py - cy, radius)) ++hits;
          }
        }
        float cov = hits / 16.0f;
        float t0 = tex.at(x, y, 0);
        float rgb[3] = {base[0] + t0, base[1] + t0, base[2] + t0};
        float sc[3] = {col.r, col.g, col.b};
        for (int c = 0; c < 3; ++c) {
          float v = rgb[c] * (1.0f - cov) + sc[c] * cov + shift;
          img.at(x, y, c) = std::clamp(v, 0.0f, 1.0f);
        }
      }
    }
    frames.push_back(to_u8(img));
  }
  return frames;
}

FrameManifest generate_synthetic(const SynthVideoConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "frames", ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + (out_dir / "frames").string());

  std::vector<std::string> video_ids;
  video_ids.reserve(config.num_shots);
  char buf[32];
  for (int i = 0; i < config.num_shots; ++i) {
    std::snprintf(buf, sizeof(buf), "vid_%04d", i);
    video_ids.emplace_back(buf);
  }
  auto splits = split_by_video(video_ids, config.split_fractions, config.seed);

  FrameManifest manifest;
  manifest.base_dir = out_dir;
  manifest.num_classes = config.num_classes;
  const int half = config.frames_per_shot / 2;

  for (int i = 0; i < config.num_shots; ++i) {
    int label = 0;
    auto frames = render_shot(config, i, label);
    std::snprintf(buf, sizeof(buf), "shot_%04d", i);
    std::string shot_id = buf;
    auto shot_dir = out_dir / "frames" / shot_id;
    std::filesystem::create_directories(shot_dir, ec);
    if (ec) fail(ErrorCode::IoError, "cannot create " + shot_dir.string());

    ManifestEntry e;
    e.video_id = video_ids[i];
    e.shot_id = shot_id;
    e.split = splits.at(e.video_id);
    e.label = label;
    for (int fi = 0; fi < config.frames_per_shot; ++fi) {
      int k = fi - half;
      std::string name = k == 0 ? "anchor.png"
                                : (k < 0 ? "n-" + std::to_string(-k) + ".png"
                                         : "n+" + std::to_string(k) + ".png");
      write_png(frames[fi], shot_dir / name);
      std::string rel = "frames/" + shot_id + "/" + name;
      if (k == 0) {
        e.anchor_path = rel;
      } else if (k >= -5 && k <= 5) {
        e.neighbors[k] = rel;
      }
    }
    manifest.entries.push_back(std::move(e));
  }
  save_manifest(manifest, out_dir / "manifest.csv");
  return manifest;
}

Image preprocess_frame(const Image& raw) { return resize_short_side(raw, kEvalShortSide); }

Image eval_crop(const Image& frame256) { return center_crop(frame256, kEvalCropSize, kEvalCropSize); }

}  // namespace natrob
