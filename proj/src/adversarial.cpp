#include "natrob/adversarial.hpp"

#include <algorithm>
#include <cmath>

#include "natrob/error.hpp"
#include "natrob/image_io.hpp"

namespace natrob {

PairDistanceStats pair_distances(const std::vector<FramePair>& pairs, const FrameManifest& manifest,
                                 bool raw_frames) {
  PairDistanceStats stats;
  for (const auto& p : pairs) {
    Image a, b;
    try {
      a = load_image(manifest.resolve(p.anchor_path));
      b = load_image(manifest.resolve(p.other_path));
    } catch (const Error&) {
      ++stats.decode_failures;
      continue;
    }
    if (!raw_frames) {
      a = eval_crop(preprocess_frame(a));
      b = eval_crop(preprocess_frame(b));
    }
    DistanceSample s;
    s.pair = p;
    s.linf = linf_distance(a, b);
    stats.samples.push_back(std::move(s));
  }
  return stats;
}

void mark_brittle(std::vector<DistanceSample>& samples, const PredictionTable& table,
                  const FrameManifest& manifest, const std::string& model_id) {
  std::vector<std::string> missing;
  for (auto& s : samples) {
    const auto* entry = manifest.find_shot(s.pair.shot_id);
    if (!entry) fail(ErrorCode::MissingPredictions, "shot not in manifest: " + s.pair.shot_id);
    int offset = static_cast<int>(std::lround(s.pair.delta_ms / kFrameStepMs));
    const auto* anchor = table.find({model_id, s.pair.shot_id, {"natural", 0}});
    const auto* neighbor = table.find({model_id, s.pair.shot_id, {"natural", offset}});
    if (!anchor) missing.push_back("(" + model_id + ", " + s.pair.shot_id + ", natural/0)");
    if (!neighbor) {
      missing.push_back("(" + model_id + ", " + s.pair.shot_id + ", natural/" + std::to_string(offset) + ")");
    }
    if (!anchor || !neighbor) continue;
    s.brittle = anchor->predicted_label == entry->label && neighbor->predicted_label != entry->label;
  }
  if (!missing.empty()) {
    std::string msg = "missing " + std::to_string(missing.size()) + " prediction(s): " + missing.front();
    fail(ErrorCode::MissingPredictions, msg);
  }
}

EmpiricalCdf::EmpiricalCdf(std::vector<double> values) : sorted_(std::move(values)) {
  if (sorted_.empty()) fail(ErrorCode::EmptyInput, "cdf of empty sample");
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCdf::at(double threshold) const {
  auto it = std::upper_bound(sorted_.begin(), sorted_.end(), threshold);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

std::vector<std::pair<double, double>> EmpiricalCdf::table() const {
  std::vector<std::pair<double, double>> out;
  for (size_t i = 0; i < sorted_.size(); ++i) {
    if (i + 1 < sorted_.size() && sorted_[i + 1] == sorted_[i]) continue;
    out.emplace_back(sorted_[i], static_cast<double>(i + 1) / static_cast<double>(sorted_.size()));
  }
  return out;
}

DistanceSummary summarize(const std::vector<DistanceSample>& samples, const AnalysisConfig& config) {
  if (samples.empty()) fail(ErrorCode::EmptyInput, "no distance samples");
  if (config.epsilon < 0.0) fail(ErrorCode::InvalidConfig, "epsilon must be >= 0");
  DistanceSummary out;
  out.n_samples = samples.size();
  double sum = 0.0;
  size_t within = 0;
  size_t brittle_within = 0;
  for (const auto& s : samples) {
    sum += s.linf;
    if (s.linf <= config.epsilon) ++within;
    if (s.brittle.value_or(false)) {
      ++out.n_brittle;
      if (s.linf <= config.epsilon) ++brittle_within;
    }
  }
  out.mean = sum / static_cast<double>(samples.size());
  double var = 0.0;
  for (const auto& s : samples) {
    double d = s.linf - out.mean;
    var += d * d;
  }
  out.stddev = std::sqrt(var / static_cast<double>(samples.size()));  // population formula
  out.fraction_within_epsilon = static_cast<double>(within) / static_cast<double>(samples.size());
  if (out.n_brittle > 0) {
    out.brittle_fraction_within_epsilon =
        static_cast<double>(brittle_within) / static_cast<double>(out.n_brittle);
  }
  return out;
}

}  // namespace natrob
