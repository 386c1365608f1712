#pragma once

#include <optional>
#include <vector>

#include "natrob/dataset.hpp"
#include "natrob/metrics.hpp"

namespace natrob {

struct DistanceSample {
  FramePair pair;
  int linf = 0;
  std::optional<bool> brittle;  // set by mark_brittle
};

struct AnalysisConfig {
  double epsilon = 16.0;   // L-inf radius in 8-bit units
  int offset = 1;          // pair offset index
  size_t sample_cap = 10000;
  bool raw_frames = false;  // skip canonical preprocessing when true
};

struct PairDistanceStats {
  std::vector<DistanceSample> samples;
  size_t decode_failures = 0;
};

// L-inf distance per pair after canonical evaluation preprocessing (or on raw
// frames). Order-stable; undecodable pairs are skipped and counted.
PairDistanceStats pair_distances(const std::vector<FramePair>& pairs, const FrameManifest& manifest,
                                 bool raw_frames = false);

// brittle = anchor correct and neighbor wrong (one-sided by definition).
void mark_brittle(std::vector<DistanceSample>& samples, const PredictionTable& table,
                  const FrameManifest& manifest, const std::string& model_id);

// Right-continuous empirical CDF.
class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(std::vector<double> values);  // EmptyInput if empty
  double at(double threshold) const;                  // fraction of values <= threshold
  const std::vector<double>& sorted_values() const { return sorted_; }
  // (threshold, fraction) table with one step per distinct value.
  std::vector<std::pair<double, double>> table() const;

 private:
  std::vector<double> sorted_;
};

struct DistanceSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population formula
  double fraction_within_epsilon = 0.0;
  std::optional<double> brittle_fraction_within_epsilon;  // null when no brittle pairs
  size_t n_samples = 0;
  size_t n_brittle = 0;
};

DistanceSummary summarize(const std::vector<DistanceSample>& samples, const AnalysisConfig& config);

}  // namespace natrob
