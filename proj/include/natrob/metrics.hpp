#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "natrob/dataset.hpp"
#include "natrob/predictor.hpp"

namespace natrob {

// Estimated conditional robustness: r = numerator / denominator where the
// numerator counts anchors correct on both sides and the denominator counts
// anchors correct on the clean frame.
struct RobustnessResult {
  TransformRef transform;
  std::string model_id;
  long numerator = 0;
  long denominator = 0;

  double r_value() const { return static_cast<double>(numerator) / static_cast<double>(denominator); }
};

RobustnessResult conditional_robustness(const PredictionTable& table, const FrameManifest& manifest,
                                        const TransformRef& transform, const std::string& model_id);

// Accuracy drop: P(clean correct) - P(transformed correct), the coarser
// contrast metric.
double relative_drop(const PredictionTable& table, const FrameManifest& manifest,
                     const TransformRef& transform, const std::string& model_id);

double clean_accuracy(const PredictionTable& table, const FrameManifest& manifest,
                      const std::string& model_id);

struct OffsetCurve {
  std::map<int, RobustnessResult> signed_points;       // offset -> result, offsets +-1..+-5
  std::map<int, RobustnessResult> magnitude_points;    // |offset| -> pooled counts
};

OffsetCurve robustness_vs_offset(const PredictionTable& table, const FrameManifest& manifest,
                                 const std::string& model_id);

// Unweighted mean over exactly 5 severities of one family.
double average_over_severity(const std::vector<RobustnessResult>& results);

struct PearsonResult {
  double r;
  double r_squared;
};

PearsonResult pearson_r(const std::vector<double>& xs, const std::vector<double>& ys);

struct CorrelationCell {
  std::string transform_a;
  std::string transform_b;
  std::optional<double> pearson;  // null when fewer than 2 covering models or zero variance
  int n_models = 0;
};

// Symmetric matrix of Pearson r between per-model robustness vectors.
// Input: model_id -> (transform name -> scalar robustness).
std::vector<std::vector<CorrelationCell>> correlation_matrix(
    const std::map<std::string, std::map<std::string, double>>& per_model,
    std::vector<std::string>* transform_order = nullptr);

}  // namespace natrob
