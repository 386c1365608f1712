#include "natrob/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "natrob/error.hpp"

namespace natrob {

namespace {

const PredictionRecord* require(const PredictionTable& table, const std::string& model_id,
                                const std::string& shot_id, const TransformRef& transform,
                                std::vector<std::string>* missing) {
  const auto* rec = table.find({model_id, shot_id, transform});
  if (!rec && missing) missing->push_back("(" + model_id + ", " + shot_id + ", " + transform.str() + ")");
  return rec;
}

[[noreturn]] void report_missing(const std::vector<std::string>& missing) {
  std::string msg = "missing " + std::to_string(missing.size()) + " prediction(s):";
  for (size_t i = 0; i < missing.size() && i < 10; ++i) msg += " " + missing[i];
  if (missing.size() > 10) msg += " ...";
  fail(ErrorCode::MissingPredictions, msg);
}

const TransformRef kClean{"natural", 0};

}  // namespace

RobustnessResult conditional_robustness(const PredictionTable& table, const FrameManifest& manifest,
                                        const TransformRef& transform, const std::string& model_id) {
  RobustnessResult result;
  result.transform = transform;
  result.model_id = model_id;
  std::vector<std::string> missing;
  for (const auto& e : manifest.entries) {
    const auto* clean = require(table, model_id, e.shot_id, kClean, &missing);
    const auto* transformed = require(table, model_id, e.shot_id, transform, &missing);
    if (!clean || !transformed) continue;
    if (clean->predicted_label == e.label) {
      ++result.denominator;
      if (transformed->predicted_label == e.label) ++result.numerator;
    }
  }
  if (!missing.empty()) report_missing(missing);
  if (result.denominator == 0) {
    fail(ErrorCode::UndefinedConditional, "no anchor classified correctly for model " + model_id);
  }
  return result;
}

double clean_accuracy(const PredictionTable& table, const FrameManifest& manifest,
                      const std::string& model_id) {
  if (manifest.entries.empty()) fail(ErrorCode::EmptyInput, "empty manifest");
  std::vector<std::string> missing;
  long correct = 0;
  for (const auto& e : manifest.entries) {
    const auto* clean = require(table, model_id, e.shot_id, kClean, &missing);
    if (clean && clean->predicted_label == e.label) ++correct;
  }
  if (!missing.empty()) report_missing(missing);
  return static_cast<double>(correct) / static_cast<double>(manifest.entries.size());
}

double relative_drop(const PredictionTable& table, const FrameManifest& manifest,
                     const TransformRef& transform, const std::string& model_id) {
  std::vector<std::string> missing;
  long clean_correct = 0, transformed_correct = 0, n = 0;
  for (const auto& e : manifest.entries) {
    const auto* clean = require(table, model_id, e.shot_id, kClean, &missing);
    const auto* transformed = require(table, model_id, e.shot_id, transform, &missing);
    if (!clean || !transformed) continue;
    ++n;
    if (clean->predicted_label == e.label) ++clean_correct;
    if (transformed->predicted_label == e.label) ++transformed_correct;
  }
  if (!missing.empty()) report_missing(missing);
  if (n == 0) fail(ErrorCode::EmptyInput, "no covered anchors");
  return (static_cast<double>(clean_correct) - static_cast<double>(transformed_correct)) /
         static_cast<double>(n);
}

OffsetCurve robustness_vs_offset(const PredictionTable& table, const FrameManifest& manifest,
                                 const std::string& model_id) {
  OffsetCurve curve;
  for (int k = -5; k <= 5; ++k) {
    if (k == 0) continue;
    auto r = conditional_robustness(table, manifest, {"natural", k}, model_id);
    curve.signed_points.emplace(k, r);
  }
  for (int k = 1; k <= 5; ++k) {
    // pool +-k counts before dividing
    RobustnessResult pooled;
    pooled.transform = {"natural", k};
    pooled.model_id = model_id;
    pooled.numerator = curve.signed_points.at(k).numerator + curve.signed_points.at(-k).numerator;
    pooled.denominator =
        curve.signed_points.at(k).denominator + curve.signed_points.at(-k).denominator;
    curve.magnitude_points.emplace(k, pooled);
  }
  return curve;
}

double average_over_severity(const std::vector<RobustnessResult>& results) {
  if (results.size() != 5) {
    fail(ErrorCode::WrongArity, "expected exactly 5 severities, got " + std::to_string(results.size()));
  }
  double sum = 0.0;
  for (const auto& r : results) sum += r.r_value();
  return sum / 5.0;
}

PearsonResult pearson_r(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) fail(ErrorCode::LengthMismatch, "pearson inputs differ in length");
  const size_t n = xs.size();
  if (n < 2) fail(ErrorCode::LengthMismatch, "pearson needs at least 2 points");
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) fail(ErrorCode::DegenerateVariance, "constant input series");
  double r = sxy / std::sqrt(sxx * syy);
  r = std::clamp(r, -1.0, 1.0);
  return {r, r * r};
}

std::vector<std::vector<CorrelationCell>> correlation_matrix(
    const std::map<std::string, std::map<std::string, double>>& per_model,
    std::vector<std::string>* transform_order) {
  if (per_model.size() < 2) fail(ErrorCode::LengthMismatch, "correlation matrix needs >= 2 models");
  std::set<std::string> transforms;
  for (const auto& [model, values] : per_model) {
    for (const auto& [t, v] : values) transforms.insert(t);
  }
  std::vector<std::string> order(transforms.begin(), transforms.end());
  if (transform_order) *transform_order = order;

  const size_t m = order.size();
  std::vector<std::vector<CorrelationCell>> matrix(m, std::vector<CorrelationCell>(m));
  for (size_t a = 0; a < m; ++a) {
    for (size_t b = 0; b < m; ++b) {
      CorrelationCell cell;
      cell.transform_a = order[a];
      cell.transform_b = order[b];
      std::vector<double> xs, ys;
      for (const auto& [model, values] : per_model) {
        auto ia = values.find(order[a]);
        auto ib = values.find(order[b]);
        if (ia == values.end() || ib == values.end()) continue;
        xs.push_back(ia->second);
        ys.push_back(ib->second);
      }
      cell.n_models = static_cast<int>(xs.size());
      if (cell.n_models >= 2) {
        try {
          cell.pearson = pearson_r(xs, ys).r;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::DegenerateVariance) throw;
        }
      }
      matrix[a][b] = std::move(cell);
    }
  }
  return matrix;
}

}  // namespace natrob
