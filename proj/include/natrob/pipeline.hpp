#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "natrob/config.hpp"
#include "natrob/dataset.hpp"
#include "natrob/metrics.hpp"
#include "natrob/mlp.hpp"
#include "natrob/predictor.hpp"

namespace natrob {

// Featurized classification sets built from a manifest (anchors only).
// Training applies a seeded random 224 crop after the short-side-256 resize;
// evaluation uses the center crop.
Batch build_features(const FrameManifest& manifest, Split split, bool random_crop, uint64_t seed);

struct PredictOptions {
  std::vector<Family> families;  // empty = none
  int seeds_per_cell = 1;
  uint64_t master_seed = 1;
  SeverityTable severity_table;
  Split split = Split::test;
  bool include_neighbors = true;
};

// One frame to classify: the anchor crop under some transform, a neighbor
// frame, or the clean anchor itself.
struct FrameTask {
  TransformRef transform;
  int frame_offset = 0;
  uint64_t seed = 0;
  int replicate = -1;  // -1 = record in every replicate
  Image image;
};

// Clean anchor + natural offsets + the distortion grid for one manifest entry.
std::vector<FrameTask> enumerate_tasks(const FrameManifest& manifest, const ManifestEntry& entry,
                                       const PredictOptions& options);

// Runs the builtin predictor over anchors (clean + natural offsets +
// distortion grid). Distorted frames are featurized once and shared across
// models. Returns one table per stochastic-seed replicate (natural and
// deterministic records are identical across replicates).
std::vector<PredictionTable> predict_builtin_dataset(
    const FrameManifest& manifest, const std::vector<std::pair<std::string, const MLPModel*>>& models,
    const PredictOptions& options);

// Same coverage via the line-protocol model service. When `partial` is given
// it accumulates rows as they arrive, so the caller still holds the completed
// portion if the service dies mid-run.
std::vector<PredictionTable> predict_service_dataset(const FrameManifest& manifest,
                                                     const std::string& model_id,
                                                     const std::string& endpoint,
                                                     const PredictOptions& options,
                                                     const ServiceOptions& service = {},
                                                     std::vector<PredictionTable>* partial = nullptr);

struct ReportOptions {
  std::string baseline_model;  // enables the technique-vs-baseline scatter
  std::string pooling = "both";
};

// Emits CSV tables and SVG plots for every analysis the prediction tables
// cover. Byte-identical across reruns with identical inputs.
void write_report(const std::filesystem::path& out_dir,
                  const std::vector<PredictionTable>& replicates, const FrameManifest& manifest,
                  const ReportOptions& options);

// Writes the resolved config and tool version stamp into out_dir.
void write_provenance(const std::filesystem::path& out_dir, const RunConfig& config);

}  // namespace natrob
