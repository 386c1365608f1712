#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "natrob/image.hpp"
#include "natrob/mlp.hpp"

namespace natrob {

// Transform applied before prediction. family "natural" with severity k means
// the neighbor frame at signed offset k; ("natural", 0) is the clean anchor.
struct TransformRef {
  std::string family = "natural";
  int severity = 0;

  auto operator<=>(const TransformRef&) const = default;
  std::string str() const { return family + "/" + std::to_string(severity); }
};

struct PredictionRecord {
  std::string model_id;
  std::string shot_id;
  int frame_offset = 0;  // 0 = anchor
  TransformRef transform;
  uint64_t seed = 0;  // provenance for stochastic families
  int predicted_label = 0;
  std::vector<double> logits;  // optional, empty when absent
};

struct PredictionKey {
  std::string model_id;
  std::string shot_id;
  TransformRef transform;

  auto operator<=>(const PredictionKey&) const = default;
};

// Immutable after load; keyed by (model_id, shot_id, transform).
class PredictionTable {
 public:
  void insert(PredictionRecord rec);  // DuplicateKey on collision
  const PredictionRecord* find(const PredictionKey& key) const;
  const std::map<PredictionKey, PredictionRecord>& records() const { return records_; }
  std::vector<std::string> model_ids() const;
  size_t size() const { return records_.size(); }
  int num_classes() const { return num_classes_; }
  void set_num_classes(int k);

 private:
  std::map<PredictionKey, PredictionRecord> records_;
  int num_classes_ = 0;  // 0 = unchecked
};

// CSV columns:
// model_id,shot_id,frame_offset,transform_family,severity,seed,predicted_label,logits
// (logits semicolon-joined, optional). Round-trips exactly.
PredictionTable load_predictions(const std::filesystem::path& path, int expected_k = 0);
void save_predictions(const PredictionTable& table, const std::filesystem::path& path);

// Box-resize to 16x16, flatten to 768 unit-interval floats (row-major, RGB
// interleaved). The builtin model's documented featurization.
constexpr int kFeatureSide = 16;
constexpr int kFeatureDim = kFeatureSide * kFeatureSide * 3;
std::vector<double> featurize(const Image& img);

std::vector<double> predict_builtin(const MLPModel& model, const Image& img);

// Newline-delimited JSON over a local TCP socket. Request
// {"id": n, "png_b64": "..."}; response {"id": n, "logits": [...]}.
struct ServiceOptions {
  int max_retries = 2;
  int timeout_ms = 10000;
};

std::vector<std::vector<double>> query_service(const std::string& endpoint,  // host:port
                                               const std::vector<Image>& frames,
                                               const ServiceOptions& options = {});

std::string base64_encode(const std::vector<uint8_t>& data);
std::vector<uint8_t> base64_decode(const std::string& text);

}  // namespace natrob
