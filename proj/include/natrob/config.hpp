#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "natrob/adversarial.hpp"
#include "natrob/dataset.hpp"
#include "natrob/distortions.hpp"
#include "natrob/mlp.hpp"

namespace natrob {

// Minimal TOML-style document: [sections] with key = value lines, where value
// is a string, integer, float, boolean, or flat array. Keys are stored dotted
// ("section.key").
struct ConfigValue {
  enum class Kind { string, integer, floating, boolean, array, string_array };
  Kind kind = Kind::string;
  std::string s;
  long long i = 0;
  double d = 0.0;
  bool b = false;
  std::vector<double> arr;
  std::vector<std::string> sarr;

  double as_number() const;
  std::string repr() const;  // round-trippable text form
};

using ConfigDoc = std::map<std::string, ConfigValue>;

ConfigDoc parse_config_text(const std::string& text);
ConfigDoc parse_config_file(const std::filesystem::path& path);
ConfigValue parse_config_value(const std::string& text);

// Declarative run configuration; schema-validated, unknown keys rejected.
struct RunConfig {
  // [run]
  std::filesystem::path output_dir = "out";
  uint64_t master_seed = 1;

  // [dataset]
  std::filesystem::path manifest_path;

  // [synthetic]
  SynthVideoConfig synth;

  // [predictor]
  std::string backend = "builtin";  // builtin | service | file
  std::filesystem::path checkpoint;
  std::string model_id = "baseline";
  std::string endpoint;
  std::filesystem::path predictions_path;
  int max_retries = 2;
  int timeout_ms = 10000;

  // [distortions]
  std::vector<Family> families;  // default: all ten
  int seeds_per_cell = 1;
  SeverityTable severity_table;

  // [metrics]
  std::string pooling = "both";  // signed | magnitude | both

  // [analysis]
  AnalysisConfig analysis;

  // [trainer]
  TrainConfig trainer;
  int hidden_size = 64;

  // [report]
  std::string baseline_model;

  static RunConfig from_doc(const ConfigDoc& doc);
  static RunConfig from_file(const std::filesystem::path& path);
  void apply_override(const std::string& dotted_key, const std::string& value_text);

  // Deterministic dump of every effective value (written alongside outputs).
  std::string resolved_text() const;
};

constexpr const char* kToolVersion = "natrob 1.0.0";

}  // namespace natrob
