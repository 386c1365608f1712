#include "natrob/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "natrob/error.hpp"

namespace natrob {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

ConfigValue parse_scalar(const std::string& text) {
  ConfigValue v;
  if (text.size() >= 2 && text.front() == '"' && text.back() == '"') {
    v.kind = ConfigValue::Kind::string;
    v.s = text.substr(1, text.size() - 2);
    return v;
  }
  if (text == "true" || text == "false") {
    v.kind = ConfigValue::Kind::boolean;
    v.b = text == "true";
    return v;
  }
  long long iv = 0;
  auto [ip, iec] = std::from_chars(text.data(), text.data() + text.size(), iv);
  if (iec == std::errc() && ip == text.data() + text.size()) {
    v.kind = ConfigValue::Kind::integer;
    v.i = iv;
    v.d = static_cast<double>(iv);
    return v;
  }
  try {
    size_t pos = 0;
    double dv = std::stod(text, &pos);
    if (pos == text.size()) {
      v.kind = ConfigValue::Kind::floating;
      v.d = dv;
      return v;
    }
  } catch (const std::exception&) {
  }
  v.kind = ConfigValue::Kind::string;
  v.s = text;
  return v;
}

}  // namespace

double ConfigValue::as_number() const {
  switch (kind) {
    case Kind::integer: return static_cast<double>(i);
    case Kind::floating: return d;
    default: fail(ErrorCode::InvalidConfig, "expected a number");
  }
}

std::string ConfigValue::repr() const {
  char buf[48];
  switch (kind) {
    case Kind::string: return "\"" + s + "\"";
    case Kind::integer: return std::to_string(i);
    case Kind::floating:
      std::snprintf(buf, sizeof(buf), "%.17g", d);
      return buf;
    case Kind::boolean: return b ? "true" : "false";
    case Kind::array: {
      std::string out = "[";
      for (size_t k = 0; k < arr.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g", arr[k]);
        if (k) out += ", ";
        out += buf;
      }
      return out + "]";
    }
    case Kind::string_array: {
      std::string out = "[";
      for (size_t k = 0; k < sarr.size(); ++k) {
        if (k) out += ", ";
        out += "\"" + sarr[k] + "\"";
      }
      return out + "]";
    }
  }
  return "";
}

ConfigValue parse_config_value(const std::string& raw) {
  std::string text = trim(raw);
  if (text.empty()) fail(ErrorCode::InvalidConfig, "empty value");
  if (text.front() == '[') {
    if (text.back() != ']') fail(ErrorCode::InvalidConfig, "unterminated array: " + text);
    ConfigValue v;
    std::string inner = text.substr(1, text.size() - 2);
    std::vector<ConfigValue> items;
    std::string tok;
    std::stringstream ss(inner);
    while (std::getline(ss, tok, ',')) {
      tok = trim(tok);
      if (tok.empty()) continue;
      items.push_back(parse_scalar(tok));
    }
    bool strings = std::any_of(items.begin(), items.end(),
                               [](const ConfigValue& x) { return x.kind == ConfigValue::Kind::string; });
    if (strings) {
      v.kind = ConfigValue::Kind::string_array;
      for (auto& it : items) {
        if (it.kind != ConfigValue::Kind::string) fail(ErrorCode::InvalidConfig, "mixed array: " + text);
        v.sarr.push_back(it.s);
      }
    } else {
      v.kind = ConfigValue::Kind::array;
      for (auto& it : items) v.arr.push_back(it.as_number());
    }
    return v;
  }
  return parse_scalar(text);
}

ConfigDoc parse_config_text(const std::string& text) {
  ConfigDoc doc;
  std::stringstream ss(text);
  std::string line;
  std::string section;
  size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorCode::InvalidConfig, "bad section at line " + std::to_string(line_no));
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail(ErrorCode::InvalidConfig, "empty section name");
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::InvalidConfig, "expected key = value at line " + std::to_string(line_no));
    }
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) fail(ErrorCode::InvalidConfig, "empty key at line " + std::to_string(line_no));
    std::string dotted = section.empty() ? key : section + "." + key;
    if (doc.count(dotted)) fail(ErrorCode::InvalidConfig, "duplicate key " + dotted);
    doc[dotted] = parse_config_value(line.substr(eq + 1));
  }
  return doc;
}

ConfigDoc parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::MissingFile, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

namespace {

using Setter = std::function<void(RunConfig&, const ConfigValue&)>;

long long require_int(const ConfigValue& v, const char* key) {
  if (v.kind != ConfigValue::Kind::integer) {
    fail(ErrorCode::InvalidConfig, std::string(key) + " must be an integer");
  }
  return v.i;
}

double require_num(const ConfigValue& v, const char* key) {
  if (v.kind != ConfigValue::Kind::integer && v.kind != ConfigValue::Kind::floating) {
    fail(ErrorCode::InvalidConfig, std::string(key) + " must be a number");
  }
  return v.as_number();
}

std::string require_str(const ConfigValue& v, const char* key) {
  if (v.kind != ConfigValue::Kind::string) {
    fail(ErrorCode::InvalidConfig, std::string(key) + " must be a string");
  }
  return v.s;
}

bool require_bool(const ConfigValue& v, const char* key) {
  if (v.kind != ConfigValue::Kind::boolean) {
    fail(ErrorCode::InvalidConfig, std::string(key) + " must be a boolean");
  }
  return v.b;
}

template <typename T, size_t N>
void require_array(const ConfigValue& v, const char* key, std::array<T, N>& out) {
  if (v.kind != ConfigValue::Kind::array || v.arr.size() != N) {
    fail(ErrorCode::InvalidConfig, std::string(key) + " must be an array of " + std::to_string(N));
  }
  for (size_t i = 0; i < N; ++i) out[i] = static_cast<T>(v.arr[i]);
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"run.output_dir", [](RunConfig& c, const ConfigValue& v) { c.output_dir = require_str(v, "run.output_dir"); }},
      {"run.master_seed", [](RunConfig& c, const ConfigValue& v) { c.master_seed = static_cast<uint64_t>(require_int(v, "run.master_seed")); }},
      {"dataset.manifest", [](RunConfig& c, const ConfigValue& v) { c.manifest_path = require_str(v, "dataset.manifest"); }},
      {"synthetic.num_classes", [](RunConfig& c, const ConfigValue& v) { c.synth.num_classes = static_cast<int>(require_int(v, "synthetic.num_classes")); }},
      {"synthetic.num_shots", [](RunConfig& c, const ConfigValue& v) { c.synth.num_shots = static_cast<int>(require_int(v, "synthetic.num_shots")); }},
      {"synthetic.frames_per_shot", [](RunConfig& c, const ConfigValue& v) { c.synth.frames_per_shot = static_cast<int>(require_int(v, "synthetic.frames_per_shot")); }},
      {"synthetic.frame_size", [](RunConfig& c, const ConfigValue& v) { c.synth.frame_size = static_cast<int>(require_int(v, "synthetic.frame_size")); }},
      {"synthetic.velocity_min", [](RunConfig& c, const ConfigValue& v) { c.synth.velocity_min = require_num(v, "synthetic.velocity_min"); }},
      {"synthetic.velocity_max", [](RunConfig& c, const ConfigValue& v) { c.synth.velocity_max = require_num(v, "synthetic.velocity_max"); }},
      {"synthetic.jitter_sigma", [](RunConfig& c, const ConfigValue& v) { c.synth.jitter_sigma = require_num(v, "synthetic.jitter_sigma"); }},
      {"synthetic.brightness_drift", [](RunConfig& c, const ConfigValue& v) { c.synth.brightness_drift = require_num(v, "synthetic.brightness_drift"); }},
      {"synthetic.split_fractions", [](RunConfig& c, const ConfigValue& v) { require_array(v, "synthetic.split_fractions", c.synth.split_fractions); }},
      {"synthetic.seed", [](RunConfig& c, const ConfigValue& v) { c.synth.seed = static_cast<uint64_t>(require_int(v, "synthetic.seed")); }},
      {"predictor.backend", [](RunConfig& c, const ConfigValue& v) {
         c.backend = require_str(v, "predictor.backend");
         if (c.backend != "builtin" && c.backend != "service" && c.backend != "file") {
           fail(ErrorCode::InvalidConfig, "predictor.backend must be builtin|service|file");
         }
       }},
      {"predictor.checkpoint", [](RunConfig& c, const ConfigValue& v) { c.checkpoint = require_str(v, "predictor.checkpoint"); }},
      {"predictor.model_id", [](RunConfig& c, const ConfigValue& v) { c.model_id = require_str(v, "predictor.model_id"); }},
      {"predictor.endpoint", [](RunConfig& c, const ConfigValue& v) { c.endpoint = require_str(v, "predictor.endpoint"); }},
      {"predictor.predictions", [](RunConfig& c, const ConfigValue& v) { c.predictions_path = require_str(v, "predictor.predictions"); }},
      {"predictor.max_retries", [](RunConfig& c, const ConfigValue& v) { c.max_retries = static_cast<int>(require_int(v, "predictor.max_retries")); }},
      {"predictor.timeout_ms", [](RunConfig& c, const ConfigValue& v) { c.timeout_ms = static_cast<int>(require_int(v, "predictor.timeout_ms")); }},
      {"distortions.families", [](RunConfig& c, const ConfigValue& v) {
         if (v.kind != ConfigValue::Kind::string_array) {
           fail(ErrorCode::InvalidConfig, "distortions.families must be a string array");
         }
         c.families.clear();
         for (const auto& name : v.sarr) {
           Family f;
           if (!parse_family(name, f)) fail(ErrorCode::InvalidConfig, "unknown family " + name);
           c.families.push_back(f);
         }
       }},
      {"distortions.seeds_per_cell", [](RunConfig& c, const ConfigValue& v) { c.seeds_per_cell = static_cast<int>(require_int(v, "distortions.seeds_per_cell")); }},
      {"distortions.gaussian_noise_sigma", [](RunConfig& c, const ConfigValue& v) { require_array(v, "distortions.gaussian_noise_sigma", c.severity_table.gaussian_noise_sigma); }},
      {"distortions.shot_noise_lambda", [](RunConfig& c, const ConfigValue& v) { require_array(v, "distortions.shot_noise_lambda", c.severity_table.shot_noise_lambda); }},
      {"distortions.gaussian_blur_sigma", [](RunConfig& c, const ConfigValue& v) { require_array(v, "distortions.gaussian_blur_sigma", c.severity_table.gaussian_blur_sigma); }},
      {"distortions.pixelate_factor", [](RunConfig& c, const ConfigValue& v) { require_array(v, "distortions.pixelate_factor", c.severity_table.pixelate_factor); }},
      {"distortions.jpeg_quality", [](RunConfig& c, const ConfigValue& v) { require_array(v, "distortions.jpeg_quality", c.severity_table.jpeg_quality); }},
      {"distortions.hue_shift_deg", [](RunConfig& c, const ConfigValue& v) { require_array(v, "distortions.hue_shift_deg", c.severity_table.hue_shift_deg); }},
      {"distortions.saturation_factor", [](RunConfig& c, const ConfigValue& v) { require_array(v, "distortions.saturation_factor", c.severity_table.saturation_factor); }},
      {"distortions.brightness_delta", [](RunConfig& c, const ConfigValue& v) { require_array(v, "distortions.brightness_delta", c.severity_table.brightness_delta); }},
      {"distortions.contrast_factor", [](RunConfig& c, const ConfigValue& v) { require_array(v, "distortions.contrast_factor", c.severity_table.contrast_factor); }},
      {"distortions.translation_offset_px", [](RunConfig& c, const ConfigValue& v) { require_array(v, "distortions.translation_offset_px", c.severity_table.translation_offset_px); }},
      {"metrics.pooling", [](RunConfig& c, const ConfigValue& v) {
         c.pooling = require_str(v, "metrics.pooling");
         if (c.pooling != "signed" && c.pooling != "magnitude" && c.pooling != "both") {
           fail(ErrorCode::InvalidConfig, "metrics.pooling must be signed|magnitude|both");
         }
       }},
      {"analysis.epsilon", [](RunConfig& c, const ConfigValue& v) { c.analysis.epsilon = require_num(v, "analysis.epsilon"); }},
      {"analysis.offset", [](RunConfig& c, const ConfigValue& v) { c.analysis.offset = static_cast<int>(require_int(v, "analysis.offset")); }},
      {"analysis.sample_cap", [](RunConfig& c, const ConfigValue& v) { c.analysis.sample_cap = static_cast<size_t>(require_int(v, "analysis.sample_cap")); }},
      {"analysis.raw_frames", [](RunConfig& c, const ConfigValue& v) { c.analysis.raw_frames = require_bool(v, "analysis.raw_frames"); }},
      {"trainer.technique", [](RunConfig& c, const ConfigValue& v) {
         if (!parse_technique(require_str(v, "trainer.technique"), c.trainer.technique)) {
           fail(ErrorCode::InvalidConfig, "unknown technique " + v.s);
         }
       }},
      {"trainer.lambda", [](RunConfig& c, const ConfigValue& v) { c.trainer.lambda = require_num(v, "trainer.lambda"); }},
      {"trainer.eps_ls", [](RunConfig& c, const ConfigValue& v) { c.trainer.eps_ls = require_num(v, "trainer.eps_ls"); }},
      {"trainer.pgd_epsilon", [](RunConfig& c, const ConfigValue& v) { c.trainer.pgd.epsilon = require_num(v, "trainer.pgd_epsilon"); }},
      {"trainer.pgd_steps", [](RunConfig& c, const ConfigValue& v) { c.trainer.pgd.steps = static_cast<int>(require_int(v, "trainer.pgd_steps")); }},
      {"trainer.pgd_step_size", [](RunConfig& c, const ConfigValue& v) { c.trainer.pgd.step_size = require_num(v, "trainer.pgd_step_size"); }},
      {"trainer.lr", [](RunConfig& c, const ConfigValue& v) { c.trainer.lr = require_num(v, "trainer.lr"); }},
      {"trainer.epochs", [](RunConfig& c, const ConfigValue& v) { c.trainer.epochs = static_cast<int>(require_int(v, "trainer.epochs")); }},
      {"trainer.batch_size", [](RunConfig& c, const ConfigValue& v) { c.trainer.batch_size = static_cast<int>(require_int(v, "trainer.batch_size")); }},
      {"trainer.seed", [](RunConfig& c, const ConfigValue& v) { c.trainer.seed = static_cast<uint64_t>(require_int(v, "trainer.seed")); }},
      {"trainer.hidden", [](RunConfig& c, const ConfigValue& v) { c.hidden_size = static_cast<int>(require_int(v, "trainer.hidden")); }},
      {"report.baseline_model", [](RunConfig& c, const ConfigValue& v) { c.baseline_model = require_str(v, "report.baseline_model"); }},
  };
  return table;
}

}  // namespace

RunConfig RunConfig::from_doc(const ConfigDoc& doc) {
  RunConfig c;
  c.families.assign(kAllFamilies.begin(), kAllFamilies.end());
  const auto& table = setters();
  for (const auto& [key, value] : doc) {
    auto it = table.find(key);
    if (it == table.end()) fail(ErrorCode::InvalidConfig, "unknown config key: " + key);
    it->second(c, value);
  }
  c.severity_table.validate();
  if (c.seeds_per_cell < 1) fail(ErrorCode::InvalidConfig, "seeds_per_cell must be >= 1");
  return c;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  return from_doc(parse_config_file(path));
}

void RunConfig::apply_override(const std::string& dotted_key, const std::string& value_text) {
  const auto& table = setters();
  auto it = table.find(dotted_key);
  if (it == table.end()) fail(ErrorCode::InvalidConfig, "unknown config key: " + dotted_key);
  it->second(*this, parse_config_value(value_text));
  severity_table.validate();
}

std::string RunConfig::resolved_text() const {
  std::ostringstream out;
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  auto arr = [&num](const auto& a) {
    std::string s = "[";
    for (size_t i = 0; i < a.size(); ++i) {
      if (i) s += ", ";
      s += num(static_cast<double>(a[i]));
    }
    return s + "]";
  };
  out << "# resolved configuration (" << kToolVersion << ")\n";
  out << "[run]\n";
  out << "output_dir = \"" << output_dir.string() << "\"\n";
  out << "master_seed = " << master_seed << "\n";
  out << "\n[dataset]\n";
  out << "manifest = \"" << manifest_path.string() << "\"\n";
  out << "\n[synthetic]\n";
  out << "num_classes = " << synth.num_classes << "\n";
  out << "num_shots = " << synth.num_shots << "\n";
  out << "frames_per_shot = " << synth.frames_per_shot << "\n";
  out << "frame_size = " << synth.frame_size << "\n";
  out << "velocity_min = " << num(synth.velocity_min) << "\n";
  out << "velocity_max = " << num(synth.velocity_max) << "\n";
  out << "jitter_sigma = " << num(synth.jitter_sigma) << "\n";
  out << "brightness_drift = " << num(synth.brightness_drift) << "\n";
  out << "split_fractions = " << arr(synth.split_fractions) << "\n";
  out << "seed = " << synth.seed << "\n";
  out << "\n[predictor]\n";
  out << "backend = \"" << backend << "\"\n";
  out << "checkpoint = \"" << checkpoint.string() << "\"\n";
  out << "model_id = \"" << model_id << "\"\n";
  out << "endpoint = \"" << endpoint << "\"\n";
  out << "predictions = \"" << predictions_path.string() << "\"\n";
  out << "max_retries = " << max_retries << "\n";
  out << "timeout_ms = " << timeout_ms << "\n";
  out << "\n[distortions]\n";
  out << "families = [";
  for (size_t i = 0; i < families.size(); ++i) {
    if (i) out << ", ";
    out << "\"" << family_name(families[i]) << "\"";
  }
  out << "]\n";
  out << "seeds_per_cell = " << seeds_per_cell << "\n";
  out << "gaussian_noise_sigma = " << arr(severity_table.gaussian_noise_sigma) << "\n";
  out << "shot_noise_lambda = " << arr(severity_table.shot_noise_lambda) << "\n";
  out << "gaussian_blur_sigma = " << arr(severity_table.gaussian_blur_sigma) << "\n";
  out << "pixelate_factor = " << arr(severity_table.pixelate_factor) << "\n";
  out << "jpeg_quality = " << arr(severity_table.jpeg_quality) << "\n";
  out << "hue_shift_deg = " << arr(severity_table.hue_shift_deg) << "\n";
  out << "saturation_factor = " << arr(severity_table.saturation_factor) << "\n";
  out << "brightness_delta = " << arr(severity_table.brightness_delta) << "\n";
  out << "contrast_factor = " << arr(severity_table.contrast_factor) << "\n";
  out << "translation_offset_px = " << arr(severity_table.translation_offset_px) << "\n";
  out << "\n[metrics]\n";
  out << "pooling = \"" << pooling << "\"\n";
  out << "\n[analysis]\n";
  out << "epsilon = " << num(analysis.epsilon) << "\n";
  out << "offset = " << analysis.offset << "\n";
  out << "sample_cap = " << analysis.sample_cap << "\n";
  out << "raw_frames = " << (analysis.raw_frames ? "true" : "false") << "\n";
  out << "\n[trainer]\n";
  out << "technique = \"" << technique_name(trainer.technique) << "\"\n";
  out << "lambda = " << num(trainer.lambda) << "\n";
  out << "eps_ls = " << num(trainer.eps_ls) << "\n";
  out << "pgd_epsilon = " << num(trainer.pgd.epsilon) << "\n";
  out << "pgd_steps = " << trainer.pgd.steps << "\n";
  out << "pgd_step_size = " << num(trainer.pgd.step_size) << "\n";
  out << "lr = " << num(trainer.lr) << "\n";
  out << "epochs = " << trainer.epochs << "\n";
  out << "batch_size = " << trainer.batch_size << "\n";
  out << "seed = " << trainer.seed << "\n";
  out << "hidden = " << hidden_size << "\n";
  out << "\n[report]\n";
  out << "baseline_model = \"" << baseline_model << "\"\n";
  return out.str();
}

}  // namespace natrob
