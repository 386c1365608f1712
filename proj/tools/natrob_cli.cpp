#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "natrob/adversarial.hpp"
#include "natrob/config.hpp"
#include "natrob/dataset.hpp"
#include "natrob/distortions.hpp"
#include "natrob/error.hpp"
#include "natrob/image_io.hpp"
#include "natrob/metrics.hpp"
#include "natrob/mlp.hpp"
#include "natrob/pipeline.hpp"
#include "natrob/predictor.hpp"
#include "natrob/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace natrob;

namespace {

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidSeverity:
    case ErrorCode::ParseError:
    case ErrorCode::SchemaViolation:
    case ErrorCode::BadFractions:
    case ErrorCode::InvalidOffset:
    case ErrorCode::WrongArity:
    case ErrorCode::LengthMismatch:
      return 1;
    default:
      return 2;
  }
}

[[noreturn]] void die(ErrorCode code, const std::string& msg) {
  json err;
  err["error"] = to_string(code);
  err["message"] = msg;
  std::cerr << err.dump() << "\n";
  std::exit(exit_code_for(code));
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::string manifest;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "TOML config file");
  cmd->add_option("--set", flags.overrides, "override a config key (section.key=value)");
  cmd->add_option("-o,--out", flags.out_dir, "output directory (overrides run.output_dir)");
  cmd->add_option("--manifest", flags.manifest, "manifest CSV (overrides dataset.manifest)");
}

RunConfig resolve_config(const CommonFlags& flags) {
  RunConfig cfg = flags.config_path.empty() ? RunConfig{} : RunConfig::from_file(flags.config_path);
  for (const auto& o : flags.overrides) {
    auto eq = o.find('=');
    if (eq == std::string::npos) fail(ErrorCode::InvalidConfig, "--set expects key=value, got '" + o + "'");
    cfg.apply_override(o.substr(0, eq), o.substr(eq + 1));
  }
  if (!flags.out_dir.empty()) cfg.output_dir = flags.out_dir;
  if (!flags.manifest.empty()) cfg.manifest_path = flags.manifest;
  return cfg;
}

FrameManifest require_manifest(const RunConfig& cfg) {
  if (cfg.manifest_path.empty()) fail(ErrorCode::InvalidConfig, "no manifest configured (dataset.manifest)");
  return load_manifest(cfg.manifest_path);
}

void prepare_out(const RunConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  write_provenance(cfg.output_dir, cfg);
}

json severity_param(Family f, int severity, const SeverityTable& t) {
  if (severity == 0) return nullptr;
  const int i = severity - 1;
  switch (f) {
    case Family::gaussian_noise: return t.gaussian_noise_sigma[i];
    case Family::shot_noise: return t.shot_noise_lambda[i];
    case Family::gaussian_blur: return t.gaussian_blur_sigma[i];
    case Family::pixelate: return t.pixelate_factor[i];
    case Family::jpeg_quality: return t.jpeg_quality[i];
    case Family::hue: return t.hue_shift_deg[i];
    case Family::saturation: return t.saturation_factor[i];
    case Family::brightness: return t.brightness_delta[i];
    case Family::contrast: return t.contrast_factor[i];
    case Family::translation: return t.translation_offset_px[i];
  }
  return nullptr;
}

// ---- distort ----------------------------------------------------------------

struct DistortArgs {
  CommonFlags common;
  std::string family = "gaussian_noise";
  int severity = 1;
  uint64_t seed = 0;
  std::string direction = "+x";
  std::vector<std::string> inputs;
};

void cmd_distort(const DistortArgs& a) {
  RunConfig cfg = resolve_config(a.common);
  Family family;
  if (!parse_family(a.family, family)) fail(ErrorCode::InvalidConfig, "unknown family '" + a.family + "'");
  if (a.severity < 0 || a.severity > 5) {
    fail(ErrorCode::InvalidSeverity, "severity must be in 0..5, got " + std::to_string(a.severity));
  }
  Direction dir;
  if (!parse_direction(a.direction, dir)) {
    fail(ErrorCode::InvalidConfig, "unknown direction '" + a.direction + "'");
  }
  prepare_out(cfg);

  for (const auto& input : a.inputs) {
    fs::path in(input);
    fs::path out_png = cfg.output_dir / in.filename();
    if (a.severity == 0 && family != Family::translation) {
      // identity: preserve the input bytes exactly
      fs::copy_file(in, out_png, fs::copy_options::overwrite_existing);
    } else {
      Image img = load_image(in);
      DistortionSpec spec{family, a.severity, a.seed, dir};
      write_png(apply(spec, img, cfg.severity_table), out_png);
    }
    json sidecar;
    sidecar["input"] = in.filename().string();
    sidecar["family"] = family_name(family);
    sidecar["severity"] = a.severity;
    sidecar["seed"] = a.seed;
    sidecar["parameter"] = severity_param(family, a.severity, cfg.severity_table);
    if (family == Family::translation) sidecar["direction"] = direction_name(dir);
    sidecar["tool_version"] = kToolVersion;
    fs::path out_json = out_png;
    out_json.replace_extension(".distort.json");
    std::ofstream f(out_json, std::ios::binary);
    f << sidecar.dump(2) << "\n";
    if (!f) fail(ErrorCode::IoError, "cannot write " + out_json.string());
  }
}

// ---- gen-synthetic ----------------------------------------------------------

void cmd_gen_synthetic(const CommonFlags& common) {
  RunConfig cfg = resolve_config(common);
  prepare_out(cfg);
  FrameManifest m = generate_synthetic(cfg.synth, cfg.output_dir);
  std::cout << "shots=" << m.entries.size() << " classes=" << m.num_classes << "\n";
}

// ---- train-ref --------------------------------------------------------------

void cmd_train_ref(const CommonFlags& common) {
  RunConfig cfg = resolve_config(common);
  FrameManifest manifest = require_manifest(cfg);
  prepare_out(cfg);

  Batch train_set = build_features(manifest, Split::train, true, cfg.trainer.seed);
  Batch val_set = build_features(manifest, Split::val, false, cfg.trainer.seed);
  MLPModel init = make_mlp({kFeatureDim, cfg.hidden_size, manifest.num_classes}, cfg.trainer.seed);
  TrainResult result = train(init, train_set, val_set, cfg.trainer);

  fs::path model_path = cfg.output_dir / (cfg.model_id + ".model.json");
  save_model(result.model, model_path);
  save_train_log(result.log, cfg.output_dir / (cfg.model_id + ".train_log.csv"));
  double val_acc = result.log.empty() ? accuracy(result.model, val_set) : result.log.back().val_accuracy;
  std::cout << "model=" << model_path.string() << " val_accuracy=" << fmt17(val_acc) << "\n";
}

// ---- predict ----------------------------------------------------------------

struct PredictArgs {
  CommonFlags common;
  std::string split = "test";
  std::vector<std::string> models;  // id=path pairs for the builtin backend
  bool no_neighbors = false;
};

void save_replicates(const std::vector<PredictionTable>& replicates, const fs::path& out_dir,
                     const std::string& stem) {
  if (replicates.size() == 1) {
    save_predictions(replicates[0], out_dir / (stem + ".csv"));
  } else {
    for (size_t k = 0; k < replicates.size(); ++k) {
      save_predictions(replicates[k], out_dir / (stem + "_s" + std::to_string(k) + ".csv"));
    }
  }
}

void cmd_predict(const PredictArgs& a) {
  RunConfig cfg = resolve_config(a.common);
  FrameManifest manifest = require_manifest(cfg);
  prepare_out(cfg);

  PredictOptions options;
  options.families = cfg.families;
  options.seeds_per_cell = cfg.seeds_per_cell;
  options.master_seed = cfg.master_seed;
  options.severity_table = cfg.severity_table;
  options.include_neighbors = !a.no_neighbors;
  if (!parse_split(a.split, options.split)) {
    fail(ErrorCode::InvalidConfig, "unknown split '" + a.split + "'");
  }

  if (cfg.backend == "builtin") {
    std::vector<std::pair<std::string, MLPModel>> loaded;
    if (a.models.empty()) {
      if (cfg.checkpoint.empty()) fail(ErrorCode::InvalidConfig, "no checkpoint configured");
      loaded.emplace_back(cfg.model_id, load_model(cfg.checkpoint));
    } else {
      for (const auto& spec : a.models) {
        auto eq = spec.find('=');
        if (eq == std::string::npos) {
          fail(ErrorCode::InvalidConfig, "--model expects id=path, got '" + spec + "'");
        }
        loaded.emplace_back(spec.substr(0, eq), load_model(spec.substr(eq + 1)));
      }
    }
    std::vector<std::pair<std::string, const MLPModel*>> models;
    for (const auto& [id, m] : loaded) models.emplace_back(id, &m);
    auto replicates = predict_builtin_dataset(manifest, models, options);
    save_replicates(replicates, cfg.output_dir, "predictions");
  } else if (cfg.backend == "service") {
    if (cfg.endpoint.empty()) fail(ErrorCode::InvalidConfig, "no endpoint configured");
    ServiceOptions service{cfg.max_retries, cfg.timeout_ms};
    std::vector<PredictionTable> partial;
    try {
      auto replicates =
          predict_service_dataset(manifest, cfg.model_id, cfg.endpoint, options, service, &partial);
      save_replicates(replicates, cfg.output_dir, "predictions");
    } catch (const Error&) {
      save_replicates(partial, cfg.output_dir, "predictions_partial");
      throw;
    }
  } else {
    fail(ErrorCode::InvalidConfig, "predict supports backends 'builtin' and 'service', got '" +
                                       cfg.backend + "'");
  }
}

// ---- report -----------------------------------------------------------------

std::vector<PredictionTable> group_replicates(const std::vector<std::string>& csvs) {
  static const std::regex suffix(R"(_s(\d+)\.csv$)");
  std::map<int, std::vector<std::string>> by_replicate;
  for (const auto& path : csvs) {
    std::smatch m;
    int k = std::regex_search(path, m, suffix) ? std::stoi(m[1]) : 0;
    by_replicate[k].push_back(path);
  }
  int expected = 0;
  for (const auto& [k, paths] : by_replicate) {
    if (k != expected++) fail(ErrorCode::InvalidConfig, "replicate indices must be contiguous from 0");
  }
  std::vector<PredictionTable> replicates;
  for (const auto& [k, paths] : by_replicate) {
    PredictionTable merged;
    for (const auto& p : paths) {
      PredictionTable loaded = load_predictions(p);
      for (const auto& [key, rec] : loaded.records()) merged.insert(rec);
    }
    replicates.push_back(std::move(merged));
  }
  return replicates;
}

void write_distance_outputs(const fs::path& out_dir, std::vector<DistanceSample>& samples,
                            const AnalysisConfig& ac, size_t decode_failures) {
  std::vector<double> linfs;
  for (const auto& s : samples) linfs.push_back(s.linf);
  EmpiricalCdf cdf(linfs);
  DistanceSummary summary = summarize(samples, ac);

  {
    std::ofstream f(out_dir / "distances.csv", std::ios::binary);
    f << "shot_id,delta_ms,linf,brittle\n";
    for (const auto& s : samples) {
      f << s.pair.shot_id << "," << fmt17(s.pair.delta_ms) << "," << s.linf << ","
        << (s.brittle ? (*s.brittle ? "1" : "0") : "") << "\n";
    }
  }
  {
    std::ofstream f(out_dir / "cdf.csv", std::ios::binary);
    f << "threshold,fraction\n";
    for (const auto& [t, p] : cdf.table()) f << fmt17(t) << "," << fmt17(p) << "\n";
  }
  {
    json js;
    js["mean"] = summary.mean;
    js["stddev"] = summary.stddev;
    js["fraction_within_epsilon"] = summary.fraction_within_epsilon;
    if (summary.brittle_fraction_within_epsilon) {
      js["brittle_fraction_within_epsilon"] = *summary.brittle_fraction_within_epsilon;
    } else {
      js["brittle_fraction_within_epsilon"] = nullptr;
    }
    js["n_samples"] = summary.n_samples;
    js["n_brittle"] = summary.n_brittle;
    js["epsilon"] = ac.epsilon;
    js["offset"] = ac.offset;
    js["decode_failures"] = decode_failures;
    std::ofstream f(out_dir / "distance_summary.json", std::ios::binary);
    f << js.dump(2) << "\n";
  }
  {
    svg::ChartOptions opts;
    opts.title = "L-inf distance CDF, offset " + std::to_string(ac.offset);
    opts.x_label = "L-inf distance (8-bit)";
    opts.y_label = "fraction of pairs";
    std::ofstream f(out_dir / "distance_cdf.svg", std::ios::binary);
    f << svg::render_step_chart(cdf.table(), opts);
  }
}

struct ReportArgs {
  CommonFlags common;
  std::vector<std::string> csvs;
};

void cmd_report(const ReportArgs& a) {
  RunConfig cfg = resolve_config(a.common);
  FrameManifest manifest = require_manifest(cfg);
  prepare_out(cfg);

  auto replicates = group_replicates(a.csvs);
  ReportOptions opts;
  opts.baseline_model = cfg.baseline_model;
  opts.pooling = cfg.pooling;
  write_report(cfg.output_dir, replicates, manifest, opts);

  // Fig 6 analogue: distance CDF over the neighbor pairs, when frames resolve.
  try {
    std::set<std::string> covered;
    for (const auto& [key, rec] : replicates[0].records()) covered.insert(key.shot_id);
    FrameManifest scoped;
    scoped.num_classes = manifest.num_classes;
    scoped.base_dir = manifest.base_dir;
    for (const auto& e : manifest.entries) {
      if (covered.count(e.shot_id)) scoped.entries.push_back(e);
    }
    std::vector<FramePair> pairs = pairs_at_offset(scoped, cfg.analysis.offset);
    auto neg = pairs_at_offset(scoped, -cfg.analysis.offset);
    pairs.insert(pairs.end(), neg.begin(), neg.end());
    if (pairs.size() > cfg.analysis.sample_cap) pairs.resize(cfg.analysis.sample_cap);
    auto stats = pair_distances(pairs, scoped, cfg.analysis.raw_frames);
    std::string brittle_model =
        cfg.baseline_model.empty() ? replicates[0].model_ids().front() : cfg.baseline_model;
    try {
      mark_brittle(stats.samples, replicates[0], scoped, brittle_model);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MissingPredictions) throw;
    }
    write_distance_outputs(cfg.output_dir, stats.samples, cfg.analysis, stats.decode_failures);
  } catch (const Error& e) {
    std::ofstream f(cfg.output_dir / "distance_notice.txt", std::ios::binary);
    f << "distance analysis skipped: " << e.what() << "\n";
  }
}

// ---- adv-analysis -----------------------------------------------------------

struct AdvArgs {
  CommonFlags common;
  std::string predictions;
};

void cmd_adv_analysis(const AdvArgs& a) {
  RunConfig cfg = resolve_config(a.common);
  FrameManifest manifest = require_manifest(cfg);
  prepare_out(cfg);

  PredictionTable table;
  if (!a.predictions.empty()) {
    table = load_predictions(a.predictions);
    std::set<std::string> covered;
    for (const auto& [key, rec] : table.records()) covered.insert(key.shot_id);
    FrameManifest scoped;
    scoped.num_classes = manifest.num_classes;
    scoped.base_dir = manifest.base_dir;
    for (const auto& e : manifest.entries) {
      if (covered.count(e.shot_id)) scoped.entries.push_back(e);
    }
    manifest = std::move(scoped);
  }

  std::vector<FramePair> pairs = pairs_at_offset(manifest, cfg.analysis.offset);
  auto neg = pairs_at_offset(manifest, -cfg.analysis.offset);
  pairs.insert(pairs.end(), neg.begin(), neg.end());
  if (pairs.size() > cfg.analysis.sample_cap) pairs.resize(cfg.analysis.sample_cap);
  auto stats = pair_distances(pairs, manifest, cfg.analysis.raw_frames);

  if (!a.predictions.empty()) {
    mark_brittle(stats.samples, table, manifest, cfg.model_id);
  }
  write_distance_outputs(cfg.output_dir, stats.samples, cfg.analysis, stats.decode_failures);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"natural robustness toolkit"};
  app.require_subcommand(1);

  DistortArgs distort_args;
  auto* distort = app.add_subcommand("distort", "apply one distortion to PNG/JPEG images");
  add_common(distort, distort_args.common);
  distort->add_option("--family", distort_args.family, "distortion family");
  distort->add_option("--severity", distort_args.severity, "severity level 0..5");
  distort->add_option("--seed", distort_args.seed, "stream seed for stochastic families");
  distort->add_option("--direction", distort_args.direction, "translation direction (+x,-x,+y,-y)");
  distort->add_option("inputs", distort_args.inputs, "input images")->required();

  CommonFlags gen_args;
  auto* gen = app.add_subcommand("gen-synthetic", "render the synthetic video dataset");
  add_common(gen, gen_args);

  CommonFlags train_args;
  auto* train_cmd = app.add_subcommand("train-ref", "train a reference classifier");
  add_common(train_cmd, train_args);

  PredictArgs predict_args;
  auto* predict = app.add_subcommand("predict", "classify anchors, neighbors, and distorted frames");
  add_common(predict, predict_args.common);
  predict->add_option("--split", predict_args.split, "dataset split (train|val|test)");
  predict->add_option("--model", predict_args.models, "builtin model as id=path (repeatable)");
  predict->add_flag("--no-neighbors", predict_args.no_neighbors, "skip natural neighbor frames");

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "emit CSV tables and SVG plots from predictions");
  add_common(report, report_args.common);
  report->add_option("csvs", report_args.csvs, "prediction CSVs (replicates via _s<k> suffix)")
      ->required();

  AdvArgs adv_args;
  auto* adv = app.add_subcommand("adv-analysis", "frame-pair distance analysis");
  add_common(adv, adv_args.common);
  adv->add_option("--predictions", adv_args.predictions, "prediction CSV for brittle-pair marking");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    json err;
    err["error"] = to_string(ErrorCode::InvalidConfig);
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  }

  try {
    if (*distort) cmd_distort(distort_args);
    if (*gen) cmd_gen_synthetic(gen_args);
    if (*train_cmd) cmd_train_ref(train_args);
    if (*predict) cmd_predict(predict_args);
    if (*report) cmd_report(report_args);
    if (*adv) cmd_adv_analysis(adv_args);
  } catch (const Error& e) {
    die(e.code(), e.what());
  } catch (const std::exception& e) {
    die(ErrorCode::IoError, e.what());
  }
  return 0;
}
