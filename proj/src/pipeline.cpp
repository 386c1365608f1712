#include "natrob/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "natrob/adversarial.hpp"
#include "natrob/error.hpp"
#include "natrob/image_io.hpp"
#include "natrob/rng.hpp"
#include "natrob/svg.hpp"

namespace natrob {

namespace {

std::string fmt17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

}  // namespace

Batch build_features(const FrameManifest& manifest, Split split, bool random_crop, uint64_t seed) {
  Batch batch;
  for (const auto& e : manifest.entries) {
    if (e.split != split) continue;
    Image frame = preprocess_frame(load_image(manifest.resolve(e.anchor_path)));
    Image cropped;
    if (random_crop) {
      CounterRng rng(CounterRng::derive_key({seed, CounterRng::hash_string(e.shot_id), 0xc409ULL}));
      int x0 = static_cast<int>(rng.next_u64() % static_cast<uint64_t>(frame.width - kEvalCropSize + 1));
      int y0 = static_cast<int>(rng.next_u64() % static_cast<uint64_t>(frame.height - kEvalCropSize + 1));
      cropped = crop(frame, x0, y0, kEvalCropSize, kEvalCropSize);
    } else {
      cropped = eval_crop(frame);
    }
    batch.x.push_back(featurize(cropped));
    batch.y.push_back(e.label);
  }
  return batch;
}

std::vector<FrameTask> enumerate_tasks(const FrameManifest& manifest, const ManifestEntry& e,
                                       const PredictOptions& options) {
  const int m = options.seeds_per_cell;
  if (m < 1) fail(ErrorCode::InvalidConfig, "seeds_per_cell must be >= 1");
  Image frame256 = preprocess_frame(load_image(manifest.resolve(e.anchor_path)));
  Image clean = eval_crop(frame256);

  std::vector<FrameTask> tasks;
  tasks.push_back({{"natural", 0}, 0, 0, -1, clean});
  if (options.include_neighbors) {
    for (const auto& [k, path] : e.neighbors) {
      Image nb = eval_crop(preprocess_frame(load_image(manifest.resolve(path))));
      tasks.push_back({{"natural", k}, k, 0, -1, std::move(nb)});
    }
  }
  for (Family f : options.families) {
    for (int sev = 1; sev <= 5; ++sev) {
      if (family_is_stochastic(f)) {
        for (int s = 0; s < m; ++s) {
          uint64_t seed = distortion_seed(
              CounterRng::derive_key({options.master_seed, static_cast<uint64_t>(s)}), e.shot_id, f, sev);
          DistortionSpec spec{f, sev, seed};
          tasks.push_back({{family_name(f), sev}, 0, seed, s, apply(spec, clean, options.severity_table)});
        }
      } else {
        DistortionSpec spec{f, sev, 0};
        const Image& input = f == Family::translation ? frame256 : clean;
        tasks.push_back({{family_name(f), sev}, 0, 0, -1, apply(spec, input, options.severity_table)});
      }
    }
  }
  return tasks;
}

namespace {

void insert_record(std::vector<PredictionTable>& replicates, const std::string& model_id,
                   const std::string& shot_id, const FrameTask& task, std::vector<double> logits) {
  PredictionRecord rec;
  rec.model_id = model_id;
  rec.shot_id = shot_id;
  rec.frame_offset = task.frame_offset;
  rec.transform = task.transform;
  rec.seed = task.seed;
  rec.predicted_label = argmax_lowest(logits);
  rec.logits = std::move(logits);
  if (task.replicate < 0) {
    for (auto& table : replicates) table.insert(rec);
  } else {
    replicates[static_cast<size_t>(task.replicate)].insert(rec);
  }
}

}  // namespace

std::vector<PredictionTable> predict_builtin_dataset(
    const FrameManifest& manifest, const std::vector<std::pair<std::string, const MLPModel*>>& models,
    const PredictOptions& options) {
  if (models.empty()) fail(ErrorCode::EmptyInput, "no models to evaluate");
  std::vector<PredictionTable> replicates(options.seeds_per_cell);
  for (const auto& e : manifest.entries) {
    if (e.split != options.split) continue;
    auto tasks = enumerate_tasks(manifest, e, options);
    std::vector<std::vector<double>> features;
    features.reserve(tasks.size());
    for (const auto& t : tasks) features.push_back(featurize(t.image));
    for (const auto& [model_id, model] : models) {
      for (size_t i = 0; i < tasks.size(); ++i) {
        insert_record(replicates, model_id, e.shot_id, tasks[i], forward(*model, features[i]));
      }
    }
  }
  return replicates;
}

std::vector<PredictionTable> predict_service_dataset(const FrameManifest& manifest,
                                                     const std::string& model_id,
                                                     const std::string& endpoint,
                                                     const PredictOptions& options,
                                                     const ServiceOptions& service,
                                                     std::vector<PredictionTable>* partial) {
  std::vector<PredictionTable> local;
  std::vector<PredictionTable>& replicates = partial ? *partial : local;
  replicates.assign(static_cast<size_t>(options.seeds_per_cell), PredictionTable{});
  for (const auto& e : manifest.entries) {
    if (e.split != options.split) continue;
    auto tasks = enumerate_tasks(manifest, e, options);
    std::vector<Image> frames;
    frames.reserve(tasks.size());
    for (const auto& t : tasks) frames.push_back(t.image);
    auto logits = query_service(endpoint, frames, service);
    for (size_t i = 0; i < tasks.size(); ++i) {
      insert_record(replicates, model_id, e.shot_id, tasks[i], std::move(logits[i]));
    }
  }
  return replicates;
}

namespace {

struct FamilySeverityStats {
  RobustnessResult first;  // counts from replicate 0
  double r_mean = 0.0, r_min = 1.0, r_max = 0.0;
};

// transforms present in a table besides "natural"
std::vector<std::pair<std::string, std::set<int>>> distortion_transforms(const PredictionTable& t) {
  std::map<std::string, std::set<int>> fams;
  for (const auto& [key, rec] : t.records()) {
    if (key.transform.family != "natural") fams[key.transform.family].insert(key.transform.severity);
  }
  return {fams.begin(), fams.end()};
}

std::set<int> natural_offsets(const PredictionTable& t) {
  std::set<int> out;
  for (const auto& [key, rec] : t.records()) {
    if (key.transform.family == "natural" && key.transform.severity != 0) {
      out.insert(key.transform.severity);
    }
  }
  return out;
}

}  // namespace

void write_report(const std::filesystem::path& out_dir,
                  const std::vector<PredictionTable>& replicates,
                  const FrameManifest& full_manifest, const ReportOptions& options) {
  if (replicates.empty()) fail(ErrorCode::EmptyInput, "no prediction tables");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + out_dir.string());

  const PredictionTable& base = replicates.front();
  auto model_ids = base.model_ids();
  if (model_ids.empty()) fail(ErrorCode::MissingPredictions, "prediction tables are empty");

  // scope the metrics to the shots the predictions actually cover (the tables
  // typically hold one split of the manifest)
  std::set<std::string> covered;
  for (const auto& [key, rec] : base.records()) covered.insert(key.shot_id);
  FrameManifest scoped;
  scoped.num_classes = full_manifest.num_classes;
  scoped.base_dir = full_manifest.base_dir;
  for (const auto& e : full_manifest.entries) {
    if (covered.count(e.shot_id)) scoped.entries.push_back(e);
  }
  const FrameManifest& manifest = scoped;
  auto families = distortion_transforms(base);
  auto offsets = natural_offsets(base);

  // --- robustness per (model, family, severity) ---
  std::map<std::string, std::map<std::string, std::map<int, FamilySeverityStats>>> cells;
  {
    auto out = open_out(out_dir / "robustness_cells.csv");
    out << "model_id,family,severity,numerator,denominator,r_mean,r_min,r_max,n_replicates\n";
    for (const auto& model : model_ids) {
      for (const auto& [family, severities] : families) {
        for (int sev : severities) {
          FamilySeverityStats st;
          st.first = conditional_robustness(base, manifest, {family, sev}, model);
          double sum = 0.0;
          st.r_min = 1.0;
          st.r_max = 0.0;
          for (const auto& rep : replicates) {
            double r = conditional_robustness(rep, manifest, {family, sev}, model).r_value();
            sum += r;
            st.r_min = std::min(st.r_min, r);
            st.r_max = std::max(st.r_max, r);
          }
          st.r_mean = sum / static_cast<double>(replicates.size());
          out << model << ',' << family << ',' << sev << ',' << st.first.numerator << ','
              << st.first.denominator << ',' << fmt17(st.r_mean) << ',' << fmt17(st.r_min) << ','
              << fmt17(st.r_max) << ',' << replicates.size() << "\n";
          cells[model][family][sev] = st;
        }
      }
    }
  }

  // --- natural robustness vs offset ---
  std::map<std::string, OffsetCurve> curves;
  {
    auto out = open_out(out_dir / "offset_curve.csv");
    out << "model_id,pooling,offset,delta_ms,numerator,denominator,r_value\n";
    for (const auto& model : model_ids) {
      OffsetCurve curve;
      if (offsets.size() == 10) {
        curve = robustness_vs_offset(base, manifest, model);
      } else {
        for (int k : offsets) {
          curve.signed_points.emplace(k, conditional_robustness(base, manifest, {"natural", k}, model));
        }
        for (int k : offsets) {
          if (k < 0) continue;
          auto neg = curve.signed_points.find(-k);
          if (neg == curve.signed_points.end()) continue;
          RobustnessResult pooled;
          pooled.transform = {"natural", k};
          pooled.model_id = model;
          pooled.numerator = curve.signed_points.at(k).numerator + neg->second.numerator;
          pooled.denominator = curve.signed_points.at(k).denominator + neg->second.denominator;
          curve.magnitude_points.emplace(k, pooled);
        }
      }
      if (options.pooling != "magnitude") {
        for (const auto& [k, r] : curve.signed_points) {
          out << model << ",signed," << k << ',' << fmt17(k * kFrameStepMs) << ',' << r.numerator
              << ',' << r.denominator << ',' << fmt17(r.r_value()) << "\n";
        }
      }
      if (options.pooling != "signed") {
        for (const auto& [k, r] : curve.magnitude_points) {
          out << model << ",magnitude," << k << ',' << fmt17(k * kFrameStepMs) << ',' << r.numerator
              << ',' << r.denominator << ',' << fmt17(r.r_value()) << "\n";
        }
      }
      curves[model] = std::move(curve);
    }
  }

  // per-model scalar robustness per transform (severity-averaged; natural
  // pools magnitude bins)
  std::map<std::string, std::map<std::string, double>> per_model;
  for (const auto& model : model_ids) {
    auto& mm = per_model[model];
    for (const auto& [family, severities] : families) {
      double sum = 0.0;
      int n = 0;
      for (int sev : severities) {
        sum += cells[model][family][sev].r_mean;
        ++n;
      }
      if (n > 0) mm[family] = sum / n;
    }
    const auto& curve = curves[model];
    if (!curve.magnitude_points.empty()) {
      double sum = 0.0;
      for (const auto& [k, r] : curve.magnitude_points) sum += r.r_value();
      mm["natural"] = sum / static_cast<double>(curve.magnitude_points.size());
    }
  }

  // --- severity averages (only transforms with a full 5-severity grid) ---
  {
    auto out = open_out(out_dir / "severity_averages.csv");
    out << "model_id,family,avg_r\n";
    for (const auto& model : model_ids) {
      for (const auto& [family, severities] : families) {
        if (severities.size() != 5) continue;
        std::vector<RobustnessResult> rs;
        for (int sev : severities) rs.push_back(cells[model][family][sev].first);
        out << model << ',' << family << ',' << fmt17(average_over_severity(rs)) << "\n";
      }
    }
  }

  // --- accuracy vs robustness scatter data ---
  std::map<std::string, double> accuracies;
  {
    auto out = open_out(out_dir / "accuracy_vs_robustness.csv");
    out << "model_id,transform,clean_accuracy,robustness\n";
    for (const auto& model : model_ids) {
      accuracies[model] = clean_accuracy(base, manifest, model);
      for (const auto& [transform, r] : per_model[model]) {
        out << model << ',' << transform << ',' << fmt17(accuracies[model]) << ',' << fmt17(r) << "\n";
      }
    }
  }

  // --- correlation matrix (needs >= 2 models) ---
  std::vector<std::string> transform_order;
  std::vector<std::vector<CorrelationCell>> matrix;
  if (model_ids.size() >= 2) {
    matrix = correlation_matrix(per_model, &transform_order);
    auto out = open_out(out_dir / "correlation_matrix.csv");
    out << "transform_a,transform_b,pearson_r,n_models\n";
    for (const auto& row : matrix) {
      for (const auto& cell : row) {
        out << cell.transform_a << ',' << cell.transform_b << ','
            << (cell.pearson ? fmt17(*cell.pearson) : "") << ',' << cell.n_models << "\n";
      }
    }
  } else {
    auto out = open_out(out_dir / "correlation_notice.txt");
    out << "correlation matrix omitted: needs at least 2 models, got " << model_ids.size() << "\n";
  }

  // --- SVG plots ---
  {
    std::vector<svg::Series> series;
    for (const auto& model : model_ids) {
      svg::Series s;
      s.name = model;
      s.color = "";
      for (const auto& [k, r] : curves[model].magnitude_points) {
        s.points.emplace_back(k * kFrameStepMs, r.r_value());
      }
      series.push_back(std::move(s));
    }
    svg::ChartOptions opt;
    opt.title = "Natural robustness vs temporal offset";
    opt.x_label = "|delta t| (ms)";
    opt.y_label = "conditional robustness";
    auto out = open_out(out_dir / "robustness_vs_offset.svg");
    out << svg::render_chart(series, opt);
  }
  {
    std::set<std::string> transforms;
    for (const auto& [model, mm] : per_model) {
      for (const auto& [t, r] : mm) transforms.insert(t);
    }
    std::vector<svg::Series> series;
    for (const auto& t : transforms) {
      svg::Series s;
      s.name = t;
      s.color = "";
      s.line = false;
      for (const auto& model : model_ids) {
        auto it = per_model[model].find(t);
        if (it != per_model[model].end()) s.points.emplace_back(accuracies[model], it->second);
      }
      series.push_back(std::move(s));
    }
    svg::ChartOptions opt;
    opt.title = "Accuracy vs robustness";
    opt.x_label = "clean accuracy";
    opt.y_label = "robustness (severity-averaged)";
    auto out = open_out(out_dir / "accuracy_vs_robustness.svg");
    out << svg::render_chart(series, opt);
  }
  if (!matrix.empty()) {
    std::vector<std::vector<std::optional<double>>> values(transform_order.size());
    for (size_t i = 0; i < matrix.size(); ++i) {
      for (const auto& cell : matrix[i]) values[i].push_back(cell.pearson);
    }
    auto out = open_out(out_dir / "correlation_heatmap.svg");
    out << svg::render_heatmap(transform_order, values, "Robustness-type correlation");
  }
  if (!options.baseline_model.empty()) {
    auto bit = per_model.find(options.baseline_model);
    if (bit == per_model.end() || !bit->second.count("natural")) {
      fail(ErrorCode::MissingPredictions, "baseline model " + options.baseline_model +
                                              " has no natural-robustness predictions");
    }
    double base_r = bit->second.at("natural");
    double base_acc = accuracies.at(options.baseline_model);
    {
      auto out = open_out(out_dir / "technique_comparison.csv");
      out << "model_id,clean_accuracy,natural_robustness,baseline_robustness,acc_delta_pp,flagged\n";
      for (const auto& model : model_ids) {
        auto it = per_model[model].find("natural");
        if (it == per_model[model].end()) continue;
        double delta_pp = (accuracies[model] - base_acc) * 100.0;
        bool flagged = delta_pp < -1.2;  // accuracy-preservation gate
        out << model << ',' << fmt17(accuracies[model]) << ',' << fmt17(it->second) << ','
            << fmt17(base_r) << ',' << fmt17(delta_pp) << ',' << (flagged ? "yes" : "no") << "\n";
      }
    }
    {
      std::vector<svg::Series> series;
      for (const auto& model : model_ids) {
        auto it = per_model[model].find("natural");
        if (it == per_model[model].end()) continue;
        svg::Series s;
        s.name = model;
        s.color = "";
        s.line = false;
        s.points.emplace_back(base_r, it->second);
        series.push_back(std::move(s));
      }
      svg::ChartOptions opt;
      opt.title = "Technique vs baseline natural robustness";
      opt.x_label = "baseline robustness";
      opt.y_label = "technique robustness";
      opt.equality_line = true;
      auto out = open_out(out_dir / "technique_vs_baseline.svg");
      out << svg::render_chart(series, opt);
    }
  }

  // --- JSON bundle ---
  {
    nlohmann::json j;
    j["tool"] = kToolVersion;
    j["models"] = model_ids;
    j["num_replicates"] = replicates.size();
    for (const auto& [model, mm] : per_model) {
      for (const auto& [t, r] : mm) j["robustness"][model][t] = r;
      j["clean_accuracy"][model] = accuracies[model];
    }
    auto out = open_out(out_dir / "report.json");
    out << j.dump(2) << "\n";
  }
}

void write_provenance(const std::filesystem::path& out_dir, const RunConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + out_dir.string());
  auto out = open_out(out_dir / "config.resolved.toml");
  out << config.resolved_text();
  auto v = open_out(out_dir / "VERSION");
  v << kToolVersion << "\n";
}

}  // namespace natrob
