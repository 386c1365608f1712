// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria 9/10/12 share one synthetic dataset and trained models.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

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
#include "natrob/rng.hpp"

using namespace natrob;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

void expect(bool cond, const std::string& msg) {
  if (!cond) throw std::runtime_error(msg);
}

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

const fs::path kRoot = "scratch_acceptance";

void put(PredictionTable& t, const std::string& model, const std::string& shot,
         const TransformRef& tr, int predicted) {
  PredictionRecord rec;
  rec.model_id = model;
  rec.shot_id = shot;
  rec.transform = tr;
  rec.predicted_label = predicted;
  t.insert(std::move(rec));
}

// Smooth textured fixture: low-frequency base plus mild pixel jitter.
Image make_fixture(int size, uint64_t key) {
  CounterRng rng(key);
  Image coarse = Image::allocate(8, 8);
  for (auto& p : coarse.pixels) p = static_cast<uint8_t>(rng.next_u64() % 256);
  Image img = resize(coarse, size, size, ResizeMode::bilinear);
  for (auto& p : img.pixels) {
    int v = int(p) + int(rng.next_u64() % 7) - 3;
    p = static_cast<uint8_t>(std::clamp(v, 0, 255));
  }
  return img;
}

// ---- shared end-to-end fixture ----------------------------------------------

struct Shared {
  FrameManifest manifest;
  Batch train_set, val_set;
  MLPModel baseline;
  double baseline_val_acc = 0.0;
  double build_seconds = 0.0;
};

MLPModel train_model(const Shared& s, const TrainConfig& cfg, double* val_acc = nullptr) {
  MLPModel init = make_mlp({kFeatureDim, 64, s.manifest.num_classes}, cfg.seed);
  TrainResult res = train(init, s.train_set, s.val_set, cfg);
  if (val_acc) *val_acc = res.log.empty() ? 0.0 : res.log.back().val_accuracy;
  return res.model;
}

Shared& shared() {
  static Shared s = [] {
    Shared sh;
    auto t0 = clock_type::now();
    SynthVideoConfig cfg;  // 11 frames, 64 px
    cfg.num_shots = 800;
    sh.manifest = generate_synthetic(cfg, kRoot / "data");
    TrainConfig tc;
    sh.train_set = build_features(sh.manifest, Split::train, true, tc.seed);
    sh.val_set = build_features(sh.manifest, Split::val, false, tc.seed);
    sh.baseline = train_model(sh, tc, &sh.baseline_val_acc);
    sh.build_seconds = seconds_since(t0);
    return sh;
  }();
  return s;
}

// ---- criteria ---------------------------------------------------------------

void criterion_1_metric_oracle() {
  auto t0 = clock_type::now();
  CounterRng rng(101);
  int compared = 0;
  for (int trial = 0; trial < 100; ++trial) {
    int k = 2 + int(rng.next_u64() % 22);
    int n = 10 + int(rng.next_u64() % 40);
    FrameManifest m;
    PredictionTable t;
    long num = 0, den = 0;
    for (int i = 0; i < n; ++i) {
      ManifestEntry e;
      e.video_id = "v" + std::to_string(i);
      e.shot_id = "s" + std::to_string(i);
      e.label = int(rng.next_u64() % uint64_t(k));
      e.anchor_path = "a.png";
      bool clean_ok = i == 0 || rng.next_double() < 0.7;
      bool trans_ok = rng.next_double() < 0.55;
      int wrong = (e.label + 1 + int(rng.next_u64() % uint64_t(k - 1))) % k;
      put(t, "m", e.shot_id, {"natural", 0}, clean_ok ? e.label : wrong);
      put(t, "m", e.shot_id, {"hue", 2}, trans_ok ? e.label : wrong);
      if (clean_ok) {
        ++den;
        if (trans_ok) ++num;
      }
      m.entries.push_back(std::move(e));
    }
    m.num_classes = k;
    auto r = conditional_robustness(t, m, {"hue", 2}, "m");
    expect(r.numerator == num && r.denominator == den, "counts disagree with the oracle");
    expect(r.r_value() == double(num) / double(den), "r is not the exact count ratio");
    ++compared;
  }
  expect(compared == 100, "expected 100 fixtures");
  expect(seconds_since(t0) < 10.0, "oracle comparison exceeded 10 s");
}

void criterion_2_identity_robustness() {
  SynthVideoConfig cfg;
  cfg.num_shots = 10;
  cfg.frames_per_shot = 3;
  cfg.frame_size = 48;
  FrameManifest m = generate_synthetic(cfg, kRoot / "tiny_identity");
  MLPModel model = make_mlp({kFeatureDim, 16, cfg.num_classes}, 3);

  PredictionTable t;
  for (auto& e : m.entries) {
    Image frame256 = preprocess_frame(load_image(m.resolve(e.anchor_path)));
    Image clean = eval_crop(frame256);
    auto logits = predict_builtin(model, clean);
    e.label = argmax_lowest(logits);  // every anchor counts as clean-correct
    put(t, "m", e.shot_id, {"natural", 0}, e.label);
    for (Family f : kAllFamilies) {
      DistortionSpec spec{f, 0, 0};
      const Image& src = f == Family::translation ? frame256 : clean;
      Image out = apply(spec, src);
      put(t, "m", e.shot_id, {family_name(f), 0}, argmax_lowest(predict_builtin(model, out)));
    }
  }
  for (Family f : kAllFamilies) {
    auto r = conditional_robustness(t, m, {family_name(f), 0}, "m");
    expect(r.r_value() == 1.0, std::string("severity 0 broke r = 1 for ") + family_name(f));
    expect(r.denominator == 10, "denominator should cover every anchor");
  }
}

void criterion_3_metric_distinction() {
  FrameManifest m;
  for (int i = 0; i < 10; ++i) {
    ManifestEntry e;
    e.video_id = "v" + std::to_string(i);
    e.shot_id = "s" + std::to_string(i);
    e.label = i % 2;
    e.anchor_path = "a.png";
    m.entries.push_back(std::move(e));
  }
  m.num_classes = 2;
  PredictionTable t;
  for (int i = 0; i < 10; ++i) {
    const auto& e = m.entries[i];
    bool clean_ok = i < 8;
    bool a_ok = i < 6;        // 6 correct, all among the clean-correct
    bool b_ok = i >= 4;       // 6 correct, only 4 among the clean-correct
    put(t, "m", e.shot_id, {"natural", 0}, clean_ok ? e.label : 1 - e.label);
    put(t, "m", e.shot_id, {"hue", 1}, a_ok ? e.label : 1 - e.label);
    put(t, "m", e.shot_id, {"contrast", 1}, b_ok ? e.label : 1 - e.label);
  }
  double drop_a = relative_drop(t, m, {"hue", 1}, "m");
  double drop_b = relative_drop(t, m, {"contrast", 1}, "m");
  expect(drop_a == drop_b, "relative drops should coincide");
  double ra = conditional_robustness(t, m, {"hue", 1}, "m").r_value();
  double rb = conditional_robustness(t, m, {"contrast", 1}, "m").r_value();
  expect(std::abs(ra - rb) >= 0.2, "conditional robustness should separate the transforms");
}

void criterion_4_determinism_and_monotonicity() {
  auto t0 = clock_type::now();
  std::vector<Image> fixtures;
  for (int i = 0; i < 50; ++i) fixtures.push_back(make_fixture(64, 900 + i));
  Image frame = make_fixture(96, 990);
  CropGeometry geom{64, 64};

  for (Family f : kAllFamilies) {
    DistortionSpec spec{f, 3, 12345};
    const Image& src = f == Family::translation ? frame : fixtures[0];
    Image a = apply(spec, src, {}, geom);
    Image b = apply(spec, src, {}, geom);
    expect(a == b, std::string("rerun differs for ") + family_name(f));
  }

  for (Family f : kAllFamilies) {
    if (f == Family::translation) continue;  // periodic content, exempted
    double prev = -1.0;
    for (int sev = 1; sev <= 5; ++sev) {
      double sum = 0.0;
      for (size_t i = 0; i < fixtures.size(); ++i) {
        DistortionSpec spec{f, sev, distortion_seed(7, "fix" + std::to_string(i), f, sev)};
        sum += l2_rms_distance(fixtures[i], apply(spec, fixtures[i]));
      }
      double mean = sum / double(fixtures.size());
      expect(mean > prev, std::string("mean L2 not strictly increasing for ") + family_name(f) +
                              " at severity " + std::to_string(sev));
      prev = mean;
    }
  }
  expect(seconds_since(t0) < 60.0, "distortion sweep exceeded 60 s");
}

void criterion_5_translation_exactness() {
  SeverityTable table;
  CropGeometry geom{64, 64};
  for (uint64_t trial = 0; trial < 3; ++trial) {
    Image frame = make_fixture(96, 500 + trial);
    int cx = (frame.width - geom.width) / 2;
    int cy = (frame.height - geom.height) / 2;
    for (int sev = 1; sev <= 5; ++sev) {
      int off = table.translation_offset_px[sev - 1];
      for (Direction d : {Direction::pos_x, Direction::neg_x, Direction::pos_y, Direction::neg_y}) {
        int dx = d == Direction::pos_x ? off : d == Direction::neg_x ? -off : 0;
        int dy = d == Direction::pos_y ? off : d == Direction::neg_y ? -off : 0;
        Image out = apply_translation(sev, d, frame, geom, table);
        Image ref = crop(frame, cx + dx, cy + dy, geom.width, geom.height);
        expect(out == ref, "shifted crop is not a bit-exact subregion (offset " +
                               std::to_string(off) + ")");
      }
    }
  }
}

// Low-saturation texture: shared luma base with a small per-channel tint, so
// chroma subsampling does not dominate the codec error.
Image make_jpeg_fixture(int size, uint64_t key) {
  CounterRng rng(key);
  Image coarse = Image::allocate(8, 8);
  for (int i = 0; i < 64; ++i) {
    int luma = int(rng.next_u64() % 256);
    for (int c = 0; c < 3; ++c) {
      int v = luma + int(rng.next_u64() % 33) - 16;
      coarse.pixels[size_t(i) * 3 + c] = static_cast<uint8_t>(std::clamp(v, 0, 255));
    }
  }
  Image img = resize(coarse, size, size, ResizeMode::bilinear);
  for (auto& p : img.pixels) {
    int v = int(p) + int(rng.next_u64() % 5) - 2;
    p = static_cast<uint8_t>(std::clamp(v, 0, 255));
  }
  return img;
}

void criterion_6_jpeg_behavior() {
  SeverityTable table;
  for (int i = 0; i < 50; ++i) {
    Image img = make_jpeg_fixture(64, 700 + i);
    auto bytes = encode_jpeg(img, 95);
    Image back = decode_jpeg(bytes.data(), bytes.size());
    expect(psnr(img, back) > 40.0, "PSNR at q=95 fell to or below 40 dB");
    double prev = std::numeric_limits<double>::infinity();
    for (int sev = 1; sev <= 5; ++sev) {
      double p = psnr(img, apply_jpeg(sev, img, table));
      expect(p <= prev + 1e-9, "PSNR increased between severities");
      prev = p;
    }
  }
}

double eval_loss(const MLPModel& m, const Batch& b, const TrainConfig& cfg,
                 const std::vector<std::vector<double>>* x_adv) {
  if (x_adv) return loss_and_grad_fixed_adv(m, b, *x_adv, cfg).first;
  return loss_and_grad(m, b, cfg).first;
}

double min_preactivation(const MLPModel& m, const std::vector<std::vector<double>>& xs) {
  double best = std::numeric_limits<double>::infinity();
  int in = m.sizes[0], hid = m.sizes[1];
  for (const auto& x : xs) {
    for (int j = 0; j < hid; ++j) {
      double z = m.biases[0][j];
      for (int i = 0; i < in; ++i) z += m.weights[0][size_t(j) * in + i] * x[i];
      best = std::min(best, std::abs(z));
    }
  }
  return best;
}

void fd_check_technique(const TrainConfig& cfg, int trials) {
  const double h = 1e-5;
  for (int trial = 0; trial < trials; ++trial) {
    MLPModel m;
    Batch batch;
    std::vector<std::vector<double>> x_adv;
    bool alp = cfg.technique == Technique::adversarial_logit_pairing;
    uint64_t seed = 4000 + uint64_t(trial) * 37 + uint64_t(cfg.technique) * 1000;
    for (int attempt = 0;; ++attempt) {
      expect(attempt < 50, "could not find a kink-free fixture");
      m = make_mlp({6, 5, 4}, seed + uint64_t(attempt));
      CounterRng rng(seed * 3 + uint64_t(attempt));
      batch.x.assign(6, std::vector<double>(6));
      batch.y.resize(6);
      for (int s = 0; s < 6; ++s) {
        for (auto& v : batch.x[s]) v = rng.next_double();
        batch.y[s] = int(rng.next_u64() % 4);
      }
      if (min_preactivation(m, batch.x) < 1e-3) continue;
      if (alp) {
        x_adv.clear();
        for (int s = 0; s < 6; ++s) x_adv.push_back(pgd_attack(m, batch.x[s], batch.y[s], cfg.pgd));
        if (min_preactivation(m, x_adv) < 1e-3) continue;
      }
      break;
    }
    const auto* adv = alp ? &x_adv : nullptr;
    MLPModel grad = alp ? loss_and_grad_fixed_adv(m, batch, x_adv, cfg).second
                        : loss_and_grad(m, batch, cfg).second;
    for (size_t l = 0; l < m.num_layers(); ++l) {
      for (int which = 0; which < 2; ++which) {
        auto& params = which == 0 ? m.weights[l] : m.biases[l];
        const auto& grads = which == 0 ? grad.weights[l] : grad.biases[l];
        for (size_t i = 0; i < params.size(); ++i) {
          double saved = params[i];
          params[i] = saved + h;
          double up = eval_loss(m, batch, cfg, adv);
          params[i] = saved - h;
          double down = eval_loss(m, batch, cfg, adv);
          params[i] = saved;
          double fd = (up - down) / (2.0 * h);
          double rel = std::abs(grads[i] - fd) / std::max({1.0, std::abs(grads[i]), std::abs(fd)});
          expect(rel <= 1e-4, std::string("gradient check failed for ") +
                                  technique_name(cfg.technique) + " (rel " + std::to_string(rel) + ")");
        }
      }
    }
  }
}

void criterion_7_gradient_checks() {
  auto with = [](Technique t, double lambda, double eps_ls) {
    TrainConfig cfg;
    cfg.technique = t;
    cfg.lambda = lambda;
    cfg.eps_ls = eps_ls;
    return cfg;
  };
  fd_check_technique(with(Technique::weight_decay, 0.3, 0.0), 20);
  fd_check_technique(with(Technique::label_smoothing, 0.0, 0.2), 20);
  fd_check_technique(with(Technique::clean_logit_pairing, 0.5, 0.0), 20);
  fd_check_technique(with(Technique::clean_logit_squeezing, 0.4, 0.0), 20);
  TrainConfig alp = with(Technique::adversarial_logit_pairing, 0.5, 0.0);
  alp.pgd = {0.05, 3, 0.03};
  fd_check_technique(alp, 20);
  fd_check_technique(with(Technique::sigmoid_multiclass, 0.0, 0.0), 20);
}

void criterion_8_pgd_contract() {
  PgdParams pgd{0.07, 5, 0.04};
  for (uint64_t trial = 0; trial < 20; ++trial) {
    MLPModel m = make_mlp({8, 6, 3}, 600 + trial);
    CounterRng rng(700 + trial);
    std::vector<double> x(8);
    for (auto& v : x) v = rng.next_double();
    int y = int(rng.next_u64() % 3);
    auto adv = pgd_attack(m, x, y, pgd);
    for (size_t i = 0; i < x.size(); ++i) {
      expect(std::abs(adv[i] - x[i]) <= pgd.epsilon + 1e-12, "iterate left the epsilon ball");
      expect(adv[i] >= 0.0 && adv[i] <= 1.0, "iterate left [0,1]");
    }
    expect(cross_entropy(m, adv, y) >= cross_entropy(m, x, y) - 1e-12,
           "cross entropy decreased under PGD");
  }

  // closed form on a linear model: step toward sign(w_other - w_true)
  MLPModel lin;
  lin.sizes = {3, 2};
  lin.weights = {{0.8, -0.3, 0.0, -0.2, 0.5, 0.0}};
  lin.biases = {{0.0, 0.0}};
  PgdParams p{0.1, 5, 0.06};
  std::vector<double> x(3, 0.5);
  auto adv = pgd_attack(lin, x, 0, p);
  std::vector<double> expected = {0.4, 0.6, 0.5};
  for (int i = 0; i < 3; ++i) {
    expect(std::abs(adv[i] - expected[i]) <= 1e-12, "linear closed form disagrees");
  }
}

FrameManifest split_only(const FrameManifest& m, Split split) {
  FrameManifest out;
  out.num_classes = m.num_classes;
  out.base_dir = m.base_dir;
  for (const auto& e : m.entries) {
    if (e.split == split) out.entries.push_back(e);
  }
  return out;
}

std::map<int, double> natural_magnitude_curve(const PredictionTable& t, const FrameManifest& m,
                                              const std::string& model) {
  std::map<int, double> out;
  for (const auto& [k, r] : robustness_vs_offset(t, m, model).magnitude_points) {
    out[k] = r.r_value();
  }
  return out;
}

void criterion_9_end_to_end() {
  auto t0 = clock_type::now();
  Shared& s = shared();
  expect(int(s.manifest.entries.size()) >= 400, "dataset smaller than 400 shots");
  expect(s.baseline_val_acc >= 0.90,
         "baseline val accuracy " + std::to_string(s.baseline_val_acc) + " below 0.90");

  PredictOptions opts;
  opts.split = Split::test;
  auto replicates =
      predict_builtin_dataset(s.manifest, {{"baseline", &s.baseline}}, opts);
  FrameManifest test_m = split_only(s.manifest, Split::test);
  auto curve = natural_magnitude_curve(replicates.front(), test_m, "baseline");
  expect(curve.size() == 5, "expected five |offset| bins");
  expect(curve.at(1) >= curve.at(5) + 0.01, "r(66.7 ms) does not exceed r(333.3 ms) by 0.01");
  std::vector<double> seq = {1.0, curve.at(1), curve.at(2), curve.at(3), curve.at(4), curve.at(5)};
  int monotone = 0;
  for (size_t i = 0; i + 1 < seq.size(); ++i) {
    if (seq[i] >= seq[i + 1]) ++monotone;
  }
  expect(monotone >= 4, "monotone trend holds in only " + std::to_string(monotone) + "/5 bin pairs");
  expect(s.build_seconds + seconds_since(t0) < 600.0, "end-to-end run exceeded 10 minutes");
}

void criterion_10_correlation_pipeline() {
  Shared& s = shared();
  std::vector<std::pair<std::string, MLPModel>> models;
  models.emplace_back("baseline", s.baseline);
  int epoch_grid[] = {3, 6, 10, 15, 22};
  for (int i = 0; i < 5; ++i) {
    TrainConfig tc;
    tc.epochs = epoch_grid[i];
    tc.seed = 11 + uint64_t(i);
    models.emplace_back("ref_e" + std::to_string(epoch_grid[i]), train_model(s, tc));
  }
  std::vector<std::pair<std::string, const MLPModel*>> refs;
  for (const auto& [id, m] : models) refs.emplace_back(id, &m);

  PredictOptions opts;
  opts.split = Split::test;
  opts.families = {Family::gaussian_noise, Family::hue, Family::translation};
  auto table = predict_builtin_dataset(s.manifest, refs, opts).front();
  FrameManifest test_m = split_only(s.manifest, Split::test);

  std::map<std::string, std::map<std::string, double>> per_model;
  for (const auto& [id, m] : models) {
    auto& mm = per_model[id];
    for (Family f : opts.families) {
      std::vector<RobustnessResult> rs;
      for (int sev = 1; sev <= 5; ++sev) {
        rs.push_back(conditional_robustness(table, test_m, {family_name(f), sev}, id));
      }
      mm[family_name(f)] = average_over_severity(rs);
    }
    double sum = 0.0;
    auto curve = natural_magnitude_curve(table, test_m, id);
    for (const auto& [k, r] : curve) sum += r;
    mm["natural"] = sum / double(curve.size());
  }

  std::vector<std::string> order;
  auto matrix = correlation_matrix(per_model, &order);
  expect(order.size() == 4, "expected four transform rows");
  for (size_t i = 0; i < order.size(); ++i) {
    expect(matrix[i][i].pearson && std::abs(*matrix[i][i].pearson - 1.0) <= 1e-12,
           "diagonal is not 1");
    for (size_t j = 0; j < order.size(); ++j) {
      expect(matrix[i][j].n_models == 6, "cell does not cover all six models");
      expect(matrix[i][j].pearson.has_value() == matrix[j][i].pearson.has_value() &&
                 (!matrix[i][j].pearson ||
                  std::abs(*matrix[i][j].pearson - *matrix[j][i].pearson) <= 1e-12),
             "matrix is not symmetric");
      if (!matrix[i][j].pearson) continue;
      // independent two-pass oracle
      std::vector<double> xs, ys;
      for (const auto& [id, mm] : per_model) {
        xs.push_back(mm.at(order[i]));
        ys.push_back(mm.at(order[j]));
      }
      double mx = 0, my = 0;
      for (size_t k = 0; k < xs.size(); ++k) {
        mx += xs[k];
        my += ys[k];
      }
      mx /= xs.size();
      my /= ys.size();
      double sxy = 0, sxx = 0, syy = 0;
      for (size_t k = 0; k < xs.size(); ++k) {
        sxy += (xs[k] - mx) * (ys[k] - my);
        sxx += (xs[k] - mx) * (xs[k] - mx);
        syy += (ys[k] - my) * (ys[k] - my);
      }
      double oracle = sxy / std::sqrt(sxx * syy);
      expect(std::abs(*matrix[i][j].pearson - oracle) <= 1e-12, "cell disagrees with the oracle");
    }
  }
  size_t ti = std::find(order.begin(), order.end(), "translation") - order.begin();
  size_t ni = std::find(order.begin(), order.end(), "natural") - order.begin();
  expect(ti < order.size() && ni < order.size(), "translation or natural row missing");
  expect(matrix[ti][ni].n_models == 6, "translation-vs-natural cell not covered");
}

void criterion_11_adversarial_oracles() {
  CounterRng rng(808);
  std::vector<double> values;
  std::vector<DistanceSample> samples;
  for (int i = 0; i < 200; ++i) {
    int v = int(rng.next_u64() % 256);
    values.push_back(v);
    DistanceSample s;
    s.pair.shot_id = "s" + std::to_string(i);
    s.linf = v;
    samples.push_back(std::move(s));
  }
  EmpiricalCdf cdf(values);
  for (double t : {0.0, 15.5, 64.0, 200.0, 255.0}) {
    size_t count = 0;
    for (double v : values) {
      if (v <= t) ++count;
    }
    expect(cdf.at(t) == double(count) / double(values.size()), "CDF disagrees with counting");
  }

  AnalysisConfig ac;
  ac.epsilon = 16.0;
  auto sum = summarize(samples, ac);
  double mean = 0;
  for (double v : values) mean += v;
  mean /= values.size();
  double var = 0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= values.size();
  size_t within = 0;
  for (double v : values) {
    if (v <= ac.epsilon) ++within;
  }
  expect(std::abs(sum.mean - mean) <= 1e-12, "mean disagrees");
  expect(std::abs(sum.stddev - std::sqrt(var)) <= 1e-12, "stddev disagrees");
  expect(sum.fraction_within_epsilon == double(within) / double(values.size()),
         "epsilon fraction disagrees");

  double prev = -1.0;
  for (int step = 0; step < 50; ++step) {
    AnalysisConfig grid;
    grid.epsilon = step * (260.0 / 49.0);
    double f = summarize(samples, grid).fraction_within_epsilon;
    expect(f >= prev, "epsilon fraction not monotone");
    prev = f;
  }
  expect(prev == 1.0, "epsilon grid should end at 1");
}

void criterion_12_technique_scatter() {
  Shared& s = shared();
  auto with = [](Technique t, double lambda, double eps_ls) {
    TrainConfig cfg;
    cfg.technique = t;
    cfg.lambda = lambda;
    cfg.eps_ls = eps_ls;
    cfg.seed = 21;
    return cfg;
  };
  std::vector<std::pair<std::string, TrainConfig>> specs;
  specs.emplace_back("weight_decay", with(Technique::weight_decay, 1e-4, 0.0));
  specs.emplace_back("label_smoothing", with(Technique::label_smoothing, 0.0, 0.1));
  specs.emplace_back("clean_logit_pairing", with(Technique::clean_logit_pairing, 0.1, 0.0));
  specs.emplace_back("clean_logit_squeezing", with(Technique::clean_logit_squeezing, 0.05, 0.0));
  TrainConfig alp = with(Technique::adversarial_logit_pairing, 0.1, 0.0);
  alp.pgd = {0.03, 3, 0.02};
  specs.emplace_back("adversarial_logit_pairing", alp);
  specs.emplace_back("sigmoid_multiclass", with(Technique::sigmoid_multiclass, 0.0, 0.0));

  std::vector<std::pair<std::string, MLPModel>> models;
  models.emplace_back("baseline", s.baseline);
  for (const auto& [id, cfg] : specs) models.emplace_back(id, train_model(s, cfg));
  std::vector<std::pair<std::string, const MLPModel*>> refs;
  for (const auto& [id, m] : models) refs.emplace_back(id, &m);

  PredictOptions opts;
  opts.split = Split::test;
  auto replicates = predict_builtin_dataset(s.manifest, refs, opts);

  fs::path out = kRoot / "fig7";
  ReportOptions ropts;
  ropts.baseline_model = "baseline";
  write_report(out, replicates, s.manifest, ropts);

  std::ifstream svg_in(out / "technique_vs_baseline.svg", std::ios::binary);
  expect(svg_in.good(), "technique_vs_baseline.svg missing");
  std::stringstream svg_ss;
  svg_ss << svg_in.rdbuf();
  std::string svg = svg_ss.str();
  expect(svg.find("id=\"equality-line\"") != std::string::npos, "equality line missing");
  for (const auto& [id, cfg] : specs) {
    expect(svg.find("id=\"series-" + id + "\"") != std::string::npos,
           "scatter series missing for " + id);
  }

  std::ifstream csv(out / "technique_comparison.csv");
  expect(csv.good(), "technique_comparison.csv missing");
  std::string line;
  std::getline(csv, line);  // header
  std::set<std::string> seen;
  while (std::getline(csv, line)) {
    std::stringstream row(line);
    std::string id, acc_s, nat_s, base_s, delta_s, flag_s;
    std::getline(row, id, ',');
    std::getline(row, acc_s, ',');
    std::getline(row, nat_s, ',');
    std::getline(row, base_s, ',');
    std::getline(row, delta_s, ',');
    std::getline(row, flag_s, ',');
    double delta_pp = std::stod(delta_s);
    bool flagged = flag_s == "yes";
    expect(flagged == (delta_pp < -1.2), "accuracy gate flag inconsistent for " + id);
    seen.insert(id);
  }
  for (const auto& [id, cfg] : specs) {
    expect(seen.count(id) == 1, "comparison row missing for " + id);
  }
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(NATROB_CLI_PATH) + " " + args + " >/dev/null 2>/dev/null";
  int status = std::system(cmd.c_str());
  return (status != -1 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  expect(f.good(), "cannot read " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void compare_outputs(const fs::path& a, const fs::path& b) {
  size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    auto ext = entry.path().extension();
    if (ext != ".csv" && ext != ".svg") continue;
    expect(slurp(entry.path()) == slurp(b / entry.path().filename()),
           "rerun differs: " + entry.path().filename().string());
    ++compared;
  }
  expect(compared > 0, "no CSV/SVG outputs found under " + a.string());
}

void criterion_13_cli_reproducibility() {
  fs::path root = kRoot / "cli";
  fs::remove_all(root);
  fs::create_directories(root);
  auto p = [&](const char* name) { return (root / name).string(); };

  std::string gen = "gen-synthetic --set synthetic.num_shots=20"
                    " --set synthetic.frames_per_shot=5 --set synthetic.frame_size=32 -o ";
  expect(run_cli(gen + p("dataA")) == 0, "gen-synthetic failed");
  expect(run_cli(gen + p("dataB")) == 0, "gen-synthetic rerun failed");
  compare_outputs(root / "dataA", root / "dataB");
  std::string manifest = p("dataA") + "/manifest.csv";

  FrameManifest m = load_manifest(manifest);
  std::string anchor = (fs::path(p("dataA")) / m.entries.front().anchor_path).string();
  std::string distort = "distort --family shot_noise --severity 4 --seed 9 -o ";
  expect(run_cli(distort + p("distA") + " " + anchor) == 0, "distort failed");
  expect(run_cli(distort + p("distB") + " " + anchor) == 0, "distort rerun failed");
  fs::path frame_name = fs::path(anchor).filename();
  expect(slurp(root / "distA" / frame_name) == slurp(root / "distB" / frame_name),
         "distorted frame differs between reruns");

  std::string train = "train-ref --manifest " + manifest +
                      " --set trainer.epochs=4 --set trainer.hidden=8 -o ";
  expect(run_cli(train + p("trainA")) == 0, "train-ref failed");
  expect(run_cli(train + p("trainB")) == 0, "train-ref rerun failed");
  compare_outputs(root / "trainA", root / "trainB");
  expect(slurp(root / "trainA" / "baseline.model.json") ==
             slurp(root / "trainB" / "baseline.model.json"),
         "checkpoint differs between reruns");

  std::string predict = "predict --manifest " + manifest + " --model ref=" + p("trainA") +
                        "/baseline.model.json"
                        " --set 'distortions.families=[\"gaussian_noise\",\"translation\"]'"
                        " --set distortions.seeds_per_cell=2 -o ";
  expect(run_cli(predict + p("predA")) == 0, "predict failed");
  expect(run_cli(predict + p("predB")) == 0, "predict rerun failed");
  compare_outputs(root / "predA", root / "predB");

  std::string report = "report --manifest " + manifest + " -o ";
  std::string preds = p("predA") + "/predictions_s0.csv " + p("predA") + "/predictions_s1.csv";
  expect(run_cli(report + p("repA") + " " + preds) == 0, "report failed");
  expect(run_cli(report + p("repB") + " " + preds) == 0, "report rerun failed");
  compare_outputs(root / "repA", root / "repB");

  std::string adv = "adv-analysis --manifest " + manifest + " --predictions " + p("predA") +
                    "/predictions_s0.csv --set predictor.model_id=ref -o ";
  expect(run_cli(adv + p("advA")) == 0, "adv-analysis failed");
  expect(run_cli(adv + p("advB")) == 0, "adv-analysis rerun failed");
  compare_outputs(root / "advA", root / "advB");
}

}  // namespace

int main() {
  fs::create_directories(kRoot);
  struct Criterion {
    int id;
    const char* name;
    std::function<void()> fn;
  };
  std::vector<Criterion> criteria = {
      {1, "metric oracle equivalence", criterion_1_metric_oracle},
      {2, "identity robustness", criterion_2_identity_robustness},
      {3, "metric distinction fixture", criterion_3_metric_distinction},
      {4, "distortion determinism + monotonicity", criterion_4_determinism_and_monotonicity},
      {5, "translation exactness", criterion_5_translation_exactness},
      {6, "jpeg behavior", criterion_6_jpeg_behavior},
      {7, "technique gradient checks", criterion_7_gradient_checks},
      {8, "pgd contract", criterion_8_pgd_contract},
      {9, "end-to-end offset curve", criterion_9_end_to_end},
      {10, "correlation pipeline", criterion_10_correlation_pipeline},
      {11, "adversarial analysis oracles", criterion_11_adversarial_oracles},
      {12, "technique-vs-baseline scatter", criterion_12_technique_scatter},
      {13, "cli reproducibility", criterion_13_cli_reproducibility},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    try {
      c.fn();
      std::printf("criterion %2d (%s): PASS\n", c.id, c.name);
    } catch (const std::exception& e) {
      ++failures;
      std::printf("criterion %2d (%s): FAIL: %s\n", c.id, c.name, e.what());
    }
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
