#include "natrob/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "natrob/error.hpp"
#include "natrob/rng.hpp"

namespace natrob {

namespace {

const char* kTechniqueNames[7] = {
    "baseline",          "weight_decay",          "label_smoothing",  "clean_logit_pairing",
    "clean_logit_squeezing", "adversarial_logit_pairing", "sigmoid_multiclass"};

void check_input(const MLPModel& m, std::span<const double> x) {
  if (static_cast<int>(x.size()) != m.input_size()) {
    fail(ErrorCode::ShapeMismatch, "input length " + std::to_string(x.size()) + " != model input " +
                                       std::to_string(m.input_size()));
  }
}

// acts[0] = x, acts[l+1] = layer l output (rectified except for the last layer).
struct Cache {
  std::vector<std::vector<double>> acts;
};

std::vector<double> forward_cached(const MLPModel& m, std::span<const double> x, Cache& cache) {
  check_input(m, x);
  cache.acts.clear();
  cache.acts.emplace_back(x.begin(), x.end());
  for (size_t l = 0; l < m.num_layers(); ++l) {
    const int in = m.sizes[l];
    const int out = m.sizes[l + 1];
    const auto& prev = cache.acts.back();
    std::vector<double> z(out);
    for (int i = 0; i < out; ++i) {
      double acc = m.biases[l][i];
      const double* w = &m.weights[l][static_cast<size_t>(i) * in];
      for (int j = 0; j < in; ++j) acc += w[j] * prev[j];
      z[i] = acc;
    }
    if (l + 1 < m.num_layers()) {
      for (auto& v : z) v = std::max(v, 0.0);
    }
    cache.acts.push_back(std::move(z));
  }
  return cache.acts.back();
}

// Accumulates parameter gradients given d(loss)/d(logits); optionally returns
// d(loss)/d(input).
void backprop(const MLPModel& m, const Cache& cache, std::vector<double> dlogits, MLPModel& grad,
              std::vector<double>* dinput) {
  std::vector<double> delta = std::move(dlogits);
  for (size_t li = m.num_layers(); li-- > 0;) {
    const int in = m.sizes[li];
    const int out = m.sizes[li + 1];
    const auto& prev = cache.acts[li];
    for (int i = 0; i < out; ++i) {
      double* gw = &grad.weights[li][static_cast<size_t>(i) * in];
      for (int j = 0; j < in; ++j) gw[j] += delta[i] * prev[j];
      grad.biases[li][i] += delta[i];
    }
    if (li == 0 && !dinput) break;
    std::vector<double> dprev(in, 0.0);
    for (int i = 0; i < out; ++i) {
      const double* w = &m.weights[li][static_cast<size_t>(i) * in];
      for (int j = 0; j < in; ++j) dprev[j] += w[j] * delta[i];
    }
    if (li == 0) {
      *dinput = std::move(dprev);
      break;
    }
    // rectifier gate: prev holds the post-activation values
    for (int j = 0; j < in; ++j) {
      if (prev[j] <= 0.0) dprev[j] = 0.0;
    }
    delta = std::move(dprev);
  }
}

std::vector<double> softmax(std::span<const double> z) {
  double mx = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double sum = 0.0;
  for (size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - mx);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

double ce_from_logits(std::span<const double> z, int y) {
  double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - mx);
  return std::log(sum) + mx - z[y];
}

void check_labels(const Batch& batch, int k) {
  if (batch.x.empty()) fail(ErrorCode::EmptyInput, "empty batch");
  if (batch.x.size() != batch.y.size()) fail(ErrorCode::ShapeMismatch, "batch x/y size mismatch");
  for (int y : batch.y) {
    if (y < 0 || y >= k) fail(ErrorCode::LabelOutOfRange, "label " + std::to_string(y));
  }
}

}  // namespace

const char* technique_name(Technique t) { return kTechniqueNames[static_cast<int>(t)]; }

bool parse_technique(const std::string& name, Technique& out) {
  for (int i = 0; i < 7; ++i) {
    if (name == kTechniqueNames[i]) {
      out = static_cast<Technique>(i);
      return true;
    }
  }
  return false;
}

MLPModel make_mlp(const std::vector<int>& sizes, uint64_t seed) {
  if (sizes.size() < 2) fail(ErrorCode::ShapeMismatch, "need at least input and output sizes");
  for (int s : sizes) {
    if (s < 1) fail(ErrorCode::ShapeMismatch, "layer sizes must be positive");
  }
  MLPModel m;
  m.sizes = sizes;
  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    CounterRng rng(CounterRng::derive_key({seed, 0x11a9ULL, l}));
    const double scale = std::sqrt(2.0 / sizes[l]);
    std::vector<double> w(static_cast<size_t>(sizes[l + 1]) * sizes[l]);
    for (auto& v : w) v = scale * rng.next_gaussian();
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(sizes[l + 1], 0.0);
  }
  return m;
}

MLPModel zeros_like(const MLPModel& m) {
  MLPModel g;
  g.sizes = m.sizes;
  for (size_t l = 0; l < m.num_layers(); ++l) {
    g.weights.emplace_back(m.weights[l].size(), 0.0);
    g.biases.emplace_back(m.biases[l].size(), 0.0);
  }
  return g;
}

void save_model(const MLPModel& m, const std::filesystem::path& path) {
  nlohmann::json j;
  j["format"] = "natrob-mlp";
  j["version"] = 1;
  j["sizes"] = m.sizes;
  j["weights"] = m.weights;
  j["biases"] = m.biases;
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write checkpoint " + path.string());
  out << j.dump();
}

MLPModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::MissingFile, "cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(ErrorCode::ParseError, std::string("checkpoint: ") + e.what());
  }
  if (j.value("format", "") != "natrob-mlp") fail(ErrorCode::ParseError, "not a model checkpoint");
  MLPModel m;
  try {
    m.sizes = j.at("sizes").get<std::vector<int>>();
    m.weights = j.at("weights").get<std::vector<std::vector<double>>>();
    m.biases = j.at("biases").get<std::vector<std::vector<double>>>();
  } catch (const std::exception& e) {
    fail(ErrorCode::ParseError, std::string("checkpoint: ") + e.what());
  }
  if (m.weights.size() != m.sizes.size() - 1 || m.biases.size() != m.weights.size()) {
    fail(ErrorCode::ShapeMismatch, "checkpoint layer count mismatch");
  }
  for (size_t l = 0; l < m.num_layers(); ++l) {
    if (m.weights[l].size() != static_cast<size_t>(m.sizes[l]) * m.sizes[l + 1] ||
        m.biases[l].size() != static_cast<size_t>(m.sizes[l + 1])) {
      fail(ErrorCode::ShapeMismatch, "checkpoint parameter shape mismatch");
    }
  }
  return m;
}

std::vector<double> forward(const MLPModel& m, std::span<const double> x) {
  Cache cache;
  return forward_cached(m, x, cache);
}

double cross_entropy(const MLPModel& m, std::span<const double> x, int y) {
  auto z = forward(m, x);
  return ce_from_logits(z, y);
}

std::vector<double> pgd_attack(const MLPModel& m, std::span<const double> x, int y,
                               const PgdParams& pgd) {
  check_input(m, x);
  if (pgd.epsilon < 0.0) fail(ErrorCode::InvalidConfig, "pgd epsilon must be >= 0");
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> best = cur;
  double best_ce = cross_entropy(m, cur, y);
  MLPModel scratch = zeros_like(m);
  for (int step = 0; step < pgd.steps; ++step) {
    Cache cache;
    auto z = forward_cached(m, cur, cache);
    auto p = softmax(z);
    p[y] -= 1.0;
    std::vector<double> dx;
    backprop(m, cache, std::move(p), scratch, &dx);
    for (size_t i = 0; i < cur.size(); ++i) {
      double v = cur[i] + pgd.step_size * (dx[i] > 0.0 ? 1.0 : (dx[i] < 0.0 ? -1.0 : 0.0));
      v = std::clamp(v, x[i] - pgd.epsilon, x[i] + pgd.epsilon);
      cur[i] = std::clamp(v, 0.0, 1.0);
    }
    double ce = cross_entropy(m, cur, y);
    if (ce > best_ce) {
      best_ce = ce;
      best = cur;
    }
  }
  return best;
}

std::pair<double, MLPModel> loss_and_grad_fixed_adv(const MLPModel& m, const Batch& batch,
                                                    const std::vector<std::vector<double>>& x_adv,
                                                    const TrainConfig& config) {
  const int k = m.output_size();
  check_labels(batch, k);
  const size_t n = batch.x.size();
  const double invn = 1.0 / static_cast<double>(n);
  MLPModel grad = zeros_like(m);
  double loss = 0.0;

  const bool alp = config.technique == Technique::adversarial_logit_pairing;
  if (alp && x_adv.size() != n) fail(ErrorCode::ShapeMismatch, "x_adv size mismatch");

  std::vector<Cache> caches(n);
  std::vector<std::vector<double>> logits(n);
  std::vector<std::vector<double>> dlogits(n, std::vector<double>(k, 0.0));
  for (size_t i = 0; i < n; ++i) logits[i] = forward_cached(m, batch.x[i], caches[i]);

  switch (config.technique) {
    case Technique::label_smoothing: {
      for (size_t i = 0; i < n; ++i) {
        auto p = softmax(logits[i]);
        const double eps = config.eps_ls;
        for (int c = 0; c < k; ++c) {
          double q = eps / k + (c == batch.y[i] ? 1.0 - eps : 0.0);
          loss -= invn * q * std::log(p[c]);
          dlogits[i][c] = invn * (p[c] - q);
        }
      }
      break;
    }
    case Technique::sigmoid_multiclass: {
      // independent binary CE per class; prediction stays argmax of logits
      for (size_t i = 0; i < n; ++i) {
        for (int c = 0; c < k; ++c) {
          double z = logits[i][c];
          double t = c == batch.y[i] ? 1.0 : 0.0;
          // log(1 + e^z) - t*z, computed stably
          double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
          loss += invn * (softplus - t * z);
          double sig = 1.0 / (1.0 + std::exp(-z));
          dlogits[i][c] = invn * (sig - t);
        }
      }
      break;
    }
    default: {
      for (size_t i = 0; i < n; ++i) {
        loss += invn * ce_from_logits(logits[i], batch.y[i]);
        auto p = softmax(logits[i]);
        for (int c = 0; c < k; ++c) dlogits[i][c] = invn * (p[c] - (c == batch.y[i] ? 1.0 : 0.0));
      }
      break;
    }
  }

  switch (config.technique) {
    case Technique::weight_decay: {
      for (size_t l = 0; l < m.num_layers(); ++l) {
        for (size_t i = 0; i < m.weights[l].size(); ++i) {
          loss += 0.5 * config.lambda * m.weights[l][i] * m.weights[l][i];
          grad.weights[l][i] += config.lambda * m.weights[l][i];
        }
      }
      break;
    }
    case Technique::clean_logit_squeezing: {
      for (size_t i = 0; i < n; ++i) {
        for (int c = 0; c < k; ++c) {
          loss += config.lambda * invn * logits[i][c] * logits[i][c];
          dlogits[i][c] += 2.0 * config.lambda * invn * logits[i][c];
        }
      }
      break;
    }
    case Technique::clean_logit_pairing: {
      // consecutive disjoint pairs in batch order (the batch arrives shuffled)
      size_t pairs = n / 2;
      if (pairs > 0) {
        double invp = 1.0 / static_cast<double>(pairs);
        for (size_t p = 0; p < pairs; ++p) {
          size_t a = 2 * p, b = 2 * p + 1;
          for (int c = 0; c < k; ++c) {
            double d = logits[a][c] - logits[b][c];
            loss += config.lambda * invp * d * d;
            dlogits[a][c] += 2.0 * config.lambda * invp * d;
            dlogits[b][c] -= 2.0 * config.lambda * invp * d;
          }
        }
      }
      break;
    }
    case Technique::adversarial_logit_pairing: {
      for (size_t i = 0; i < n; ++i) {
        Cache cache;
        auto za = forward_cached(m, x_adv[i], cache);
        loss += invn * ce_from_logits(za, batch.y[i]);
        auto pa = softmax(za);
        std::vector<double> dza(k);
        for (int c = 0; c < k; ++c) {
          double d = logits[i][c] - za[c];
          loss += config.lambda * invn * d * d;
          dlogits[i][c] += 2.0 * config.lambda * invn * d;
          dza[c] = invn * (pa[c] - (c == batch.y[i] ? 1.0 : 0.0)) - 2.0 * config.lambda * invn * d;
        }
        backprop(m, cache, std::move(dza), grad, nullptr);
      }
      break;
    }
    default:
      break;
  }

  for (size_t i = 0; i < n; ++i) backprop(m, caches[i], std::move(dlogits[i]), grad, nullptr);

  if (!std::isfinite(loss)) fail(ErrorCode::NonFiniteLoss, "loss is not finite");
  return {loss, std::move(grad)};
}

std::pair<double, MLPModel> loss_and_grad(const MLPModel& m, const Batch& batch,
                                          const TrainConfig& config) {
  std::vector<std::vector<double>> x_adv;
  if (config.technique == Technique::adversarial_logit_pairing) {
    x_adv.reserve(batch.x.size());
    for (size_t i = 0; i < batch.x.size(); ++i) {
      x_adv.push_back(pgd_attack(m, batch.x[i], batch.y[i], config.pgd));
    }
  }
  return loss_and_grad_fixed_adv(m, batch, x_adv, config);
}

int argmax_lowest(std::span<const double> v) {
  if (v.empty()) fail(ErrorCode::EmptyInput, "argmax of empty vector");
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[i] > v[best]) best = i;  // ties keep the lowest index
  }
  return best;
}

double accuracy(const MLPModel& m, const Batch& data) {
  if (data.x.empty()) fail(ErrorCode::EmptyInput, "empty evaluation set");
  size_t correct = 0;
  for (size_t i = 0; i < data.x.size(); ++i) {
    auto z = forward(m, data.x[i]);
    if (argmax_lowest(z) == data.y[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.x.size());
}

TrainResult train(const MLPModel& init, const Batch& train_set, const Batch& val_set,
                  const TrainConfig& config) {
  if (config.epochs < 0 || config.batch_size < 1 || config.lr <= 0.0) {
    fail(ErrorCode::InvalidConfig, "bad training hyperparameters");
  }
  check_labels(train_set, init.output_size());
  TrainResult result;
  result.model = init;
  const size_t n = train_set.x.size();
  std::vector<size_t> order(n);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (size_t i = 0; i < n; ++i) order[i] = i;
    CounterRng rng(CounterRng::derive_key({config.seed, 0x51ffULL, static_cast<uint64_t>(epoch)}));
    for (size_t i = n; i > 1; --i) {
      size_t j = rng.next_u64() % i;
      std::swap(order[i - 1], order[j]);
    }
    double epoch_loss = 0.0;
    size_t batches = 0;
    for (size_t start = 0; start < n; start += config.batch_size) {
      Batch b;
      size_t end = std::min(n, start + config.batch_size);
      for (size_t i = start; i < end; ++i) {
        b.x.push_back(train_set.x[order[i]]);
        b.y.push_back(train_set.y[order[i]]);
      }
      auto [loss, grad] = loss_and_grad(result.model, b, config);
      epoch_loss += loss;
      ++batches;
      for (size_t l = 0; l < result.model.num_layers(); ++l) {
        for (size_t i = 0; i < result.model.weights[l].size(); ++i) {
          result.model.weights[l][i] -= config.lr * grad.weights[l][i];
        }
        for (size_t i = 0; i < result.model.biases[l].size(); ++i) {
          result.model.biases[l][i] -= config.lr * grad.biases[l][i];
        }
      }
    }
    double val_acc = val_set.x.empty() ? 0.0 : accuracy(result.model, val_set);
    result.log.push_back({epoch, batches ? epoch_loss / batches : 0.0, val_acc});
  }
  return result;
}

void save_train_log(const std::vector<EpochLog>& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write log " + path.string());
  out << "epoch,train_loss,val_accuracy\n";
  char buf[96];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", e.epoch, e.train_loss, e.val_accuracy);
    out << buf;
  }
}

}  // namespace natrob
