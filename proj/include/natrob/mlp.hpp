#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace natrob {

// Fully-connected network: affine + rectifier on hidden layers, identity on
// the output (logits).
struct MLPModel {
  std::vector<int> sizes;                        // e.g. {768, 64, K}
  std::vector<std::vector<double>> weights;      // layer l: sizes[l+1] x sizes[l], row-major
  std::vector<std::vector<double>> biases;       // layer l: sizes[l+1]

  int input_size() const { return sizes.front(); }
  int output_size() const { return sizes.back(); }
  size_t num_layers() const { return weights.size(); }
};

MLPModel make_mlp(const std::vector<int>& sizes, uint64_t seed);
MLPModel zeros_like(const MLPModel& m);

// Checkpoint: JSON with layer sizes and row-major parameter arrays;
// load(save(m)) is bit-exact.
void save_model(const MLPModel& m, const std::filesystem::path& path);
MLPModel load_model(const std::filesystem::path& path);

std::vector<double> forward(const MLPModel& m, std::span<const double> x);

enum class Technique {
  baseline,
  weight_decay,
  label_smoothing,
  clean_logit_pairing,
  clean_logit_squeezing,
  adversarial_logit_pairing,
  sigmoid_multiclass,
};
const char* technique_name(Technique t);
bool parse_technique(const std::string& name, Technique& out);

struct PgdParams {
  double epsilon = 0.0;    // L-inf radius in unit-interval units
  int steps = 0;
  double step_size = 0.0;
};

struct TrainConfig {
  Technique technique = Technique::baseline;
  double lambda = 0.0;   // technique weight
  double eps_ls = 0.0;   // label-smoothing mass
  PgdParams pgd;         // adversarial_logit_pairing only
  double lr = 0.05;
  int epochs = 600;
  int batch_size = 32;
  uint64_t seed = 1;
};

struct Batch {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
};

// Loss of the configured technique plus exact backpropagated gradients
// (gradients share the model's shape). For adversarial_logit_pairing the PGD
// examples are generated first and then held fixed.
std::pair<double, MLPModel> loss_and_grad(const MLPModel& m, const Batch& batch,
                                          const TrainConfig& config);

// Same, with caller-supplied adversarial inputs (used internally and by the
// finite-difference checks, which must hold x_adv constant).
std::pair<double, MLPModel> loss_and_grad_fixed_adv(const MLPModel& m, const Batch& batch,
                                                    const std::vector<std::vector<double>>& x_adv,
                                                    const TrainConfig& config);

double cross_entropy(const MLPModel& m, std::span<const double> x, int y);

// Iterated signed-gradient ascent on CE, projected onto the epsilon ball and
// [0,1]. Returns the best iterate seen (never worse than x itself).
std::vector<double> pgd_attack(const MLPModel& m, std::span<const double> x, int y,
                               const PgdParams& pgd);

struct EpochLog {
  int epoch;
  double train_loss;
  double val_accuracy;
};

struct TrainResult {
  MLPModel model;
  std::vector<EpochLog> log;
};

// Minibatch SGD with seed-derived shuffling; deterministic given (seed,
// config, data). NonFiniteLoss aborts.
TrainResult train(const MLPModel& init, const Batch& train_set, const Batch& val_set,
                  const TrainConfig& config);

double accuracy(const MLPModel& m, const Batch& data);
int argmax_lowest(std::span<const double> v);

void save_train_log(const std::vector<EpochLog>& log, const std::filesystem::path& path);

}  // namespace natrob
