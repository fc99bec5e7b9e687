#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hvs/network.hpp"
#include "hvs/policy.hpp"

namespace hvs {

/// Thrown when the loss becomes non-finite.
class TrainingError : public std::runtime_error {
 public:
  explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

struct TrainConfig {
  int epochs = 20;
  int batch_size = 32;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t init_seed = 1;
  std::uint64_t shuffle_seed = 2;

  void validate() const;
};

/// Network inputs and labels flattened once, shared by the trainer.
struct TrainingSet {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> labels;

  static TrainingSet from(const Dataset& ds, const Architecture& arch);
  std::size_t size() const { return inputs.size(); }
};

/// Adam over a PolicyModel with mean-of-batch MSE gradients.
class Trainer {
 public:
  Trainer(PolicyModel model, const TrainConfig& cfg);

  /// One optimizer step on the given sample indices; returns the batch mean
  /// loss measured before the update.
  double step(const TrainingSet& data, std::span<const std::size_t> batch);

  const PolicyModel& model() const { return model_; }
  PolicyModel release() { return std::move(model_); }
  long steps() const { return t_; }

 private:
  PolicyModel model_;
  TrainConfig cfg_;
  Gradients grad_, m_, v_;
  Workspace ws_;
  long t_ = 0;
};

struct TrainResult {
  PolicyModel model;
  std::vector<double> epoch_loss;
};

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

/// He-uniform init from cfg.init_seed, per-epoch shuffle from cfg.shuffle_seed.
TrainResult train(const Dataset& ds, const TrainConfig& cfg, const Architecture& arch = Architecture::servo_policy(),
                  const EpochCallback& on_epoch = {});

/// Mean per-sample loss over the whole set.
double dataset_mse(const PolicyModel& model, const TrainingSet& data);

void write_training_log(const std::filesystem::path& path, std::span<const double> epoch_loss);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
};

/// |a - n| / max(|a| + |n|, floor).
inline constexpr double kGradCheckFloor = 1e-6;

/// Analytic gradients vs central differences of the single-sample loss.
/// `per_layer` = 0 checks every parameter, otherwise that many random
/// parameters per layer (weights and biases pooled).
GradCheckResult grad_check(const PolicyModel& model, std::span<const double> input, std::span<const double> label,
                           double delta = 1e-5, std::size_t per_layer = 0, std::uint64_t seed = 0);

}  // namespace hvs
