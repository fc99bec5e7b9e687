#include "hvs/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

namespace hvs {

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("TrainConfig: learning_rate must be positive");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0)) {
    throw std::invalid_argument("TrainConfig: bad Adam constants");
  }
}

TrainingSet TrainingSet::from(const Dataset& ds, const Architecture& arch) {
  ds.validate();
  TrainingSet set;
  set.inputs.reserve(ds.samples.size());
  set.labels.reserve(ds.samples.size());
  for (const auto& s : ds.samples) {
    set.inputs.push_back(network_input(arch, s.image));
    set.labels.emplace_back(s.label.begin(), s.label.end());
  }
  return set;
}

Trainer::Trainer(PolicyModel model, const TrainConfig& cfg)
    : model_(std::move(model)), cfg_(cfg), ws_(model_.arch) {
  cfg_.validate();
  model_.validate();
  grad_ = zero_gradients(model_);
  m_ = grad_;
  v_ = grad_;
}

double Trainer::step(const TrainingSet& data, std::span<const std::size_t> batch) {
  if (batch.empty()) throw std::invalid_argument("Trainer::step: empty batch");
  for (auto& g : grad_) std::fill(g.begin(), g.end(), 0.0);

  const double scale = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (std::size_t idx : batch) {
    loss += accumulate_gradient(model_, data.inputs.at(idx), data.labels.at(idx), scale, grad_, ws_);
  }
  loss *= scale;
  if (!std::isfinite(loss)) {
    std::ostringstream os;
    os << "training diverged: non-finite loss at step " << t_ + 1 << " (learning_rate " << cfg_.learning_rate
       << "); lower the learning rate";
    throw TrainingError(os.str());
  }

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const double step_size = cfg_.learning_rate / bc1;
  for (std::size_t p = 0; p < model_.params.size(); ++p) {
    auto& w = model_.params[p].values;
    auto& m = m_[p];
    auto& v = v_[p];
    const auto& g = grad_[p];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      w[i] -= step_size * m[i] / (std::sqrt(v[i] / bc2) + cfg_.epsilon);
    }
  }
  return loss;
}

TrainResult train(const Dataset& ds, const TrainConfig& cfg, const Architecture& arch, const EpochCallback& on_epoch) {
  cfg.validate();
  const TrainingSet data = TrainingSet::from(ds, arch);

  Trainer trainer(PolicyModel::initialize(arch, cfg.init_seed), cfg);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(cfg.shuffle_seed);

  TrainResult result;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    // Fisher-Yates with an explicit modulo draw so the order is library-independent.
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t len = std::min<std::size_t>(cfg.batch_size, order.size() - start);
      const std::span<const std::size_t> batch(order.data() + start, len);
      try {
        total += trainer.step(data, batch) * static_cast<double>(len);
      } catch (const TrainingError& e) {
        throw TrainingError(std::string(e.what()) + ", epoch " + std::to_string(epoch));
      }
    }
    const double mean = total / static_cast<double>(order.size());
    result.epoch_loss.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }

  result.model = trainer.release();
  result.model.meta.epochs = cfg.epochs;
  result.model.meta.final_loss = result.epoch_loss.back();
  result.model.meta.seed = cfg.init_seed;
  return result;
}

double dataset_mse(const PolicyModel& model, const TrainingSet& data) {
  if (data.size() == 0) throw std::invalid_argument("dataset_mse: empty set");
  Workspace ws(model.arch);
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) total += evaluate_loss(model, data.inputs[i], data.labels[i], ws);
  return total / static_cast<double>(data.size());
}

void write_training_log(const std::filesystem::path& path, std::span<const double> epoch_loss) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_training_log: cannot write " + path.string());
  out << "epoch,mean_mse\n" << std::setprecision(17);
  for (std::size_t i = 0; i < epoch_loss.size(); ++i) out << i + 1 << ',' << epoch_loss[i] << '\n';
}

GradCheckResult grad_check(const PolicyModel& model, std::span<const double> input, std::span<const double> label,
                           double delta, std::size_t per_layer, std::uint64_t seed) {
  if (!(delta > 0.0)) throw std::invalid_argument("grad_check: delta must be positive");
  model.validate();

  Workspace ws(model.arch);
  Gradients analytic = zero_gradients(model);
  accumulate_gradient(model, input, label, 1.0, analytic, ws);

  PolicyModel probe = model;
  std::mt19937_64 rng(seed);
  GradCheckResult result;

  auto check = [&](std::size_t tensor, std::size_t i) {
    double& w = probe.params[tensor].values[i];
    const double saved = w;
    w = saved + delta;
    const double up = evaluate_loss(probe, input, label, ws);
    w = saved - delta;
    const double down = evaluate_loss(probe, input, label, ws);
    w = saved;
    const double numeric = (up - down) / (2.0 * delta);
    const double a = analytic[tensor][i];
    const double rel = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), kGradCheckFloor);
    result.max_relative_error = std::max(result.max_relative_error, rel);
    ++result.checked;
  };

  for (std::size_t layer = 0; layer < model.arch.layers.size(); ++layer) {
    const std::size_t nw = model.params[2 * layer].values.size();
    const std::size_t nb = model.params[2 * layer + 1].values.size();
    if (per_layer == 0 || per_layer >= nw + nb) {
      for (std::size_t i = 0; i < nw; ++i) check(2 * layer, i);
      for (std::size_t i = 0; i < nb; ++i) check(2 * layer + 1, i);
      continue;
    }
    for (std::size_t k = 0; k < per_layer; ++k) {
      const std::size_t pick = rng() % (nw + nb);
      if (pick < nw) {
        check(2 * layer, pick);
      } else {
        check(2 * layer + 1, pick - nw);
      }
    }
  }
  return result;
}

}  // namespace hvs
