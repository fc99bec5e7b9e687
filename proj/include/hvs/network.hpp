#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hvs/image.hpp"

namespace hvs {

enum class LayerKind { Conv, Dense };

/// One trainable layer. Dense layers use `out_channels` as their width and
/// ignore kernel/stride.
struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  bool relu = false;
};

struct TensorShape {
  int channels = 1;
  int height = 1;
  int width = 1;
  std::size_t size() const { return static_cast<std::size_t>(channels) * height * width; }
};

/// Ordered layer list plus the input geometry. Convolutions are unpadded.
struct Architecture {
  int input_channels = 1;
  int input_height = 64;
  int input_width = 64;
  /// Subtracted from every input intensity before the first layer.
  double input_offset = 0.5;
  std::vector<LayerSpec> layers;

  /// conv5x5/8/s2 -> conv3x3/16/s2 -> conv3x3/32/s2 -> dense 64 -> dense 2.
  static Architecture servo_policy(int input_size = 64);

  void validate() const;
  /// Activation shape entering each layer, plus the final output shape.
  std::vector<TensorShape> shapes() const;
  std::size_t output_size() const;

  std::string describe() const;
  static Architecture parse(const std::string& text);

  friend bool operator==(const Architecture&, const Architecture&);
};

bool operator==(const LayerSpec& a, const LayerSpec& b);

struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;
};

struct TrainingMeta {
  int epochs = 0;
  double final_loss = 0.0;
  std::uint64_t seed = 0;
};

/// Parameters are stored per layer as weight then bias. Conv weights are
/// [out][in][k][k], dense weights [out][in].
struct PolicyModel {
  Architecture arch;
  std::vector<Tensor> params;
  TrainingMeta meta;

  /// He-uniform weights, zero biases.
  static PolicyModel initialize(const Architecture& arch, std::uint64_t seed);
  static PolicyModel zeros(const Architecture& arch);

  void validate() const;
  std::size_t parameter_count() const;
};

using Gradients = std::vector<std::vector<double>>;

Gradients zero_gradients(const PolicyModel& model);

/// Activation buffers for one sample, reused across calls.
class Workspace {
 public:
  explicit Workspace(const Architecture& arch);

  std::vector<std::vector<double>> act;   // act[0] input, act[i+1] output of layer i
  std::vector<std::vector<double>> grad;  // matching gradient buffers
  std::vector<TensorShape> shapes;
};

/// Forward pass; the image must match the architecture input.
std::vector<double> forward(const PolicyModel& model, const Image& img);
std::array<double, 2> forward2(const PolicyModel& model, const Image& img);

/// Runs forward into `ws` and returns the network output.
std::span<const double> forward(const PolicyModel& model, std::span<const double> input, Workspace& ws);

/// Per-sample loss: mean over outputs of (y_hat - y)^2.
double sample_loss(std::span<const double> output, std::span<const double> label);

/// Forward + backward for one sample; adds `scale * dLoss/dParam` into
/// `grads` and returns the sample loss.
double accumulate_gradient(const PolicyModel& model, std::span<const double> input, std::span<const double> label,
                           double scale, Gradients& grads, Workspace& ws);

/// Loss of one sample without touching gradients.
double evaluate_loss(const PolicyModel& model, std::span<const double> input, std::span<const double> label,
                     Workspace& ws);

/// Image intensities as a network input vector (validates the shape).
std::vector<double> network_input(const Architecture& arch, const Image& img);

}  // namespace hvs
