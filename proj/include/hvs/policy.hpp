#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "hvs/image.hpp"
#include "hvs/kinematics.hpp"
#include "hvs/network.hpp"
#include "hvs/scene.hpp"

namespace hvs {

/// Unit in which q enters tanh(10 q) for the label mapping.
enum class LabelUnits { Metres, Millimetres };

inline constexpr double kLabelClamp = 0.9999;

std::array<double, 2> map_label(TendonState q, LabelUnits units = LabelUnits::Metres);
/// Inverse of map_label with |y| clamped to kLabelClamp. Returns mm.
TendonState unmap_label(std::array<double, 2> y, LabelUnits units = LabelUnits::Metres);

/// Archimedean spiral: q(x) = (A/n) x (cos, sin)(2 pi P x / n), x = 1..n.
std::vector<TendonState> spiral_path(double amplitude_mm, double periods, int n);

/// Render -> grayscale -> box downsample to size x size.
Image policy_input(const Image& frame, int size = 64);

struct Augmentation {
  double shadow_fraction = 0.3;
  double occlusion_fraction = 0.3;
  double shadow_gain_min = 0.4;
  double shadow_gain_max = 1.6;
  int occlusion_min_px = 8;
  int occlusion_max_px = 24;

  void validate() const;
};

struct DatasetSpec {
  double amplitude_mm = 10.0;
  double periods = 20.0;
  int samples = 5000;
  int image_size = 64;
  Augmentation augmentation;
  LabelUnits label_units = LabelUnits::Metres;
  std::uint64_t seed = 1;

  void validate() const;
};

struct Sample {
  Image image;
  std::array<double, 2> label{};
  TendonState q;
  bool shadow = false;
  bool occluded = false;
};

struct AugmentationStats {
  int shadowed = 0;
  int occluded = 0;
};

struct Dataset {
  std::vector<Sample> samples;
  std::uint64_t seed = 0;
  AugmentationStats stats;

  void validate() const;
};

Dataset generate_dataset(const Scene& scene, const CameraParams& cam, const RobotParams& params,
                         const DatasetSpec& spec);

/// images/NNNNN.pgm + labels.csv
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

struct DlbvsGains {
  double alpha = 0.05;
  LabelUnits label_units = LabelUnits::Metres;

  void validate() const;
};

/// dq = -alpha * unmap(forward(img)), in mm. `img` is the policy input.
TendonState dlbvs_step(const PolicyModel& model, const Image& img, const DlbvsGains& gains);

}  // namespace hvs
