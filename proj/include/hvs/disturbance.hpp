#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "hvs/image.hpp"
#include "hvs/kinematics.hpp"
#include "hvs/scene.hpp"

namespace hvs {

/// Inclusive iteration window [start, end].
struct OcclusionWindow {
  int start = 0;
  int end = 0;
  PixelRect rect{};
};

struct LightingWindow {
  int start = 0;
  int end = 0;
  double gain = 1.0;
};

struct ActuatorNoise {
  bool enabled = false;
  double std_mm = 0.0;
  std::uint64_t seed = 0;
};

/// Additive tendon jolt applied at the start of `iteration`.
struct Impulse {
  int iteration = 0;
  double dq1_mm = 0.0;
  double dq2_mm = 0.0;
};

struct DisturbanceScript {
  std::vector<OcclusionWindow> occlusions;
  std::vector<LightingWindow> lighting;
  ActuatorNoise noise{};
  std::vector<Impulse> impulses;

  void validate() const;
  bool empty() const;
  std::vector<PixelRect> active_occluders(int iteration) const;
  /// Product of all active lighting gains; 1 when none is active.
  double lighting_gain(int iteration) const;
  TendonState impulse_at(int iteration) const;
};

/// Scripted image disturbances for one iteration: lighting gain (then clamp
/// to [0,1]) followed by black occluders. Rectangles are clipped to the
/// image. Returns a new image.
Image apply_disturbances(const Image& img, const DisturbanceScript& script, int iteration);

/// Black rectangle, clipped to the image bounds.
void fill_rect(Image& img, const PixelRect& rect, double value = 0.0);

/// Per-iteration actuator perturbation: white noise plus scripted impulses.
class ActuatorDisturbance {
 public:
  explicit ActuatorDisturbance(const DisturbanceScript& script);

  TendonState next(int iteration);

 private:
  const DisturbanceScript* script_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
};

}  // namespace hvs
