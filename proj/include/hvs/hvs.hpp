#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "hvs/ibvs.hpp"
#include "hvs/network.hpp"
#include "hvs/policy.hpp"

namespace hvs {

enum class ControllerMode { IBVS, DLBVS };

std::string_view to_string(ControllerMode mode);
ControllerMode parse_mode(std::string_view text);

struct HvsConfig {
  double switch_threshold = 0.10;
  int max_iterations = 300;
  double hysteresis_band = 0.0;
  double convergence_sad = 0.06;

  void validate() const;
};

/// Mean absolute pixel difference of two same-shape images.
double sad(const Image& a, const Image& b);

/// IBVS iff features are present and sad < a. With a positive band an
/// IBVS controller keeps control until sad exceeds a + band.
ControllerMode select_mode(double sad_value, bool features_present, const HvsConfig& cfg, ControllerMode prev);

/// Desired view at q = (0, 0): policy-resolution grayscale and features.
struct ServoTarget {
  Image gray;
  FeatureSet features;
};

/// Everything the per-iteration controllers need besides the frame.
struct ServoContext {
  const Scene* scene = nullptr;
  CameraParams cam;
  RobotParams robot;
  IbvsGains ibvs;
  DlbvsGains dlbvs;
  HvsConfig hvs;
  const PolicyModel* model = nullptr;
  int policy_size = 64;
};

ServoTarget capture_target(const ServoContext& ctx);

struct StepResult {
  ControllerMode mode = ControllerMode::DLBVS;
  TendonState dq;
  double sad = 0.0;
  bool features_present = false;
  /// IBVS was selected but failed and DLBVS produced dq instead.
  bool fallback = false;
};

/// One hybrid iteration on an already disturbed RGB frame. Never throws on
/// controller failure; IBVS errors fall back to DLBVS in the same iteration.
StepResult hvs_step(TendonState q, ControllerMode prev, const Image& frame, const ServoTarget& target,
                    const ServoContext& ctx);

class CalibrationError : public std::runtime_error {
 public:
  explicit CalibrationError(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr double kCalibrationMargin = 0.10;

struct CalibrationResult {
  double threshold = 0.0;
  TendonState best_start;
  double best_initial_sad = 0.0;
  int converged = 0;
  int tried = 0;
};

/// Runs undisturbed IBVS from every start; the threshold is the largest
/// initial SAD among converging starts, reduced by kCalibrationMargin.
CalibrationResult calibrate_switch_threshold(const ServoContext& ctx, std::span<const TendonState> starts);

/// Undisturbed IBVS-only loop; true when SAD stays below the convergence
/// threshold from some iteration on. Reports the initial SAD.
bool ibvs_converges(const ServoContext& ctx, const ServoTarget& target, TendonState start, double* initial_sad);

}  // namespace hvs
