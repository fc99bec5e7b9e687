#include "hvs/hvs.hpp"

#include <cmath>
#include <vector>

#include "hvs/metrics.hpp"

namespace hvs {

std::string_view to_string(ControllerMode mode) { return mode == ControllerMode::IBVS ? "IBVS" : "DLBVS"; }

ControllerMode parse_mode(std::string_view text) {
  if (text == "IBVS") return ControllerMode::IBVS;
  if (text == "DLBVS") return ControllerMode::DLBVS;
  throw std::invalid_argument("parse_mode: unknown mode '" + std::string(text) + "'");
}

void HvsConfig::validate() const {
  if (!(switch_threshold > 0.0 && switch_threshold < 1.0)) {
    throw std::invalid_argument("HvsConfig: switch_threshold must lie in (0, 1)");
  }
  if (max_iterations < 1) throw std::invalid_argument("HvsConfig: max_iterations must be >= 1");
  if (!(hysteresis_band >= 0.0)) throw std::invalid_argument("HvsConfig: hysteresis_band must be >= 0");
  if (!(convergence_sad > 0.0)) throw std::invalid_argument("HvsConfig: convergence_sad must be positive");
}

double sad(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("sad: image dimensions differ");
  if (a.data.empty()) throw std::invalid_argument("sad: empty images");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) acc += std::abs(a.data[i] - b.data[i]);
  return acc / static_cast<double>(a.data.size());
}

ControllerMode select_mode(double sad_value, bool features_present, const HvsConfig& cfg, ControllerMode prev) {
  if (!features_present) return ControllerMode::DLBVS;
  if (sad_value < cfg.switch_threshold) return ControllerMode::IBVS;
  if (prev == ControllerMode::IBVS && cfg.hysteresis_band > 0.0 &&
      sad_value <= cfg.switch_threshold + cfg.hysteresis_band) {
    return ControllerMode::IBVS;
  }
  return ControllerMode::DLBVS;
}

ServoTarget capture_target(const ServoContext& ctx) {
  if (!ctx.scene) throw std::invalid_argument("capture_target: no scene");
  const Image view = render(tip_pose({0.0, 0.0}, ctx.robot), *ctx.scene, ctx.cam);
  ServoTarget target{policy_input(view, ctx.policy_size), detect_features(view, *ctx.scene, ctx.cam)};
  if (!target.features.all_visible()) throw std::invalid_argument("capture_target: target markers not all visible");
  return target;
}

StepResult hvs_step(TendonState q, ControllerMode prev, const Image& frame, const ServoTarget& target,
                    const ServoContext& ctx) {
  StepResult out;
  const Image gray = policy_input(frame, ctx.policy_size);
  out.sad = sad(gray, target.gray);
  const FeatureSet fs = detect_features(frame, *ctx.scene, ctx.cam);
  out.features_present = fs.all_visible();
  out.mode = select_mode(out.sad, out.features_present, ctx.hvs, prev);

  if (out.mode == ControllerMode::IBVS) {
    try {
      out.dq = ibvs_step(fs, target.features, q, ctx.ibvs, ctx.cam, ctx.robot);
      if (out.dq.finite()) return out;
    } catch (const std::exception&) {
    }
    out.fallback = true;
    out.mode = ControllerMode::DLBVS;
  }
  out.dq = ctx.model ? dlbvs_step(*ctx.model, gray, ctx.dlbvs) : TendonState{};
  return out;
}

bool ibvs_converges(const ServoContext& ctx, const ServoTarget& target, TendonState start, double* initial_sad) {
  TendonState q = start;
  std::vector<double> series;
  series.reserve(ctx.hvs.max_iterations);
  for (int iter = 1; iter <= ctx.hvs.max_iterations; ++iter) {
    const Image frame = render(tip_pose(q, ctx.robot), *ctx.scene, ctx.cam);
    series.push_back(sad(policy_input(frame, ctx.policy_size), target.gray));
    const FeatureSet fs = detect_features(frame, *ctx.scene, ctx.cam);
    if (!fs.all_visible()) break;
    TendonState dq;
    try {
      dq = ibvs_step(fs, target.features, q, ctx.ibvs, ctx.cam, ctx.robot);
    } catch (const std::exception&) {
      break;
    }
    if (!dq.finite()) break;
    q = q + dq;
  }
  if (initial_sad) *initial_sad = series.front();
  return series.size() == static_cast<std::size_t>(ctx.hvs.max_iterations) &&
         convergence_iteration(series, ctx.hvs.convergence_sad).has_value();
}

CalibrationResult calibrate_switch_threshold(const ServoContext& ctx, std::span<const TendonState> starts) {
  if (starts.empty()) throw std::invalid_argument("calibrate_switch_threshold: empty start grid");
  const ServoTarget target = capture_target(ctx);
  CalibrationResult result;
  for (const TendonState& start : starts) {
    ++result.tried;
    double initial = 0.0;
    if (!ibvs_converges(ctx, target, start, &initial)) continue;
    ++result.converged;
    if (initial > result.best_initial_sad) {
      result.best_initial_sad = initial;
      result.best_start = start;
    }
  }
  if (result.converged == 0) throw CalibrationError("calibration failed: IBVS converged from none of the starts");
  result.threshold = result.best_initial_sad * (1.0 - kCalibrationMargin);
  return result;
}

}  // namespace hvs
