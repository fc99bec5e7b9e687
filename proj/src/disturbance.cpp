#include "hvs/disturbance.hpp"

#include <algorithm>
#include <stdexcept>

namespace hvs {

void DisturbanceScript::validate() const {
  for (const auto& w : occlusions) {
    if (w.start > w.end) throw std::invalid_argument("DisturbanceScript: occlusion window start > end");
    if (w.rect.w < 0 || w.rect.h < 0) throw std::invalid_argument("DisturbanceScript: negative occlusion size");
  }
  for (const auto& w : lighting) {
    if (w.start > w.end) throw std::invalid_argument("DisturbanceScript: lighting window start > end");
    if (!(w.gain >= 0.0)) throw std::invalid_argument("DisturbanceScript: lighting gain must be >= 0");
  }
  if (!(noise.std_mm >= 0.0)) throw std::invalid_argument("DisturbanceScript: noise std must be >= 0");
}

bool DisturbanceScript::empty() const {
  return occlusions.empty() && lighting.empty() && impulses.empty() && !(noise.enabled && noise.std_mm > 0.0);
}

std::vector<PixelRect> DisturbanceScript::active_occluders(int iteration) const {
  std::vector<PixelRect> rects;
  for (const auto& w : occlusions) {
    if (iteration >= w.start && iteration <= w.end) rects.push_back(w.rect);
  }
  return rects;
}

double DisturbanceScript::lighting_gain(int iteration) const {
  double gain = 1.0;
  for (const auto& w : lighting) {
    if (iteration >= w.start && iteration <= w.end) gain *= w.gain;
  }
  return gain;
}

TendonState DisturbanceScript::impulse_at(int iteration) const {
  TendonState jolt;
  for (const auto& imp : impulses) {
    if (imp.iteration == iteration) jolt = jolt + TendonState{imp.dq1_mm, imp.dq2_mm};
  }
  return jolt;
}

void fill_rect(Image& img, const PixelRect& rect, double value) {
  const int x0 = std::clamp(rect.x, 0, img.width);
  const int y0 = std::clamp(rect.y, 0, img.height);
  const int x1 = std::clamp(rect.x + rect.w, 0, img.width);
  const int y1 = std::clamp(rect.y + rect.h, 0, img.height);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      for (int c = 0; c < img.channels; ++c) img.at(x, y, c) = value;
    }
  }
}

Image apply_disturbances(const Image& img, const DisturbanceScript& script, int iteration) {
  if (iteration < 1) throw std::invalid_argument("apply_disturbances: iterations start at 1");
  Image out = img;
  const double gain = script.lighting_gain(iteration);
  if (gain != 1.0) {
    for (double& v : out.data) v = std::clamp(v * gain, 0.0, 1.0);
  }
  for (const auto& rect : script.active_occluders(iteration)) fill_rect(out, rect);
  return out;
}

ActuatorDisturbance::ActuatorDisturbance(const DisturbanceScript& script)
    : script_(&script), rng_(script.noise.seed), normal_(0.0, 1.0) {}

TendonState ActuatorDisturbance::next(int iteration) {
  TendonState delta = script_->impulse_at(iteration);
  if (script_->noise.enabled && script_->noise.std_mm > 0.0) {
    const double n1 = normal_(rng_);
    const double n2 = normal_(rng_);
    delta = delta + script_->noise.std_mm * TendonState{n1, n2};
  }
  return delta;
}

}  // namespace hvs
