#pragma once

#include <array>
#include <cstddef>

#include "hvs/numerics.hpp"

namespace hvs {

inline constexpr std::size_t kFeatureCount = 4;

/// Image point relative to the principal point, in pixels.
struct Feature {
  double u = 0.0;
  double v = 0.0;
  bool visible = false;
};

/// Four features ordered by marker identity. The order never permutes.
struct FeatureSet {
  std::array<Feature, kFeatureCount> points{};

  bool all_visible() const;
  std::size_t visible_count() const;
  /// (u1, v1, ..., u4, v4).
  Vector stacked() const;
};

}  // namespace hvs
