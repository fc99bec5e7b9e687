#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "hvs/features.hpp"
#include "hvs/image.hpp"
#include "hvs/kinematics.hpp"

namespace hvs {

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
};

/// Pinhole camera mounted at the tip, looking along the tip tangent.
struct CameraParams {
  int width = 128;
  int height = 128;
  double focal_px = 0.0;
  double principal_u = 64.0;
  double principal_v = 64.0;
  /// Constant depth used by the interaction matrix.
  double assumed_depth_mm = 1000.0;

  /// Focal length from a horizontal field of view; principal point at the
  /// image centre.
  static CameraParams from_fov(int width, int height, double fov_deg, double assumed_depth_mm);
  void validate() const;
};

/// Pixel-space axis-aligned rectangle in working-image coordinates.
struct PixelRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool contains(double px, double py) const {
    return px >= x && px < x + w && py >= y && py < y + h;
  }
};

/// Low-frequency gray pattern painted on the board.
struct BoardTexture {
  double half_size_mm = 5000.0;
  double coarse_scale_mm = 1200.0;
  double fine_scale_mm = 400.0;
  double fine_weight = 0.5;
  double min_intensity = 0.15;
  double intensity_range = 0.7;
  std::uint64_t seed = 7;

  double intensity(double x_mm, double y_mm) const;
};

/// Planar target at z = board_distance_mm with four coloured disc markers.
struct Scene {
  double board_distance_mm = 1500.0;
  std::array<Vec3, kFeatureCount> markers{};
  std::array<Rgb, kFeatureCount> marker_colors{};
  double marker_radius_mm = 60.0;
  /// Colour seen where rays miss the board.
  Rgb background{0.08, 0.08, 0.08};
  BoardTexture texture{};

  /// Square marker layout (-h,-h), (h,-h), (h,h), (-h,h) coloured red,
  /// green, blue, yellow.
  static Scene square(double board_distance_mm, double half_spacing_mm, double marker_radius_mm);
  void validate() const;
};

/// Flat-shaded ray cast of the board and markers, one sample per pixel
/// centre. Deterministic.
Image render(const Pose& pose, const Scene& scene, const CameraParams& cam);

/// Exact projections of the marker centres. A marker is visible when it is
/// in front of the camera, its centre pixel lies inside the image and no
/// occluder covers that pixel.
FeatureSet project_features(const Pose& pose, const Scene& scene, const CameraParams& cam,
                            std::span<const PixelRect> occluders = {});

/// Projects a base-frame point; returns false when behind the camera.
bool project_point(const Pose& pose, const CameraParams& cam, const Vec3& point, double& u, double& v);

}  // namespace hvs
