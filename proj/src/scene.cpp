#include "hvs/scene.hpp"

#include <cmath>
#include <stdexcept>

namespace hvs {

bool FeatureSet::all_visible() const { return visible_count() == kFeatureCount; }

std::size_t FeatureSet::visible_count() const {
  std::size_t n = 0;
  for (const auto& p : points) n += p.visible ? 1 : 0;
  return n;
}

Vector FeatureSet::stacked() const {
  Vector s(2 * kFeatureCount);
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    s(2 * i) = points[i].u;
    s(2 * i + 1) = points[i].v;
  }
  return s;
}

CameraParams CameraParams::from_fov(int width, int height, double fov_deg, double assumed_depth_mm) {
  if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw std::invalid_argument("CameraParams: fov must be in (0, 180)");
  CameraParams cam;
  cam.width = width;
  cam.height = height;
  cam.focal_px = 0.5 * width / std::tan(0.5 * fov_deg * M_PI / 180.0);
  cam.principal_u = 0.5 * width;
  cam.principal_v = 0.5 * height;
  cam.assumed_depth_mm = assumed_depth_mm;
  cam.validate();
  return cam;
}

void CameraParams::validate() const {
  if (width < 16 || height < 16) throw std::invalid_argument("CameraParams: image must be at least 16x16");
  if (!(focal_px > 0.0) || !std::isfinite(focal_px)) throw std::invalid_argument("CameraParams: focal length must be positive");
  if (!(assumed_depth_mm > 0.0)) throw std::invalid_argument("CameraParams: assumed depth must be positive");
}

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double lattice_value(std::int64_t ix, std::int64_t iy, std::uint64_t seed) {
  const std::uint64_t h = mix64(seed ^ mix64(static_cast<std::uint64_t>(ix) ^ mix64(static_cast<std::uint64_t>(iy))));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Smooth-step interpolated value noise, range [0, 1].
double value_noise(double x, double y, std::uint64_t seed) {
  const double fx0 = std::floor(x);
  const double fy0 = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx0);
  const auto iy = static_cast<std::int64_t>(fy0);
  const double tx = x - fx0;
  const double ty = y - fy0;
  const double sx = tx * tx * (3.0 - 2.0 * tx);
  const double sy = ty * ty * (3.0 - 2.0 * ty);
  const double a = lattice_value(ix, iy, seed);
  const double b = lattice_value(ix + 1, iy, seed);
  const double c = lattice_value(ix, iy + 1, seed);
  const double d = lattice_value(ix + 1, iy + 1, seed);
  return a + (b - a) * sx + (c - a) * sy + (a - b - c + d) * sx * sy;
}

}  // namespace

double BoardTexture::intensity(double x_mm, double y_mm) const {
  const double coarse = value_noise(x_mm / coarse_scale_mm, y_mm / coarse_scale_mm, seed);
  const double fine = value_noise(x_mm / fine_scale_mm, y_mm / fine_scale_mm, mix64(seed + 1));
  return min_intensity + intensity_range * ((1.0 - fine_weight) * coarse + fine_weight * fine);
}

Scene Scene::square(double board_distance_mm, double half_spacing_mm, double marker_radius_mm) {
  Scene scene;
  scene.board_distance_mm = board_distance_mm;
  scene.marker_radius_mm = marker_radius_mm;
  const double h = half_spacing_mm;
  scene.markers = {Vec3(-h, -h, board_distance_mm), Vec3(h, -h, board_distance_mm),
                   Vec3(h, h, board_distance_mm), Vec3(-h, h, board_distance_mm)};
  scene.marker_colors = {Rgb{1.0, 0.0, 0.0}, Rgb{0.0, 1.0, 0.0}, Rgb{0.0, 0.0, 1.0}, Rgb{1.0, 1.0, 0.0}};
  scene.validate();
  return scene;
}

void Scene::validate() const {
  if (!(marker_radius_mm > 0.0)) throw std::invalid_argument("Scene: marker radius must be positive");
  if (!(texture.half_size_mm > 0.0) || !(texture.coarse_scale_mm > 0.0) || !(texture.fine_scale_mm > 0.0)) {
    throw std::invalid_argument("Scene: board texture sizes must be positive");
  }
  for (const auto& m : markers) {
    if (std::abs(m.z() - board_distance_mm) > 1e-9) throw std::invalid_argument("Scene: markers must lie on the board plane");
  }
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    for (std::size_t j = i + 1; j < kFeatureCount; ++j) {
      const auto& a = marker_colors[i];
      const auto& b = marker_colors[j];
      if (a.r == b.r && a.g == b.g && a.b == b.b) throw std::invalid_argument("Scene: marker colours must be distinct");
    }
  }
}

Image render(const Pose& pose, const Scene& scene, const CameraParams& cam) {
  Image img(cam.width, cam.height, 3);
  const Rotation& rot = pose.orientation;
  const Vec3& origin = pose.position;
  const double r2 = scene.marker_radius_mm * scene.marker_radius_mm;
  const double half = scene.texture.half_size_mm;

  for (int y = 0; y < cam.height; ++y) {
    const double yc = (y + 0.5 - cam.principal_v) / cam.focal_px;
    for (int x = 0; x < cam.width; ++x) {
      const double xc = (x + 0.5 - cam.principal_u) / cam.focal_px;
      const Vec3 dir = rot.col(0) * xc + rot.col(1) * yc + rot.col(2);

      Rgb color = scene.background;
      if (dir.z() > 1e-12) {
        const double t = (scene.board_distance_mm - origin.z()) / dir.z();
        const double bx = origin.x() + t * dir.x();
        const double by = origin.y() + t * dir.y();
        if (t > 0.0 && std::abs(bx) <= half && std::abs(by) <= half) {
          const double g = scene.texture.intensity(bx, by);
          color = {g, g, g};
          for (std::size_t m = 0; m < kFeatureCount; ++m) {
            const double dx = bx - scene.markers[m].x();
            const double dy = by - scene.markers[m].y();
            if (dx * dx + dy * dy <= r2) {
              color = scene.marker_colors[m];
              break;
            }
          }
        }
      }
      img.at(x, y, 0) = color.r;
      img.at(x, y, 1) = color.g;
      img.at(x, y, 2) = color.b;
    }
  }
  return img;
}

bool project_point(const Pose& pose, const CameraParams& cam, const Vec3& point, double& u, double& v) {
  const Vec3 pc = pose.orientation.transpose() * (point - pose.position);
  if (!(pc.z() > 0.0)) return false;
  u = cam.focal_px * pc.x() / pc.z();
  v = cam.focal_px * pc.y() / pc.z();
  return true;
}

FeatureSet project_features(const Pose& pose, const Scene& scene, const CameraParams& cam,
                            std::span<const PixelRect> occluders) {
  FeatureSet fs;
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    Feature& f = fs.points[i];
    if (!project_point(pose, cam, scene.markers[i], f.u, f.v)) {
      f = Feature{};
      continue;
    }
    const double px = f.u + cam.principal_u;
    const double py = f.v + cam.principal_v;
    f.visible = px >= 0.0 && px < cam.width && py >= 0.0 && py < cam.height;
    for (const auto& rect : occluders) {
      if (rect.contains(px, py)) f.visible = false;
    }
  }
  return fs;
}

}  // namespace hvs
