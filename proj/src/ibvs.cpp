#include "hvs/ibvs.hpp"

#include <array>
#include <cmath>

namespace hvs {

void IbvsGains::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("IbvsGains: lambda must be positive");
  if (!(fd_delta_mm > 0.0)) throw std::invalid_argument("IbvsGains: fd delta must be positive");
}

Matrix interaction_matrix_point(double u, double v, double f, double z) {
  if (!(f > 0.0)) throw std::invalid_argument("interaction_matrix_point: focal length must be positive");
  if (!(z > 0.0)) throw std::invalid_argument("interaction_matrix_point: depth must be positive");
  Matrix l(2, 6);
  l << f / z, 0.0, -u / z, -u * v / f, (f * f + u * u) / f, -v,
       0.0, f / z, -v / z, (f * f + v * v) / f, -u * v / f, u;
  return l;
}

Matrix point_jacobian_camera(double u, double v, double f, double z) {
  if (!(f > 0.0)) throw std::invalid_argument("point_jacobian_camera: focal length must be positive");
  if (!(z > 0.0)) throw std::invalid_argument("point_jacobian_camera: depth must be positive");
  Matrix l(2, 6);
  l << -f / z, 0.0, u / z, u * v / f, -(f * f + u * u) / f, v,
       0.0, -f / z, v / z, (f * f + v * v) / f, -u * v / f, -u;
  return l;
}

Matrix stack_image_jacobian(const FeatureSet& fs, const CameraParams& cam, PointModel model) {
  Matrix j(2 * kFeatureCount, 6);
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    const Feature& p = fs.points[i];
    if (!p.visible) throw FeatureLossError("stack_image_jacobian: feature " + std::to_string(i) + " not visible");
    j.block<2, 6>(2 * i, 0) = model == PointModel::Literal
                                  ? interaction_matrix_point(p.u, p.v, cam.focal_px, cam.assumed_depth_mm)
                                  : point_jacobian_camera(p.u, p.v, cam.focal_px, cam.assumed_depth_mm);
  }
  return j;
}

Matrix twist_transform(const Rotation& r) {
  Matrix h = Matrix::Zero(6, 6);
  h.block<3, 3>(0, 0) = r;
  h.block<3, 3>(3, 3) = r;
  return h;
}

Matrix interaction_full(const Matrix& j_img, const Rotation& r, const Matrix& j_robot) {
  if (j_img.cols() != 6 || j_robot.rows() != 6) {
    throw std::invalid_argument("interaction_full: expected J_img (n x 6) and J_robot (6 x m)");
  }
  return j_img * twist_transform(r) * j_robot;
}

Vector ibvs_control_law(const Matrix& l_e, const Vector& error, double lambda) {
  if (l_e.rows() != error.size()) throw std::invalid_argument("ibvs_control_law: error size does not match L_e");
  return -lambda * (pseudo_inverse(l_e) * error);
}

TendonState ibvs_step(const FeatureSet& fs, const FeatureSet& target, TendonState q, const IbvsGains& gains,
                      const CameraParams& cam, const RobotParams& params) {
  gains.validate();
  if (!target.all_visible()) throw FeatureLossError("ibvs_step: target feature set incomplete");
  const Matrix j_img = stack_image_jacobian(fs, cam, gains.point_model);

  const Rotation r_tip = tip_pose(q, params).orientation;
  const Rotation r = gains.h_convention == HConvention::CameraFromBase ? Rotation(r_tip.transpose()) : r_tip;

  // The literal matrix has the sign of a scene-relative twist in its first row.
  Matrix j_robot = robot_jacobian_fd(q, params, gains.fd_delta_mm);
  if (gains.point_model == PointModel::Literal) j_robot = -j_robot;

  const Matrix l_e = interaction_full(j_img, r, j_robot);
  const Vector dq = ibvs_control_law(l_e, fs.stacked() - target.stacked(), gains.lambda);
  return {dq(0), dq(1)};
}

FeatureSet detect_features(const Image& img, const Scene& scene, const CameraParams& cam) {
  if (img.channels != 3) throw std::invalid_argument("detect_features: expected an RGB image");

  std::array<double, kFeatureCount> sum_x{}, sum_y{};
  std::array<int, kFeatureCount> count{};
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double* px = &img.data[img.index(x, y)];
      for (std::size_t m = 0; m < kFeatureCount; ++m) {
        const Rgb& c = scene.marker_colors[m];
        if (std::abs(px[0] - c.r) < kMarkerColorTolerance && std::abs(px[1] - c.g) < kMarkerColorTolerance &&
            std::abs(px[2] - c.b) < kMarkerColorTolerance) {
          sum_x[m] += x + 0.5;
          sum_y[m] += y + 0.5;
          ++count[m];
          break;
        }
      }
    }
  }

  FeatureSet fs;
  for (std::size_t m = 0; m < kFeatureCount; ++m) {
    if (count[m] >= kMinMarkerPixels) {
      fs.points[m] = {sum_x[m] / count[m] - cam.principal_u, sum_y[m] / count[m] - cam.principal_v, true};
    }
  }
  return fs;
}

}  // namespace hvs
