#include "hvs/kinematics.hpp"

#include <cmath>
#include <stdexcept>

namespace hvs {

double TendonState::norm() const { return std::hypot(q1, q2); }

bool TendonState::finite() const { return std::isfinite(q1) && std::isfinite(q2); }

bool TendonState::within_limits(double limit) const {
  return finite() && std::abs(q1) <= limit && std::abs(q2) <= limit;
}

void RobotParams::validate() const {
  if (!(backbone_length_mm > 0.0) || !std::isfinite(backbone_length_mm)) {
    throw std::invalid_argument("RobotParams: backbone length must be positive");
  }
  if (!(tendon_pitch_radius_mm > 0.0) || !std::isfinite(tendon_pitch_radius_mm)) {
    throw std::invalid_argument("RobotParams: tendon pitch radius must be positive");
  }
  if (!(straight_config_epsilon >= 0.0)) {
    throw std::invalid_argument("RobotParams: straight-configuration epsilon must be >= 0");
  }
}

Pose tip_pose(TendonState q, const RobotParams& params) {
  if (!q.finite()) throw std::invalid_argument("tip_pose: non-finite tendon state");

  const double length = params.backbone_length_mm;
  const double theta = q.norm() / params.tendon_pitch_radius_mm;
  const double phi = std::atan2(q.q2, q.q1);

  // In-plane tip coordinates: radial offset L (1 - cos t) / t, height L sin t / t.
  double radial = 0.0;
  double height = length;
  if (theta < params.straight_config_epsilon) {
    const double t2 = theta * theta;
    radial = length * theta * (0.5 - t2 / 24.0);
    height = length * (1.0 - t2 / 6.0);
  } else {
    const double half = std::sin(0.5 * theta);
    radial = length * 2.0 * half * half / theta;
    height = length * std::sin(theta) / theta;
  }

  Pose pose;
  pose.position = Vec3(radial * std::cos(phi), radial * std::sin(phi), height);
  pose.orientation = rot_z(phi) * rot_y(theta) * rot_z(-phi);
  return pose;
}

Vec3 spatial_rotation_delta(const Rotation& from, const Rotation& to) {
  return rotation_log(to * from.transpose());
}

Matrix robot_jacobian_fd(TendonState q, const RobotParams& params, double delta_mm) {
  if (!(delta_mm > 0.0) || !std::isfinite(delta_mm)) {
    throw std::invalid_argument("robot_jacobian_fd: delta must be positive");
  }
  if (!q.finite()) throw std::invalid_argument("robot_jacobian_fd: non-finite tendon state");

  const Pose base = tip_pose(q, params);
  Matrix jac(6, 2);
  for (int j = 0; j < 2; ++j) {
    TendonState stepped = q;
    (j == 0 ? stepped.q1 : stepped.q2) += delta_mm;
    const Pose moved = tip_pose(stepped, params);
    jac.block<3, 1>(0, j) = (moved.position - base.position) / delta_mm;
    jac.block<3, 1>(3, j) = spatial_rotation_delta(base.orientation, moved.orientation) / delta_mm;
  }
  if (!jac.allFinite()) throw std::runtime_error("robot_jacobian_fd: non-finite Jacobian");
  return jac;
}

}  // namespace hvs
