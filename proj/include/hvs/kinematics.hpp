#pragma once

#include "hvs/numerics.hpp"

namespace hvs {

/// Dataset amplitude; also the nominal workspace bound of each tendon.
inline constexpr double kTendonLimitMm = 10.0;

/// Displacements of the two antagonistic tendon pairs, in millimetres.
struct TendonState {
  double q1 = 0.0;
  double q2 = 0.0;

  friend TendonState operator+(TendonState a, TendonState b) { return {a.q1 + b.q1, a.q2 + b.q2}; }
  friend TendonState operator-(TendonState a, TendonState b) { return {a.q1 - b.q1, a.q2 - b.q2}; }
  friend TendonState operator*(double s, TendonState a) { return {s * a.q1, s * a.q2}; }
  friend bool operator==(const TendonState&, const TendonState&) = default;

  double norm() const;
  bool finite() const;
  bool within_limits(double limit = kTendonLimitMm) const;
};

struct RobotParams {
  double backbone_length_mm = 500.0;
  double tendon_pitch_radius_mm = 10.0;
  double straight_config_epsilon = 1e-6;

  void validate() const;
};

/// Tip pose in the base frame. `orientation` maps tip coordinates to base.
struct Pose {
  Vec3 position = Vec3::Zero();
  Rotation orientation = Rotation::Identity();
};

/// Single-section constant-curvature arc:
///   phi = atan2(q2, q1), theta = |q| / r_t, kappa = theta / L,
///   p = Rz(phi) ((1 - cos theta) / kappa, 0, sin theta / kappa),
///   R = Rz(phi) Ry(theta) Rz(-phi).
Pose tip_pose(TendonState q, const RobotParams& params);

/// Forward-difference 6x2 Jacobian of the tip pose. Rows 0..2 are dp/dq
/// (mm/mm), rows 3..5 the base-frame angular rate (rad/mm). Both blocks are
/// expressed in the base frame.
Matrix robot_jacobian_fd(TendonState q, const RobotParams& params, double delta_mm = 0.1);

/// Base-frame rotation increment log(R_to * R_from^T).
Vec3 spatial_rotation_delta(const Rotation& from, const Rotation& to);

}  // namespace hvs
