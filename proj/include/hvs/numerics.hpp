#pragma once

#include <Eigen/Dense>

namespace hvs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;
using Rotation = Eigen::Matrix3d;

/// Relative singular-value cutoff used by pseudo_inverse.
inline constexpr double kPinvRelativeCutoff = 1e-10;

/// Moore-Penrose pseudo-inverse through a full SVD. Singular values below
/// `relative_cutoff * sigma_max` are treated as zero.
/// Throws std::invalid_argument on empty or non-finite input.
Matrix pseudo_inverse(const Matrix& m, double relative_cutoff = kPinvRelativeCutoff);

/// Axis-angle vector w with exp(hat(w)) == r, |w| in [0, pi].
Vec3 rotation_log(const Rotation& r);
Rotation rotation_exp(const Vec3& w);

Rotation rot_x(double angle);
Rotation rot_y(double angle);
Rotation rot_z(double angle);

/// Orthonormal and right-handed within `tol`.
bool is_rotation(const Rotation& r, double tol = 1e-10);

bool all_finite(const Matrix& m);

}  // namespace hvs
