#include "hvs/numerics.hpp"

#include <cmath>
#include <stdexcept>

namespace hvs {

bool all_finite(const Matrix& m) { return m.allFinite(); }

Matrix pseudo_inverse(const Matrix& m, double relative_cutoff) {
  if (m.rows() < 1 || m.cols() < 1) {
    throw std::invalid_argument("pseudo_inverse: empty matrix");
  }
  if (!m.allFinite()) {
    throw std::invalid_argument("pseudo_inverse: non-finite entry");
  }

  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  const double cutoff = relative_cutoff * (sigma.size() > 0 ? sigma(0) : 0.0);

  Vector sigma_inv = Vector::Zero(sigma.size());
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > cutoff && sigma(i) > 0.0) sigma_inv(i) = 1.0 / sigma(i);
  }
  return svd.matrixV() * sigma_inv.asDiagonal() * svd.matrixU().transpose();
}

Vec3 rotation_log(const Rotation& r) {
  const Eigen::AngleAxisd aa(r);
  double angle = aa.angle();
  Vec3 axis = aa.axis();
  // AngleAxis may report angles slightly outside [0, pi] after normalisation.
  if (angle > M_PI) {
    angle = 2.0 * M_PI - angle;
    axis = -axis;
  }
  return axis * angle;
}

Rotation rotation_exp(const Vec3& w) {
  const double angle = w.norm();
  if (angle == 0.0) return Rotation::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

Rotation rot_x(double angle) { return Eigen::AngleAxisd(angle, Vec3::UnitX()).toRotationMatrix(); }
Rotation rot_y(double angle) { return Eigen::AngleAxisd(angle, Vec3::UnitY()).toRotationMatrix(); }
Rotation rot_z(double angle) { return Eigen::AngleAxisd(angle, Vec3::UnitZ()).toRotationMatrix(); }

bool is_rotation(const Rotation& r, double tol) {
  if (!r.allFinite()) return false;
  const double ortho = (r.transpose() * r - Rotation::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

}  // namespace hvs
