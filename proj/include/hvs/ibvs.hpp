#pragma once

#include <stdexcept>
#include <string>

#include "hvs/features.hpp"
#include "hvs/image.hpp"
#include "hvs/kinematics.hpp"
#include "hvs/numerics.hpp"
#include "hvs/scene.hpp"

namespace hvs {

/// Raised when IBVS is asked to act on a feature set with missing points.
class FeatureLossError : public std::runtime_error {
 public:
  explicit FeatureLossError(const std::string& what) : std::runtime_error(what) {}
};

/// Which rotation fills the diagonal blocks of H.
enum class HConvention {
  CameraFromBase,  ///< R_tip^T: base-frame twists re-expressed in the camera frame.
  BaseFromCamera,  ///< R_tip, kept for comparison with the opposite reading.
};

/// Point matrix used inside the control law.
enum class PointModel {
  CameraTwist,  ///< Pinhole point Jacobian for the camera twist, paired with +J_robot.
  Literal,      ///< interaction_matrix_point as written, paired with -J_robot.
};

struct IbvsGains {
  double lambda = 0.1;
  double fd_delta_mm = 0.1;
  HConvention h_convention = HConvention::CameraFromBase;
  PointModel point_model = PointModel::CameraTwist;

  void validate() const;
};

/// 2x6 point interaction matrix
///   [ f/z  0   -u/z  -uv/f      (f^2+u^2)/f  -v ]
///   [ 0    f/z -v/z  (f^2+v^2)/f  -uv/f       u ]
Matrix interaction_matrix_point(double u, double v, double f, double z);

/// Image velocity of a static point under camera twist (v, w):
///   [ -f/z  0    u/z  uv/f         -(f^2+u^2)/f   v ]
///   [ 0    -f/z  v/z  (f^2+v^2)/f  -uv/f         -u ]
Matrix point_jacobian_camera(double u, double v, double f, double z);

/// 8x6 stack of the four point matrices in feature order.
/// Throws FeatureLossError if any feature is invisible.
Matrix stack_image_jacobian(const FeatureSet& fs, const CameraParams& cam, PointModel model = PointModel::Literal);

/// H = blockdiag(R, R).
Matrix twist_transform(const Rotation& r);

/// L_e = J_img * H * J_robot.
Matrix interaction_full(const Matrix& j_img, const Rotation& r, const Matrix& j_robot);

/// dq = -lambda * pinv(L_e) * error.
Vector ibvs_control_law(const Matrix& l_e, const Vector& error, double lambda);

/// One IBVS increment towards `target` from the current features at `q`.
TendonState ibvs_step(const FeatureSet& fs, const FeatureSet& target, TendonState q, const IbvsGains& gains,
                      const CameraParams& cam, const RobotParams& params);

/// Per-channel colour threshold and minimum blob size used by detect_features.
inline constexpr double kMarkerColorTolerance = 0.25;
inline constexpr int kMinMarkerPixels = 5;

/// Colour-keyed centroid detector. Features are returned in marker order,
/// relative to the principal point; absent markers are flagged invisible.
FeatureSet detect_features(const Image& img, const Scene& scene, const CameraParams& cam);

}  // namespace hvs
