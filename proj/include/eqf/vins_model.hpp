#pragma once

#include <span>
#include <vector>

#include "eqf/liegroups.hpp"

namespace eqf {

using Vec2 = Eigen::Vector2d;

inline Vec3 gravity() { return Vec3(0.0, 0.0, -9.81); }

/// Error-state dimension for m landmarks.
inline int state_dim(int m) { return 15 + 3 * m; }

struct VinsState {
  Rotation R = Rotation::Identity();  // world <- IMU
  Vec3 v = Vec3::Zero();
  Vec3 p = Vec3::Zero();
  Vec3 bw = Vec3::Zero();
  Vec3 ba = Vec3::Zero();
  std::vector<Vec3> f;

  int m() const { return static_cast<int>(f.size()); }
  int dim() const { return state_dim(m()); }
  static VinsState origin(int m);
  /// The same state with all landmarks removed.
  VinsState imu_part() const;
};

struct ImuSample {
  double t = 0.0;
  Vec3 gyro = Vec3::Zero();
  Vec3 accel = Vec3::Zero();
};

struct Feature {
  int id = 0;
  Vec2 uv = Vec2::Zero();
};

struct CameraObservation {
  double t = 0.0;
  std::vector<Feature> features;
};

/// Continuous-time noise densities and pixel noise.
struct NoiseSpec {
  double sigma_gyro = 1.7e-4;
  double sigma_accel = 2.0e-3;
  double sigma_gyro_walk = 2.0e-5;
  double sigma_accel_walk = 3.0e-3;
  double sigma_pixel = 1.0;
};

struct CameraModel {
  double fx = 458.0;
  double fy = 458.0;
  double cx = 376.0;
  double cy = 240.0;
  Rotation R_ci = Rotation::Identity();  // IMU -> camera
  Vec3 t_ci = Vec3::Zero();
  int width = 752;
  int height = 480;
};

inline constexpr double kMinDepth = 0.05;

/// Noise-free flow of the mean over a duration s with the inputs held constant.
/// Any sign of s is accepted; landmarks and biases are unchanged.
VinsState flow(const VinsState& x, const Vec3& gyro, const Vec3& accel, double s);

/// One zero-order-hold interval of length dt > 0.
VinsState propagate_mean(const VinsState& x, const ImuSample& imu, double dt);

/// Integrates sample i over [t_i, t_{i+1}) and the last sample up to t_end; samples at or past t_end are ignored.
VinsState propagate_mean(const VinsState& x, std::span<const ImuSample> window, double t_end);

VinsState action_sd(const SemiDirectBiasElement& X, const VinsState& x);
VinsState action_isd(const IsdBiasElement& X, const VinsState& x);

/// Landmark i expressed in the camera frame.
Vec3 camera_point(const VinsState& x, int i, const CameraModel& cam);
Vec2 project(const Vec3& pc, const CameraModel& cam);
/// Pixel measurement of landmark index i; throws BehindCamera for depth <= kMinDepth.
Vec2 measure(const VinsState& x, int i, const CameraModel& cam);
/// Derivative of the pinhole projection with respect to the camera-frame point.
Eigen::Matrix<double, 2, 3> projection_jacobian(const Vec3& pc, const CameraModel& cam);

}  // namespace eqf
