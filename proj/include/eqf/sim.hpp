#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "eqf/vins_model.hpp"

namespace eqf {

enum class Shape { FigureEight, Circle, Sinusoid3d };
enum class YawMode { Tangent, ConstantRate };

std::string_view shape_name(Shape s);
Shape parse_shape(std::string_view name);
std::string_view yaw_mode_name(YawMode y);
YawMode parse_yaw_mode(std::string_view name);

struct TrajectorySpec {
  Shape shape = Shape::FigureEight;
  double scale = 5.0;       // metres
  double period = 20.0;     // seconds per lap
  YawMode yaw_mode = YawMode::Tangent;
  double yaw_rate = 0.5;    // rad/s, constant-rate mode only
  double tilt = 0.1;        // roll/pitch oscillation amplitude, rad
  double duration = 60.0;
};

struct KinematicTruth {
  Rotation R;
  Vec3 v;
  Vec3 p;
  Vec3 omega;  // body angular rate
  Vec3 accel;  // body specific force R^T (a - g)
};

/// Closed-form pose and rates; all derivatives are analytic.
KinematicTruth truth_at(const TrajectorySpec& spec, double t);

struct SimConfig {
  TrajectorySpec trajectory;
  NoiseSpec noise;
  CameraModel cam;
  double imu_rate = 200.0;
  double cam_rate = 10.0;
  int landmarks = 40;
  int max_visible = 40;
  int min_covisible = 10;
  Vec3 gyro_bias0 = Vec3(0.01, -0.008, 0.006);
  Vec3 accel_bias0 = Vec3(0.05, -0.04, 0.03);
  std::uint64_t seed = 1;

  void validate() const;
  /// IMU samples per camera frame.
  int imu_per_frame() const;
};

struct SimWorld {
  SimConfig config;
  std::vector<Vec3> landmarks;  // index = feature id
};

/// Places landmarks on a slab above the path (the default camera looks along body +z), redrawing
/// until every frame sees at least min_covisible of them; throws InvalidConfig otherwise.
SimWorld make_world(const SimConfig& config);

struct ImuStream {
  std::vector<ImuSample> samples;  // at k / imu_rate, k = 0..n-1
  /// Truth at every sample time plus the end of the last interval (size n+1, no landmarks).
  std::vector<VinsState> truth;
};

/// Measurements and truth for run `run`. The truth state is integrated with the same zero-order
/// hold flow the filters use, driven by the analytic rates at each interval's midpoint and by the
/// random-walk biases, so a noise-free stream is exactly consistent with the filter model.
ImuStream gen_imu(const SimWorld& world, std::uint64_t run = 0);

/// Frames at every imu_per_frame()-th sample time, starting after the first interval.
std::vector<CameraObservation> gen_camera(const SimWorld& world, const ImuStream& imu, std::uint64_t run = 0);

/// Truth including landmarks at IMU sample index k.
VinsState truth_with_landmarks(const SimWorld& world, const ImuStream& imu, std::size_t k);

/// CSV exports; `provenance` is written as a leading '#' comment line.
void write_imu_csv(std::ostream& os, const std::vector<ImuSample>& samples, std::string_view provenance);
void write_camera_csv(std::ostream& os, const std::vector<CameraObservation>& frames, std::string_view provenance);
void write_landmark_csv(std::ostream& os, const std::vector<Vec3>& landmarks, std::string_view provenance);

}  // namespace eqf
