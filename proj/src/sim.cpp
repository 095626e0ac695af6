#include "eqf/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include "eqf/errors.hpp"
#include "eqf/rng.hpp"

namespace eqf {

std::string_view shape_name(Shape s) {
  switch (s) {
    case Shape::FigureEight: return "figure-eight";
    case Shape::Circle: return "circle";
    case Shape::Sinusoid3d: return "sinusoid-3d";
  }
  return "?";
}

Shape parse_shape(std::string_view name) {
  for (Shape s : {Shape::FigureEight, Shape::Circle, Shape::Sinusoid3d})
    if (shape_name(s) == name) return s;
  throw Error(ErrorKind::InvalidConfig, "unknown trajectory shape '" + std::string(name) + "'");
}

std::string_view yaw_mode_name(YawMode y) { return y == YawMode::Tangent ? "tangent" : "constant-rate"; }

YawMode parse_yaw_mode(std::string_view name) {
  for (YawMode y : {YawMode::Tangent, YawMode::ConstantRate})
    if (yaw_mode_name(y) == name) return y;
  throw Error(ErrorKind::InvalidConfig, "unknown yaw mode '" + std::string(name) + "'");
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// c * sin(k w t + phase) with its first two derivatives.
struct Harmonic {
  double c;
  double k;
  double phase;
};

struct Axis {
  std::vector<Harmonic> terms;
  void eval(double w, double t, double& x, double& dx, double& ddx) const {
    x = dx = ddx = 0.0;
    for (const Harmonic& h : terms) {
      const double kw = h.k * w;
      const double arg = kw * t + h.phase;
      x += h.c * std::sin(arg);
      dx += h.c * kw * std::cos(arg);
      ddx -= h.c * kw * kw * std::sin(arg);
    }
  }
};

std::array<Axis, 3> path_of(const TrajectorySpec& spec) {
  const double s = spec.scale;
  const double half_pi = 0.5 * std::numbers::pi;
  switch (spec.shape) {
    case Shape::FigureEight:
      return {Axis{{{s, 1, 0}}}, Axis{{{0.5 * s, 2, 0}}}, Axis{{{0.05 * s, 2, half_pi}}}};
    case Shape::Circle:
      return {Axis{{{s, 1, half_pi}}}, Axis{{{s, 1, 0}}}, Axis{}};
    case Shape::Sinusoid3d:
      return {Axis{{{s, 1, 0}}}, Axis{{{0.6 * s, 1, half_pi}}}, Axis{{{0.2 * s, 3, 0}}}};
  }
  return {};
}

Rotation rot_x(double a) { return Eigen::AngleAxisd(a, Vec3::UnitX()).toRotationMatrix(); }
Rotation rot_y(double a) { return Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix(); }
Rotation rot_z(double a) { return Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix(); }

double normal(std::mt19937_64& gen) { return std::normal_distribution<double>(0.0, 1.0)(gen); }

Vec3 normal3(std::mt19937_64& gen) {
  const double x = normal(gen);
  const double y = normal(gen);
  const double z = normal(gen);
  return Vec3(x, y, z);
}

int visible_count(const SimConfig& cfg, const std::vector<Vec3>& landmarks, const VinsState& pose) {
  VinsState x = pose;
  x.f = landmarks;
  int count = 0;
  for (int i = 0; i < x.m(); ++i) {
    const Vec3 pc = camera_point(x, i, cfg.cam);
    if (pc.z() <= kMinDepth) continue;
    const Vec2 uv = project(pc, cfg.cam);
    if (uv.x() >= 0 && uv.y() >= 0 && uv.x() < cfg.cam.width && uv.y() < cfg.cam.height) ++count;
  }
  return count;
}

VinsState pose_at(const TrajectorySpec& spec, double t) {
  const KinematicTruth k = truth_at(spec, t);
  VinsState x;
  x.R = k.R;
  x.v = k.v;
  x.p = k.p;
  return x;
}

}  // namespace

KinematicTruth truth_at(const TrajectorySpec& spec, double t) {
  const double w = kTwoPi / spec.period;
  const auto axes = path_of(spec);
  Vec3 p, v, a;
  for (int i = 0; i < 3; ++i) axes[i].eval(w, t, p[i], v[i], a[i]);

  double yaw = 0.0, yaw_dot = 0.0;
  if (spec.yaw_mode == YawMode::ConstantRate) {
    yaw = spec.yaw_rate * t;
    yaw_dot = spec.yaw_rate;
  } else {
    const double speed2 = v.x() * v.x() + v.y() * v.y();
    if (speed2 > 1e-12) {
      yaw = std::atan2(v.y(), v.x());
      yaw_dot = (v.x() * a.y() - v.y() * a.x()) / speed2;
    }
  }
  // Incommensurate roll and pitch oscillations keep all three rotation axes excited.
  const double wr = kTwoPi / 7.3, wp = kTwoPi / 5.1;
  const double roll = spec.tilt * std::sin(wr * t);
  const double roll_dot = spec.tilt * wr * std::cos(wr * t);
  const double pitch = spec.tilt * std::sin(wp * t + 0.7);
  const double pitch_dot = spec.tilt * wp * std::cos(wp * t + 0.7);

  KinematicTruth out;
  out.R = rot_z(yaw) * rot_y(pitch) * rot_x(roll);
  out.v = v;
  out.p = p;
  const double sr = std::sin(roll), cr = std::cos(roll), sp = std::sin(pitch), cp = std::cos(pitch);
  out.omega = Vec3(roll_dot - yaw_dot * sp, pitch_dot * cr + yaw_dot * sr * cp, -pitch_dot * sr + yaw_dot * cr * cp);
  out.accel = out.R.transpose() * (a - gravity());
  return out;
}

void SimConfig::validate() const {
  const auto& tr = trajectory;
  if (!(tr.period > 0.0) || !(tr.duration > 0.0)) throw Error(ErrorKind::InvalidConfig, "trajectory period and duration must be positive");
  if (!(tr.scale >= 0.0)) throw Error(ErrorKind::InvalidConfig, "trajectory scale must be non-negative");
  if (!(imu_rate > 0.0) || !(cam_rate > 0.0)) throw Error(ErrorKind::InvalidConfig, "sensor rates must be positive");
  const double q = imu_rate / cam_rate;
  if (std::abs(q - std::round(q)) > 1e-9 || q < 1.0)
    throw Error(ErrorKind::InvalidConfig, "IMU rate must be an integer multiple of the camera rate");
  if (landmarks < 0 || max_visible < 1 || min_covisible < 0) throw Error(ErrorKind::InvalidConfig, "landmark counts");
  if (noise.sigma_gyro < 0 || noise.sigma_accel < 0 || noise.sigma_gyro_walk < 0 || noise.sigma_accel_walk < 0 ||
      noise.sigma_pixel < 0)
    throw Error(ErrorKind::InvalidConfig, "noise densities must be non-negative");
}

int SimConfig::imu_per_frame() const { return static_cast<int>(std::lround(imu_rate / cam_rate)); }

SimWorld make_world(const SimConfig& config) {
  config.validate();
  const auto& tr = config.trajectory;
  const double frame_dt = 1.0 / config.cam_rate;
  std::vector<VinsState> poses;
  Vec3 lo = Vec3::Constant(1e300), hi = Vec3::Constant(-1e300);
  for (double t = 0.0; t <= tr.duration + 1e-9; t += frame_dt) {
    poses.push_back(pose_at(tr, t));
    lo = lo.cwiseMin(poses.back().p);
    hi = hi.cwiseMax(poses.back().p);
  }
  // Deep slab and wide margin so the footprint at the ends of the path still covers landmarks.
  const double margin = 2.0;
  const double z_lo = hi.z() + 5.0, z_hi = hi.z() + 10.0;
  const double x0 = lo.x() - margin, width = hi.x() - lo.x() + 2 * margin;
  const double y0 = lo.y() - margin, depth = hi.y() - lo.y() + 2 * margin;
  // Jittered grid: each landmark is uniform inside its own cell, which avoids empty patches.
  const int n = std::max(config.landmarks, 1);
  const int nx = std::max(1, static_cast<int>(std::lround(std::sqrt(n * width / depth))));
  const int ny = (n + nx - 1) / nx;

  for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
    auto gen = substream(config.seed, "landmarks", attempt);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> uz(z_lo, z_hi);
    SimWorld world{config, {}};
    for (int i = 0; i < config.landmarks; ++i) {
      const double x = x0 + width * ((i % nx) + unit(gen)) / nx;
      const double y = y0 + depth * ((i / nx) + unit(gen)) / ny;
      const double z = uz(gen);
      world.landmarks.emplace_back(x, y, z);
    }
    const bool ok = std::all_of(poses.begin(), poses.end(), [&](const VinsState& pose) {
      return visible_count(config, world.landmarks, pose) >= config.min_covisible;
    });
    if (ok) return world;
  }
  throw Error(ErrorKind::InvalidConfig, "could not place landmarks with " + std::to_string(config.min_covisible) +
                                            " co-visible at every frame");
}

ImuStream gen_imu(const SimWorld& world, std::uint64_t run) {
  const SimConfig& cfg = world.config;
  const double dt = 1.0 / cfg.imu_rate;
  const auto n = static_cast<std::size_t>(std::llround(cfg.trajectory.duration * cfg.imu_rate));
  auto meas_gen = substream(cfg.seed, "imu-noise", run);
  auto walk_gen = substream(cfg.seed, "bias-walk", run);
  const double sd_gyro = cfg.noise.sigma_gyro * std::sqrt(cfg.imu_rate);
  const double sd_accel = cfg.noise.sigma_accel * std::sqrt(cfg.imu_rate);
  const double sd_gyro_walk = cfg.noise.sigma_gyro_walk * std::sqrt(dt);
  const double sd_accel_walk = cfg.noise.sigma_accel_walk * std::sqrt(dt);

  ImuStream out;
  out.samples.reserve(n);
  out.truth.reserve(n + 1);
  VinsState x = pose_at(cfg.trajectory, 0.0);
  x.bw = cfg.gyro_bias0;
  x.ba = cfg.accel_bias0;
  out.truth.push_back(x);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    const KinematicTruth mid = truth_at(cfg.trajectory, t + 0.5 * dt);
    const Vec3 gyro = mid.omega + x.bw;
    const Vec3 accel = mid.accel + x.ba;
    ImuSample s;
    s.t = t;
    s.gyro = gyro + sd_gyro * normal3(meas_gen);
    s.accel = accel + sd_accel * normal3(meas_gen);
    out.samples.push_back(s);
    x = flow(x, gyro, accel, dt);
    x.bw += sd_gyro_walk * normal3(walk_gen);
    x.ba += sd_accel_walk * normal3(walk_gen);
    out.truth.push_back(x);
  }
  return out;
}

VinsState truth_with_landmarks(const SimWorld& world, const ImuStream& imu, std::size_t k) {
  VinsState x = imu.truth.at(k);
  x.f = world.landmarks;
  return x;
}

std::vector<CameraObservation> gen_camera(const SimWorld& world, const ImuStream& imu, std::uint64_t run) {
  const SimConfig& cfg = world.config;
  const auto q = static_cast<std::size_t>(cfg.imu_per_frame());
  const double dt = 1.0 / cfg.imu_rate;
  auto gen = substream(cfg.seed, "pixel-noise", run);
  std::vector<CameraObservation> frames;
  for (std::size_t k = q; k < imu.truth.size(); k += q) {
    const VinsState x = truth_with_landmarks(world, imu, k);
    struct Candidate {
      double depth;
      int id;
      Vec2 uv;
    };
    std::vector<Candidate> visible;
    for (int i = 0; i < x.m(); ++i) {
      const Vec3 pc = camera_point(x, i, cfg.cam);
      if (pc.z() <= kMinDepth) continue;
      const Vec2 uv = project(pc, cfg.cam);
      if (uv.x() < 0 || uv.y() < 0 || uv.x() >= cfg.cam.width || uv.y() >= cfg.cam.height) continue;
      visible.push_back({pc.norm(), i, uv});
    }
    std::stable_sort(visible.begin(), visible.end(), [](const Candidate& a, const Candidate& b) { return a.depth < b.depth; });
    if (visible.size() > static_cast<std::size_t>(cfg.max_visible)) visible.resize(cfg.max_visible);
    std::sort(visible.begin(), visible.end(), [](const Candidate& a, const Candidate& b) { return a.id < b.id; });
    CameraObservation frame;
    frame.t = static_cast<double>(k) * dt;
    for (const Candidate& c : visible) {
      const double nu = normal(gen);
      const double nv = normal(gen);
      frame.features.push_back({c.id, c.uv + cfg.noise.sigma_pixel * Vec2(nu, nv)});
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

void write_imu_csv(std::ostream& os, const std::vector<ImuSample>& samples, std::string_view provenance) {
  os << "# " << provenance << "\n";
  os << "t,wx,wy,wz,ax,ay,az\n";
  os.precision(17);
  for (const ImuSample& s : samples)
    os << s.t << ',' << s.gyro.x() << ',' << s.gyro.y() << ',' << s.gyro.z() << ',' << s.accel.x() << ','
       << s.accel.y() << ',' << s.accel.z() << '\n';
}

void write_camera_csv(std::ostream& os, const std::vector<CameraObservation>& frames, std::string_view provenance) {
  os << "# " << provenance << "\n";
  os << "t,id,u,v\n";
  os.precision(17);
  for (const CameraObservation& f : frames)
    for (const Feature& z : f.features) os << f.t << ',' << z.id << ',' << z.uv.x() << ',' << z.uv.y() << '\n';
}

void write_landmark_csv(std::ostream& os, const std::vector<Vec3>& landmarks, std::string_view provenance) {
  os << "# " << provenance << "\n";
  os << "id,x,y,z\n";
  os.precision(17);
  for (std::size_t i = 0; i < landmarks.size(); ++i)
    os << i << ',' << landmarks[i].x() << ',' << landmarks[i].y() << ',' << landmarks[i].z() << '\n';
}

}  // namespace eqf
