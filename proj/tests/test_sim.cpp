#include <gtest/gtest.h>

#include <numbers>
#include <sstream>

#include "eqf/errors.hpp"
#include "eqf/filters.hpp"
#include "eqf/sim.hpp"
#include "generators.hpp"

namespace eqf {
namespace {

SimConfig quiet_config() {
  SimConfig c;
  c.noise = NoiseSpec{0, 0, 0, 0, 0};
  return c;
}

TEST(Trajectory, CircleHasConstantSpeed) {
  TrajectorySpec spec;
  spec.shape = Shape::Circle;
  spec.scale = 3.0;
  spec.period = 12.0;
  const double expected = 2.0 * std::numbers::pi * 3.0 / 12.0;
  for (double t = 0.0; t < 30.0; t += 0.37) {
    const KinematicTruth k = truth_at(spec, t);
    EXPECT_NEAR(k.v.norm(), expected, 1e-12);
    EXPECT_NEAR(k.p.head<2>().norm(), 3.0, 1e-12);
    EXPECT_EQ(k.p.z(), 0.0);
  }
}

TEST(Trajectory, StaticBodyFeelsOnlyGravity) {
  TrajectorySpec spec;
  spec.scale = 0.0;
  spec.tilt = 0.0;
  spec.yaw_mode = YawMode::ConstantRate;
  spec.yaw_rate = 0.0;
  for (double t : {0.0, 1.3, 17.0}) {
    const KinematicTruth k = truth_at(spec, t);
    EXPECT_EQ(k.v.norm(), 0.0);
    EXPECT_EQ(k.omega.norm(), 0.0);
    EXPECT_LT((k.accel - Vec3(0, 0, 9.81)).norm(), 1e-15);
  }
}

TEST(Trajectory, RatesMatchFiniteDifferences) {
  const double h = 1e-5;
  for (Shape shape : {Shape::FigureEight, Shape::Circle, Shape::Sinusoid3d})
    for (YawMode yaw : {YawMode::Tangent, YawMode::ConstantRate}) {
      TrajectorySpec spec;
      spec.shape = shape;
      spec.yaw_mode = yaw;
      for (double t = 0.3; t < 20.0; t += 1.7) {
        const KinematicTruth k = truth_at(spec, t);
        const KinematicTruth a = truth_at(spec, t + h);
        const KinematicTruth b = truth_at(spec, t - h);
        EXPECT_LT(((a.p - b.p) / (2 * h) - k.v).norm(), 1e-7) << shape_name(shape);
        const Vec3 accel_world = (a.v - b.v) / (2 * h);
        EXPECT_LT((k.R * k.accel + gravity() - accel_world).norm(), 1e-6) << shape_name(shape);
        const Mat3 Rdot = (a.R - b.R) / (2 * h);
        EXPECT_LT((k.R.transpose() * Rdot - skew(k.omega)).norm(), 1e-7) << shape_name(shape);
      }
    }
}

TEST(Trajectory, NamesRoundTrip) {
  for (Shape s : {Shape::FigureEight, Shape::Circle, Shape::Sinusoid3d}) EXPECT_EQ(parse_shape(shape_name(s)), s);
  for (YawMode y : {YawMode::Tangent, YawMode::ConstantRate}) EXPECT_EQ(parse_yaw_mode(yaw_mode_name(y)), y);
  EXPECT_THROW(parse_shape("square"), Error);
  EXPECT_THROW(parse_yaw_mode("spin"), Error);
}

TEST(SimConfig, ValidationRejectsBadValues) {
  SimConfig c;
  c.imu_rate = 205.0;
  EXPECT_THROW(c.validate(), Error);
  c = SimConfig{};
  c.noise.sigma_pixel = -1.0;
  EXPECT_THROW(c.validate(), Error);
  c = SimConfig{};
  c.trajectory.duration = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = SimConfig{};
  c.min_covisible = 500;
  c.landmarks = 20;
  EXPECT_THROW(make_world(c), Error);
  EXPECT_EQ(SimConfig{}.imu_per_frame(), 20);
}

TEST(Imu, NoiseHasTheConfiguredVariance) {
  SimConfig c;
  c.noise.sigma_gyro_walk = 0.0;
  c.noise.sigma_accel_walk = 0.0;
  c.trajectory.duration = 500.0;  // 1e5 samples
  c.min_covisible = 0;
  SimConfig clean_cfg = c;
  clean_cfg.noise.sigma_gyro = clean_cfg.noise.sigma_accel = 0.0;
  const SimWorld world = make_world(c);
  const SimWorld clean_world = make_world(clean_cfg);
  const ImuStream noisy = gen_imu(world);
  const ImuStream clean = gen_imu(clean_world);
  ASSERT_EQ(noisy.samples.size(), 100000u);
  double sg = 0.0, sa = 0.0, mg = 0.0;
  for (std::size_t k = 0; k < noisy.samples.size(); ++k) {
    const Vec3 dg = noisy.samples[k].gyro - clean.samples[k].gyro;
    const Vec3 da = noisy.samples[k].accel - clean.samples[k].accel;
    sg += dg.squaredNorm();
    sa += da.squaredNorm();
    mg += dg.x();
  }
  const double n = 3.0 * noisy.samples.size();
  const double var_g = c.noise.sigma_gyro * c.noise.sigma_gyro * c.imu_rate;
  const double var_a = c.noise.sigma_accel * c.noise.sigma_accel * c.imu_rate;
  EXPECT_NEAR(sg / n / var_g, 1.0, 0.05);
  EXPECT_NEAR(sa / n / var_a, 1.0, 0.05);
  EXPECT_LT(std::abs(mg / noisy.samples.size()), 5.0 * std::sqrt(var_g / noisy.samples.size()));
}

TEST(Imu, BiasWalkHasTheConfiguredVariance) {
  SimConfig c = quiet_config();
  c.noise.sigma_gyro_walk = 2e-5;
  c.noise.sigma_accel_walk = 3e-3;
  c.trajectory.duration = 500.0;
  c.min_covisible = 0;
  const ImuStream s = gen_imu(make_world(c));
  double sw = 0.0, sa = 0.0;
  for (std::size_t k = 1; k < s.truth.size(); ++k) {
    sw += (s.truth[k].bw - s.truth[k - 1].bw).squaredNorm();
    sa += (s.truth[k].ba - s.truth[k - 1].ba).squaredNorm();
  }
  const double n = 3.0 * (s.truth.size() - 1);
  const double dt = 1.0 / c.imu_rate;
  EXPECT_NEAR(sw / n / (c.noise.sigma_gyro_walk * c.noise.sigma_gyro_walk * dt), 1.0, 0.05);
  EXPECT_NEAR(sa / n / (c.noise.sigma_accel_walk * c.noise.sigma_accel_walk * dt), 1.0, 0.05);
}

TEST(Imu, NoiselessStreamReproducesTheTruthUnderTheModelFlow) {
  SimConfig c = quiet_config();
  c.trajectory.duration = 10.0;
  const SimWorld w = make_world(c);
  const ImuStream s = gen_imu(w);
  ASSERT_EQ(s.truth.size(), s.samples.size() + 1);
  VinsState x = s.truth.front();
  for (std::size_t k = 0; k < s.samples.size(); ++k) x = propagate_mean(x, s.samples[k], 1.0 / c.imu_rate);
  EXPECT_LT(testing::state_diff(x, s.truth.back()), 1e-9);
  // And the truth follows the analytic path.
  const KinematicTruth k = truth_at(c.trajectory, 10.0);
  EXPECT_LT((s.truth.back().p - k.p).norm(), 1e-3);
}

TEST(Sim, DeterministicPerSeedAndRun) {
  SimConfig c;
  c.trajectory.duration = 3.0;
  const SimWorld a = make_world(c);
  const SimWorld b = make_world(c);
  ASSERT_EQ(a.landmarks.size(), b.landmarks.size());
  for (std::size_t i = 0; i < a.landmarks.size(); ++i) EXPECT_EQ(a.landmarks[i], b.landmarks[i]);
  const ImuStream i0 = gen_imu(a, 0), i0b = gen_imu(b, 0), i1 = gen_imu(a, 1);
  EXPECT_EQ(i0.samples.back().gyro, i0b.samples.back().gyro);
  EXPECT_NE(i0.samples.back().gyro, i1.samples.back().gyro);
  const auto f0 = gen_camera(a, i0, 0), f0b = gen_camera(b, i0b, 0);
  ASSERT_EQ(f0.size(), f0b.size());
  EXPECT_EQ(f0.back().features.back().uv, f0b.back().features.back().uv);
  c.seed = 2;
  EXPECT_NE(make_world(c).landmarks.front(), a.landmarks.front());
}

TEST(Camera, FramesRespectVisibilityRules) {
  SimConfig c;
  c.trajectory.duration = 20.0;
  const SimWorld w = make_world(c);
  const ImuStream imu = gen_imu(w);
  const auto frames = gen_camera(w, imu);
  ASSERT_EQ(frames.size(), 200u);
  EXPECT_NEAR(frames.front().t, 0.1, 1e-12);
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const auto& f = frames[k];
    EXPECT_LE(f.features.size(), 40u);
    EXPECT_GE(f.features.size(), 10u);
    const VinsState truth = truth_with_landmarks(w, imu, (k + 1) * 20);
    for (std::size_t j = 0; j < f.features.size(); ++j) {
      if (j > 0) EXPECT_LT(f.features[j - 1].id, f.features[j].id);
      EXPECT_GT(camera_point(truth, f.features[j].id, c.cam).z(), kMinDepth);
    }
  }
}

TEST(Camera, CapKeepsTheNearestLandmarks) {
  SimConfig c = quiet_config();
  c.trajectory.duration = 2.0;
  c.max_visible = 5;
  c.min_covisible = 0;
  const SimWorld w = make_world(c);
  const ImuStream imu = gen_imu(w);
  const auto frames = gen_camera(w, imu);
  for (std::size_t k = 0; k < frames.size(); ++k) {
    ASSERT_LE(frames[k].features.size(), 5u);
    const VinsState truth = truth_with_landmarks(w, imu, (k + 1) * 20);
    double farthest_kept = 0.0;
    std::vector<bool> kept(truth.m(), false);
    for (const Feature& f : frames[k].features) {
      kept[f.id] = true;
      farthest_kept = std::max(farthest_kept, camera_point(truth, f.id, c.cam).norm());
      EXPECT_LT((f.uv - measure(truth, f.id, c.cam)).norm(), 1e-12);
    }
    for (int i = 0; i < truth.m(); ++i) {
      if (kept[i]) continue;
      const Vec3 pc = camera_point(truth, i, c.cam);
      if (pc.z() <= kMinDepth) continue;
      const Vec2 uv = project(pc, c.cam);
      if (uv.x() < 0 || uv.y() < 0 || uv.x() >= c.cam.width || uv.y() >= c.cam.height) continue;
      EXPECT_GE(pc.norm(), farthest_kept);
    }
  }
}

TEST(Sim, NoiselessEskfTracksTheTruthForAMinute) {
  SimConfig c = quiet_config();
  const SimWorld w = make_world(c);
  const ImuStream imu = gen_imu(w);
  const auto frames = gen_camera(w, imu);
  FilterConfig fc;
  fc.variant = Variant::Eskf;
  fc.noise.sigma_pixel = 1.0;
  VinsState x0 = imu.truth.front();
  Filter f(fc, x0, eskf_prior(PriorSpec{}, 0), {});
  run_sequence(f, imu.samples, frames, [&](int id) { return std::pair<Vec3, double>(w.landmarks[id], 0.05); }, nullptr);
  EXPECT_NEAR(f.time(), 60.0, 1e-9);
  VinsState truth = imu.truth.back();
  EXPECT_LT((f.state().p - truth.p).norm(), 1e-6);
  EXPECT_LT((f.state().R - truth.R).norm(), 1e-6);
  EXPECT_LT((f.state().v - truth.v).norm(), 1e-6);
}

TEST(Sim, CsvCarriesProvenance) {
  SimConfig c;
  c.trajectory.duration = 0.2;
  c.min_covisible = 0;
  const SimWorld w = make_world(c);
  const ImuStream imu = gen_imu(w);
  std::ostringstream a, b, l;
  write_imu_csv(a, imu.samples, "config=abc seed=1");
  write_camera_csv(b, gen_camera(w, imu), "config=abc seed=1");
  write_landmark_csv(l, w.landmarks, "config=abc seed=1");
  for (const std::string s : {a.str(), b.str(), l.str()}) EXPECT_EQ(s.rfind("# config=abc seed=1\n", 0), 0u);
  EXPECT_NE(a.str().find("t,wx,wy,wz,ax,ay,az"), std::string::npos);
  std::istringstream lines(a.str());
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) ++count;
  EXPECT_EQ(count, 2 + 40);
}

}  // namespace
}  // namespace eqf
