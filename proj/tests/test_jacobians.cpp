#include <gtest/gtest.h>

#include "eqf/errors.hpp"
#include "eqf/jacobians.hpp"
#include "eqf/transforms.hpp"
#include "generators.hpp"

namespace eqf {
namespace {

using namespace layout;
using testing::Gen;

double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

// d/dt of the chart error between two trajectories that share the inputs, differentiated
// once more in the initial error: the columns of the linearized error dynamics.
Eigen::MatrixXd error_dynamics_fd(Variant v, const VinsState& hat, const Vec3& gyro, const Vec3& accel) {
  const int n = hat.dim();
  const double h = 1e-3;
  const double d = 1e-4;
  Eigen::MatrixXd F(n, n);
  const VinsState hat_plus = flow(hat, gyro, accel, h);
  const VinsState hat_minus = flow(hat, gyro, accel, -h);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd col = Eigen::VectorXd::Zero(n);
    for (int s : {1, -1}) {
      ErrorState e = ErrorState::Zero(n);
      e[j] = s * d;
      const VinsState xi = chart_inverse(v, hat, e);
      const ErrorState ahead = chart_forward(v, hat_plus, flow(xi, gyro, accel, h));
      const ErrorState behind = chart_forward(v, hat_minus, flow(xi, gyro, accel, -h));
      col += s * (ahead - behind);
    }
    F.col(j) = col / (4.0 * h * d);
  }
  return F;
}

TEST(ContinuousJacobians, EskfRotationRowAndStaticLandmarks) {
  Gen g(1);
  const VinsState x = g.state(3);
  const ImuSample u = g.imu();
  const auto cj = continuous_F_G(Variant::Eskf, x, u.gyro, u.accel);
  EXPECT_LT((cj.F.core.block<3, 3>(kTheta, kTheta) + skew(u.gyro - x.bw)).norm(), 1e-14);
  EXPECT_TRUE(cj.F.coupling_is_zero());
  EXPECT_TRUE(cj.F.diag_is_zero());
  EXPECT_EQ(cj.G.bottomRows(9).norm(), 0.0);
}

TEST(ContinuousJacobians, TEqfLandmarkRowsCoupleToGyroBias) {
  Gen g(2);
  const VinsState x = g.state(4);
  const ImuSample u = g.imu();
  const auto cj = continuous_F_G(Variant::TEqf, x, u.gyro, u.accel);
  for (int i = 0; i < x.m(); ++i) {
    EXPECT_LT((cj.F.coupling[i].block<3, 3>(0, kGyroBias) + skew(x.f[i])).norm(), 1e-14);
    Coupling rest = cj.F.coupling[i];
    rest.block<3, 3>(0, kGyroBias).setZero();
    EXPECT_EQ(rest.norm(), 0.0);
  }
}

TEST(ContinuousJacobians, MatchFiniteDifferenceOfErrorDynamics) {
  Gen g(3);
  for (Variant v : kAllVariants) {
    for (int trial = 0; trial < 5; ++trial) {
      const VinsState x = g.state(2);
      const ImuSample u = g.imu();
      const Eigen::MatrixXd F = continuous_F_G(v, x, u.gyro, u.accel).F.dense();
      const Eigen::MatrixXd Ffd = error_dynamics_fd(v, x, u.gyro, u.accel);
      EXPECT_LT((F - Ffd).norm() / std::max(1.0, Ffd.norm()), 1e-4) << variant_name(v) << " trial " << trial;
    }
  }
}

TEST(DiscreteStep, TinyIntervalIsIdentity) {
  Gen g(4);
  const VinsState x = g.state(3);
  const ImuSample u = g.imu();
  for (Variant v : kAllVariants) {
    const auto s = discrete_step(v, x, u, 1e-9, NoiseSpec{});
    const Eigen::MatrixXd F = continuous_F_G(v, x, u.gyro, u.accel).F.dense();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(x.dim(), x.dim());
    EXPECT_LT((s.phi.dense() - I).norm(), 1e-9 * (1.0 + F.norm())) << variant_name(v);
    EXPECT_LT((s.phi.dense() - I - 1e-9 * F).norm(), 1e-13) << variant_name(v);
    EXPECT_LT(s.q_dense().norm(), 1e-8) << variant_name(v);
  }
}

TEST(DiscreteStep, NegativeIntervalRejected) {
  Gen g(5);
  EXPECT_THROW(discrete_step(Variant::Eskf, g.state(1), g.imu(), -1e-3, NoiseSpec{}), Error);
}

TEST(DiscreteStep, EskfKinematicBlocks) {
  Gen g(6);
  const double dt = 0.005;
  for (int trial = 0; trial < 50; ++trial) {
    const VinsState x = g.state(1);
    const ImuSample u = g.imu();
    const auto s = discrete_step(Variant::Eskf, x, u, dt, NoiseSpec{});
    EXPECT_LT((s.phi.core.block<3, 3>(kPos, kVel) - dt * Mat3::Identity()).norm(), 1e-13);
    const VinsState next = flow(x, u.gyro, u.accel, dt);
    EXPECT_LT((s.phi.core.block<3, 3>(kTheta, kTheta) - next.R.transpose() * x.R).norm(), 1e-10);
    EXPECT_FALSE(s.coupled());
    EXPECT_TRUE(s.phi.coupling_is_zero());
  }
}

TEST(DiscreteStep, SdToTConjugationIsExact) {
  Gen g(7);
  const double dt = 0.005;
  for (int trial = 0; trial < 20; ++trial) {
    const VinsState x = g.state(3);
    const ImuSample u = g.imu();
    const auto sd = discrete_step(Variant::SdEqf, x, u, dt, NoiseSpec{});
    const auto t = discrete_step(Variant::TEqf, x, u, dt, NoiseSpec{});
    const VinsState next = flow(x, u.gyro, u.accel, dt);
    const ArrowMatrix T0 = transform_closed_form(Variant::SdEqf, Variant::TEqf, x);
    const ArrowMatrix T1 = transform_closed_form(Variant::SdEqf, Variant::TEqf, next);
    const Eigen::MatrixXd phi = (T1 * sd.phi * T0.inverse()).dense();
    EXPECT_LT(rel(t.phi.dense(), phi), 1e-8);
    EXPECT_LT(rel(t.q_dense(), T1.sandwich(sd.q_dense())), 1e-8);
  }
}

TEST(DiscreteStep, EskfToSdConjugationAfterDiscretization) {
  Gen g(8);
  const double dt = 0.005;
  for (int trial = 0; trial < 20; ++trial) {
    const VinsState x = g.state(2);
    const ImuSample u = g.imu();
    const auto eskf = discrete_step(Variant::Eskf, x, u, dt, NoiseSpec{});
    const auto sd = discrete_step(Variant::SdEqf, x, u, dt, NoiseSpec{});
    const VinsState next = flow(x, u.gyro, u.accel, dt);
    const ArrowMatrix T0 = transform_from_eskf(Variant::SdEqf, x);
    const ArrowMatrix T1 = transform_from_eskf(Variant::SdEqf, next);
    const Eigen::MatrixXd phi = (T1 * eskf.phi * T0.inverse()).dense();
    EXPECT_LT(rel(sd.phi.dense(), phi), 1e-8);
    // Q is integrated along different coordinates, so the match is to the quadrature order.
    const Eigen::MatrixXd q = T1.sandwich(eskf.q_dense());
    EXPECT_LT((sd.q_dense() - q).norm() / q.norm(), 1e-8);
  }
}

TEST(DiscreteStep, ProcessNoiseIsPsdForEveryVariant) {
  Gen g(9);
  for (Variant v : kAllVariants) {
    for (int trial = 0; trial < 10; ++trial) {
      const VinsState x = g.state(3);
      const auto s = discrete_step(v, x, g.imu(), 0.005, NoiseSpec{});
      const Eigen::MatrixXd Q = s.q_dense();
      EXPECT_LT((Q - Q.transpose()).norm(), 1e-18);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q);
      EXPECT_GT(es.eigenvalues().minCoeff(), -1e-12 * Q.trace()) << variant_name(v);
    }
  }
}

TEST(DiscreteStep, SubstepsConverge) {
  Gen g(10);
  for (Variant v : kAllVariants) {
    const VinsState x = g.state(2);
    const ImuSample u = g.imu();
    const auto coarse = discrete_step(v, x, u, 0.005, NoiseSpec{}, 4);
    const auto fine = discrete_step(v, x, u, 0.005, NoiseSpec{}, 100);
    EXPECT_LT(rel(coarse.phi.dense(), fine.phi.dense()), 1e-6) << variant_name(v);
    EXPECT_LT((coarse.q_dense() - fine.q_dense()).norm() / fine.q_dense().norm(), 1e-6) << variant_name(v);
  }
}

TEST(Accumulator, SingleStepIsUnchanged) {
  Gen g(11);
  const VinsState x = g.state(2);
  for (Variant v : kAllVariants) {
    const auto s = discrete_step(v, x, g.imu(), 0.005, NoiseSpec{});
    PhiQAccumulator acc(x.m());
    acc.push(s);
    EXPECT_LT(rel(acc.result().phi.dense(), s.phi.dense()), 1e-15);
    EXPECT_LT((acc.result().q_dense() - s.q_dense()).norm(), 1e-20);
  }
}

TEST(Accumulator, StructuredMatchesDense) {
  Gen g(12);
  for (Variant v : kAllVariants) {
    VinsState x = g.state(3);
    std::vector<StructuredPhiQ> steps;
    for (int k = 0; k < 6; ++k) {
      const ImuSample u = g.imu();
      steps.push_back(discrete_step(v, x, u, 0.005, NoiseSpec{}));
      x = flow(x, u.gyro, u.accel, 0.005);
    }
    const StructuredPhiQ s = accumulate(steps);
    const DensePhiQ d = accumulate_dense(steps);
    EXPECT_LT(rel(s.phi.dense(), d.phi), 1e-12) << variant_name(v);
    EXPECT_LT((s.q_dense() - d.q).norm() / d.q.norm(), 1e-12) << variant_name(v);

    // Two-step product written out by hand.
    const Eigen::MatrixXd P0 = steps[0].phi.dense();
    const Eigen::MatrixXd P1 = steps[1].phi.dense();
    const Eigen::MatrixXd q2 = P1 * steps[0].q_dense() * P1.transpose() + steps[1].q_dense();
    const StructuredPhiQ two = accumulate(std::span(steps).first(2));
    EXPECT_LT(rel(two.phi.dense(), P1 * P0), 1e-13);
    EXPECT_LT((two.q_dense() - q2).norm() / q2.norm(), 1e-12);
  }
}

TEST(Accumulator, SdStepsKeepLandmarkBlocksExactlyZero) {
  Gen g(13);
  VinsState x = g.state(5);
  PhiQAccumulator acc(x.m());
  for (int k = 0; k < 20; ++k) {
    const ImuSample u = g.imu();
    acc.push(discrete_step(Variant::SdEqf, x, u, 0.005, NoiseSpec{}));
    x = flow(x, u.gyro, u.accel, 0.005);
  }
  const auto& r = acc.result();
  EXPECT_FALSE(r.coupled());
  EXPECT_TRUE(r.phi.coupling_is_zero());
  EXPECT_TRUE(r.phi.diag_is_identity());
  EXPECT_EQ(r.phi.structure(), ArrowMatrix::Structure::CoreOnly);
}

TEST(Accumulator, MismatchedSizesRejected) {
  Gen g(14);
  PhiQAccumulator acc(2);
  EXPECT_THROW(acc.push(discrete_step(Variant::Eskf, g.state(3), g.imu(), 0.005, NoiseSpec{})), Error);
  EXPECT_THROW(accumulate(std::span<const StructuredPhiQ>{}), Error);
}

TEST(MeasurementJacobian, MatchesFiniteDifference) {
  Gen g(15);
  const CameraModel cam;
  for (Variant v : kAllVariants) {
    for (int trial = 0; trial < 10; ++trial) {
      const VinsState x = g.visible_state(4);
      const std::vector<int> idx = {0, 2, 3};
      const Eigen::MatrixXd H = measurement_H(v, x, idx, cam);
      ASSERT_EQ(H.rows(), 6);
      ASSERT_EQ(H.cols(), x.dim());
      Eigen::MatrixXd Hfd(6, x.dim());
      const double h = 1e-6;
      for (int j = 0; j < x.dim(); ++j) {
        ErrorState e = ErrorState::Zero(x.dim());
        e[j] = h;
        const VinsState plus = chart_inverse(v, x, e);
        e[j] = -h;
        const VinsState minus = chart_inverse(v, x, e);
        for (int k = 0; k < 3; ++k)
          Hfd.block<2, 1>(2 * k, j) = (measure(plus, idx[k], cam) - measure(minus, idx[k], cam)) / (2 * h);
      }
      EXPECT_LT((H - Hfd).norm() / Hfd.norm(), 1e-4) << variant_name(v);
    }
  }
}

TEST(MeasurementJacobian, EskfLandmarkColumnIsNegatedPositionColumn) {
  Gen g(16);
  const CameraModel cam;
  const VinsState x = g.visible_state(3);
  const std::vector<int> idx = {1};
  const Eigen::MatrixXd H = measurement_H(Variant::Eskf, x, idx, cam);
  EXPECT_LT((H.middleCols<3>(landmark(1)) + H.middleCols<3>(kPos)).norm(), 1e-12);
  EXPECT_EQ(H.middleCols<3>(landmark(0)).norm(), 0.0);
  EXPECT_EQ(H.middleCols<3>(landmark(2)).norm(), 0.0);
}

TEST(MeasurementJacobian, TransformsWithTheChart) {
  Gen g(17);
  const CameraModel cam;
  for (Variant v : kAllVariants) {
    const VinsState x = g.visible_state(5);
    const std::vector<int> idx = {0, 1, 4};
    const Eigen::MatrixXd He = measurement_H(Variant::Eskf, x, idx, cam);
    const Eigen::MatrixXd Hv = measurement_H(v, x, idx, cam);
    const Eigen::MatrixXd T = transform_from_eskf(v, x).dense();
    EXPECT_LT((Hv * T - He).norm() / He.norm(), 1e-10) << variant_name(v);
  }
}

TEST(MeasurementJacobian, RejectsBadInput) {
  Gen g(18);
  const CameraModel cam;
  VinsState x = g.visible_state(2);
  const std::vector<int> out_of_range = {2};
  EXPECT_THROW(measurement_H(Variant::Eskf, x, out_of_range, cam), Error);
  x.f[0] = x.p - x.R.col(2);
  const std::vector<int> behind = {0};
  try {
    measurement_H(Variant::TEqf, x, behind, cam);
    FAIL() << "expected BehindCamera";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BehindCamera);
  }
}

}  // namespace
}  // namespace eqf
