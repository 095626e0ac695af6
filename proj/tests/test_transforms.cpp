#include <gtest/gtest.h>

#include "eqf/errors.hpp"
#include "eqf/jacobians.hpp"
#include "eqf/transforms.hpp"
#include "generators.hpp"

using namespace eqf;
using eqf::testing::Gen;
using namespace eqf::layout;

TEST(Transforms, SameVariantIsIdentity) {
  Gen g(61);
  for (Variant v : kAllVariants) {
    const VinsState x = g.state(3);
    EXPECT_EQ(transform_closed_form(v, v, x).structure(), ArrowMatrix::Structure::Identity);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(x.dim(), x.dim());
    EXPECT_LT((transform_numeric(v, v, x) - I).cwiseAbs().maxCoeff(), 1e-7);
  }
}

TEST(Transforms, EskfToSdAtTrivialStateIsIdentity) {
  const VinsState x = VinsState::origin(2);
  EXPECT_EQ(transform_closed_form(Variant::Eskf, Variant::SdEqf, x).dense(), Eigen::MatrixXd::Identity(21, 21));
}

TEST(Transforms, SdToTEqfPattern) {
  Gen g(62);
  const VinsState x = g.state(4);
  const ArrowMatrix T = transform_closed_form(Variant::SdEqf, Variant::TEqf, x);
  EXPECT_EQ(T.core, Mat15::Identity());
  for (int i = 0; i < 4; ++i) {
    Coupling expect = Coupling::Zero();
    expect.block<3, 3>(0, kTheta) = skew(x.f[i]);
    EXPECT_EQ(T.coupling[i], expect);
    EXPECT_EQ(T.diag[i], Mat3::Identity());
  }
}

TEST(Transforms, IsdToTEqfIsIdentity) {
  Gen g(63);
  const VinsState x = g.state(3);
  EXPECT_EQ(transform_closed_form(Variant::IsdEqf, Variant::TEqf, x).structure(), ArrowMatrix::Structure::Identity);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(x.dim(), x.dim());
  EXPECT_LT((transform_numeric(Variant::IsdEqf, Variant::TEqf, x) - I).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(Transforms, EskfToSdZeroPatternAndBiasBlock) {
  Gen g(64);
  const VinsState x = g.state(3);
  const ArrowMatrix T = transform_closed_form(Variant::Eskf, Variant::SdEqf, x);
  EXPECT_TRUE(T.coupling_is_zero());
  EXPECT_TRUE(T.diag_is_identity());
  Mat15 expect = Mat15::Identity();
  expect.block<3, 3>(kTheta, kTheta) = x.R;
  expect.block<3, 3>(kVel, kTheta) = skew(x.v) * x.R;
  expect.block<3, 3>(kPos, kTheta) = skew(x.p) * x.R;
  expect.block<3, 3>(kGyroBias, kGyroBias) = x.R;
  expect.block<3, 3>(kAccelBias, kGyroBias) = skew(x.v) * x.R;
  expect.block<3, 3>(kAccelBias, kAccelBias) = x.R;
  EXPECT_LT((T.core - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Transforms, EskfToRiLandmarkRows) {
  Gen g(65);
  const VinsState x = g.state(3);
  const ArrowMatrix T = transform_closed_form(Variant::Eskf, Variant::RiEkf, x);
  for (int i = 0; i < 3; ++i) {
    EXPECT_LT((T.coupling[i].block<3, 3>(0, kTheta) - skew(x.f[i]) * x.R).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(T.coupling[i].rightCols<12>(), (Eigen::Matrix<double, 3, 12>::Zero()));
  }
}

TEST(Transforms, ClosedFormMatchesFiniteDifferenceForAllPairs) {
  Gen g(66);
  for (int trial = 0; trial < 10; ++trial) {
    const VinsState x = g.state(3);
    for (Variant from : kAllVariants)
      for (Variant to : kAllVariants) {
        if (from == to) continue;
        const Eigen::MatrixXd closed = transform_closed_form(from, to, x).dense();
        const Eigen::MatrixXd numeric = transform_numeric(from, to, x);
        EXPECT_LT((closed - numeric).cwiseAbs().maxCoeff(), 1e-5) << variant_name(from) << "->" << variant_name(to);
        const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(closed).singularValues();
        EXPECT_GT(sv.minCoeff() / sv.maxCoeff(), 1e-6);
      }
  }
}

TEST(Transforms, Transitivity) {
  Gen g(67);
  for (int trial = 0; trial < 5; ++trial) {
    const VinsState x = g.state(2);
    for (Variant a : kAllVariants)
      for (Variant b : kAllVariants)
        for (Variant c : kAllVariants) {
          const Eigen::MatrixXd direct = transform_closed_form(a, c, x).dense();
          const Eigen::MatrixXd chained = (transform_closed_form(b, c, x) * transform_closed_form(a, b, x)).dense();
          EXPECT_LT((direct - chained).norm(), 1e-10);
          if (trial == 0) {
            const Eigen::MatrixXd nchain = transform_numeric(b, c, x) * transform_numeric(a, b, x);
            EXPECT_LT((transform_numeric(a, c, x) - nchain).cwiseAbs().maxCoeff(), 1e-5);
          }
        }
  }
}

TEST(Transforms, HubInverseIsExact) {
  Gen g(68);
  for (Variant v : kAllVariants) {
    const VinsState x = g.state(3);
    const Eigen::MatrixXd prod = (transform_to_eskf(v, x) * transform_from_eskf(v, x)).dense();
    EXPECT_LT((prod - Eigen::MatrixXd::Identity(x.dim(), x.dim())).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(JacobianTransform, IdentityTransformLeavesJacobiansUnchanged) {
  Gen g(69);
  const int n = 21;
  const Eigen::MatrixXd F = Eigen::Map<const Eigen::MatrixXd>(g.vecn(n * n).data(), n, n);
  const Eigen::MatrixXd G = Eigen::Map<const Eigen::MatrixXd>(g.vecn(n * 12).data(), n, 12);
  const Eigen::MatrixXd H = Eigen::Map<const Eigen::MatrixXd>(g.vecn(4 * n).data(), 4, n);
  const auto out = transform_jacobians(Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Zero(n, n), F, G, H);
  EXPECT_EQ(out.F, F);
  EXPECT_EQ(out.G, G);
  EXPECT_EQ(out.H, H);
  try {
    transform_jacobians(Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Zero(n, n), F, G, Eigen::MatrixXd::Ones(2, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
}

TEST(JacobianTransform, TransformedEskfJacobiansMatchAnalyticForms) {
  Gen g(70);
  const CameraModel cam;
  for (Variant to : {Variant::SdEqf, Variant::TEqf, Variant::IsdEqf}) {
    for (int trial = 0; trial < 10; ++trial) {
      const VinsState x = g.visible_state(3);
      const ImuSample u = g.imu();
      const std::vector<int> ids{0, 1, 2};
      const ContinuousJacobians eskf = continuous_F_G(Variant::Eskf, x, u.gyro, u.accel);
      const ContinuousJacobians target = continuous_F_G(to, x, u.gyro, u.accel);
      const ArrowMatrix T = transform_closed_form(Variant::Eskf, to, x);
      const ArrowMatrix Tdot = transform_rate(Variant::Eskf, to, x, u.gyro, u.accel);
      const Eigen::MatrixXd H = measurement_H(Variant::Eskf, x, ids, cam);
      const auto out = transform_jacobians(T.dense(), Tdot.dense(), eskf.F.dense(), eskf.G, H);
      EXPECT_LT((out.F - target.F.dense()).cwiseAbs().maxCoeff(), 1e-5) << variant_name(to);
      EXPECT_LT((out.G - target.G).cwiseAbs().maxCoeff(), 1e-5) << variant_name(to);
      EXPECT_LT((out.H - measurement_H(to, x, ids, cam)).cwiseAbs().maxCoeff(), 1e-5 * H.cwiseAbs().maxCoeff());
      EXPECT_LT((out.H * T.dense() - H).cwiseAbs().maxCoeff(), 1e-10 * H.cwiseAbs().maxCoeff());
    }
  }
}

TEST(Transforms, RateMatchesDerivativeAlongFlow) {
  Gen g(71);
  const VinsState x = g.state(2);
  const ImuSample u = g.imu();
  const double h = 1e-4;
  for (Variant to : kAllVariants) {
    const Eigen::MatrixXd fd = (transform_closed_form(Variant::Eskf, to, flow(x, u.gyro, u.accel, h)).dense() -
                                transform_closed_form(Variant::Eskf, to, flow(x, u.gyro, u.accel, -h)).dense()) / (2 * h);
    EXPECT_LT((transform_rate(Variant::Eskf, to, x, u.gyro, u.accel).dense() - fd).cwiseAbs().maxCoeff(), 1e-5);
  }
}
