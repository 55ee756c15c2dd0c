#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fgpose/rng.hpp"
#include "fgpose/se3.hpp"

using namespace fgpose;
using std::numbers::pi;

namespace {

// Truncated Taylor series with scaling and squaring, used as an independent oracle.
Mat4 expm_oracle(const Mat4& a) {
  int squarings = 0;
  double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  while (norm > 0.5) {
    norm *= 0.5;
    ++squarings;
  }
  const Mat4 x = a / std::ldexp(1.0, squarings);
  Mat4 term = Mat4::Identity(), sum = Mat4::Identity();
  for (int k = 1; k <= 20; ++k) {
    term = term * x / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

Mat3 random_rotation(Rng& rng) {
  Vec3 axis(rng.normal(), rng.normal(), rng.normal());
  return so3_exp(axis.normalized() * rng.uniform(0.0, pi));
}

double max_abs(const auto& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Skew, MatchesCrossProductLayout) {
  Mat3 want;
  want << 0, -3, 2, 3, 0, -1, -2, 1, 0;
  EXPECT_EQ(skew(Vec3(1, 2, 3)), want);
  EXPECT_EQ(unskew(want), Vec3(1, 2, 3));
}

TEST(Skew, AppliesAsCrossProduct) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    Vec3 a(rng.normal(), rng.normal(), rng.normal()), b(rng.normal(), rng.normal(), rng.normal());
    EXPECT_LT(max_abs(skew(a) * b - a.cross(b)), 1e-15);
    EXPECT_LT(max_abs(skew(a) + skew(a).transpose()), 1e-15);
  }
}

TEST(Wedge, BuildsTwistMatrix) {
  const Twist t{Vec3(1, 2, 3), Vec3(4, 5, 6)};
  Mat4 want;
  want << 0, -3, 2, 4, 3, 0, -1, 5, -2, 1, 0, 6, 0, 0, 0, 0;
  EXPECT_EQ(wedge(t), want);
  EXPECT_EQ(vee(want).vector(), t.vector());
}

TEST(Cross6, Examples) {
  Vec6 want;
  want << 0, 0, 1, 0, 0, 0;
  EXPECT_EQ(cross6(Vec3(1, 0, 0), 0, Vec3(0, 1, 0), 0), want);
  want << 0, 0, 1, -1, 1, 0;
  EXPECT_EQ(cross6(Vec3(1, 0, 0), 1, Vec3(0, 1, 0), 1), want);
}

TEST(So3Exp, QuarterTurnAboutZ) {
  Mat3 want;
  want << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  EXPECT_LT(max_abs(so3_exp(Vec3(0, 0, pi / 2)) - want), 1e-15);
}

TEST(So3Exp, SmallAngleIsContinuous) {
  const Vec3 axis = Vec3(1, -2, 0.5).normalized();
  for (double th : {1e-12, 1e-9, 0.99e-8, 1.01e-8, 1e-7}) {
    const Mat3 r = so3_exp(axis * th);
    EXPECT_LT(max_abs(r - expm_oracle(wedge({axis * th, Vec3::Zero()})).topLeftCorner<3, 3>()), 1e-15) << th;
  }
}

TEST(Se3Exp, PureTranslation) {
  const Pose p = se3_exp({Vec3::Zero(), Vec3(1, 2, 3)}, 0.5);
  EXPECT_EQ(p.rotation, Mat3::Identity());
  EXPECT_LT(max_abs(p.position - Vec3(0.5, 1.0, 1.5)), 1e-15);
}

TEST(Se3Exp, MatchesMatrixExponentialOracle) {
  Rng rng(11);
  double worst = 0.0, ortho = 0.0, det = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Twist t;
    for (int k = 0; k < 3; ++k) {
      t.omega[k] = rng.uniform(-3.0, 3.0);
      t.v[k] = rng.uniform(-5.0, 5.0);
    }
    if (i % 7 == 0) t.omega *= 1e-10;
    const double dt = rng.uniform(0.0, 1.0);
    const Pose p = se3_exp(t, dt);
    worst = std::max(worst, max_abs(p.matrix() - expm_oracle(wedge(t) * dt)));
    ortho = std::max(ortho, max_abs(p.rotation.transpose() * p.rotation - Mat3::Identity()));
    det = std::max(det, std::abs(p.rotation.determinant() - 1.0));
  }
  EXPECT_LT(worst, 1e-9);
  EXPECT_LT(ortho, 1e-9);
  EXPECT_LT(det, 1e-9);
}

TEST(Se3Exp, ComposesAlongOneTwist) {
  const Twist t{Vec3(0.3, -0.2, 0.9), Vec3(1, 0, -2)};
  const Pose once = se3_exp(t, 0.8);
  const Pose twice = se3_exp(t, 0.4) * se3_exp(t, 0.4);
  EXPECT_LT(max_abs(once.matrix() - twice.matrix()), 1e-13);
}

TEST(ProjectToSo3, RecoversPerturbedRotation) {
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const Mat3 r = random_rotation(rng);
    Mat3 noisy = r;
    for (int k = 0; k < 9; ++k) noisy.data()[k] += 1e-6 * rng.normal();
    const Mat3 p = project_to_so3(noisy);
    EXPECT_LT(max_abs(p.transpose() * p - Mat3::Identity()), 1e-12);
    EXPECT_NEAR(p.determinant(), 1.0, 1e-12);
    EXPECT_LT(max_abs(p - r), 1e-5);
  }
}

TEST(AttitudeNorm, EqualsHalfAngleSineSquared) {
  Rng rng(17);
  for (int i = 0; i < 1000; ++i) {
    Vec3 axis(rng.normal(), rng.normal(), rng.normal());
    const double th = rng.uniform(0.0, pi);
    const double n = attitude_error_norm(so3_exp(axis.normalized() * th));
    EXPECT_NEAR(n, std::pow(std::sin(th / 2.0), 2), 1e-12);
    EXPECT_GE(n, 0.0);
    EXPECT_LE(n, 1.0);
  }
}

TEST(AttitudeNorm, Landmarks) {
  EXPECT_EQ(attitude_error_norm(Mat3::Identity()), 0.0);
  EXPECT_NEAR(attitude_error_norm(so3_exp(Vec3(0, pi, 0))), 1.0, 1e-15);
}

TEST(AttitudeNorm, LargeInitialEstimate) {
  Mat3 r;
  r << -0.829, 0.293, 0.343, 0.399, 0.157, 0.903, 0.210, 0.943, -0.257;
  EXPECT_NEAR(attitude_error_norm(r), 0.25 * (3.0 - (-0.829 + 0.157 - 0.257)), 1e-15);
  EXPECT_NEAR(attitude_error_norm(r), 0.98225, 1e-12);
}

TEST(PoseError, MatchesMatrixProduct) {
  Rng rng(23);
  for (int i = 0; i < 100; ++i) {
    const Pose a{random_rotation(rng), Vec3(rng.normal(), rng.normal(), rng.normal())};
    const Pose b{random_rotation(rng), Vec3(rng.normal(), rng.normal(), rng.normal())};
    const PoseError e = pose_error(a, b);
    const Mat4 want = b.matrix() * a.matrix().inverse();
    EXPECT_LT(max_abs(e.rotation - want.topLeftCorner<3, 3>()), 1e-12);
    EXPECT_LT(max_abs(e.position - want.topRightCorner<3, 1>()), 1e-12);
  }
}

TEST(PoseError, IdentityWhenEqual) {
  const Pose p{so3_exp(Vec3(0.1, 0.2, 0.3)), Vec3(1, 2, 3)};
  const PoseError e = pose_error(p, p);
  EXPECT_LT(max_abs(e.rotation - Mat3::Identity()), 1e-15);
  EXPECT_LT(e.position.norm(), 1e-15);
}

TEST(Pose, InverseAndComposition) {
  const Pose p{so3_exp(Vec3(0.4, -0.7, 1.1)), Vec3(3, -1, 2)};
  EXPECT_LT(max_abs((p * p.inverse()).matrix() - Mat4::Identity()), 1e-15);
  EXPECT_LT(max_abs(p.transform_point(Vec3(1, 2, 3)) - (p.matrix() * Eigen::Vector4d(1, 2, 3, 1)).head<3>()), 1e-15);
  EXPECT_LT(max_abs(p.transform_direction(Vec3(1, 2, 3)) - p.rotation * Vec3(1, 2, 3)), 1e-15);
}

TEST(Euler, RoundTrip) {
  Rng rng(29);
  for (int i = 0; i < 500; ++i) {
    const EulerZYX e{rng.uniform(-pi + 1e-3, pi - 1e-3), rng.uniform(-pi / 2 + 1e-3, pi / 2 - 1e-3),
                     rng.uniform(-pi + 1e-3, pi - 1e-3)};
    const EulerZYX r = euler_zyx(rotation_from_euler(e));
    EXPECT_NEAR(r.roll, e.roll, 1e-9);
    EXPECT_NEAR(r.pitch, e.pitch, 1e-9);
    EXPECT_NEAR(r.yaw, e.yaw, 1e-9);
  }
}

TEST(Euler, GimbalLockPinsRoll) {
  const Mat3 r = rotation_from_euler({0.3, pi / 2, 0.5});
  const EulerZYX e = euler_zyx(r);
  EXPECT_EQ(e.roll, 0.0);
  EXPECT_NEAR(e.pitch, pi / 2, 1e-7);
  EXPECT_LT(max_abs(rotation_from_euler(e) - r), 1e-9);
}

TEST(Normalize, RejectsDegenerate) {
  EXPECT_THROW(normalize3(Vec3::Zero()), DegenerateMeasurement);
  EXPECT_THROW(normalize3(Vec3(1e-13, 0, 0)), DegenerateMeasurement);
  EXPECT_LT((normalize3(Vec3(3, 0, 4)) - Vec3(0.6, 0, 0.8)).norm(), 1e-15);
}

TEST(Jacobian, MatchesSeriesDefinition) {
  // J_l(w) = Σ [w]×^k / (k+1)!
  const Vec3 w(0.7, -0.4, 1.3);
  Mat3 sum = Mat3::Identity(), term = Mat3::Identity();
  double fact = 1.0;
  for (int k = 1; k < 30; ++k) {
    term = term * skew(w);
    fact *= static_cast<double>(k + 1);
    sum += term / fact;
  }
  EXPECT_LT(max_abs(so3_left_jacobian(w) - sum), 1e-14);
}
