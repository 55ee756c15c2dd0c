#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fgpose/pose_filter.hpp"

using namespace fgpose;

namespace {

Mat3 random_rotation(Rng& rng) {
  Vec3 axis(rng.normal(), rng.normal(), rng.normal());
  return so3_exp(axis.normalized() * rng.uniform(0.0, std::numbers::pi));
}

Vec3 random_vec(Rng& rng, double s = 1.0) { return s * Vec3(rng.normal(), rng.normal(), rng.normal()); }

Vec6 random_vec6(Rng& rng) {
  Vec6 u;
  for (int i = 0; i < 6; ++i) u[i] = rng.normal();
  return u;
}

// Block matrices assembled entry by entry, independent of the production code paths.
Mat6 dense_w_matrix(const Pose& t) {
  Mat6 m = Mat6::Zero();
  m.topLeftCorner<3, 3>() = t.rotation;
  m.bottomLeftCorner<3, 3>() = skew(t.position) * t.rotation;
  m.bottomRightCorner<3, 3>() = t.rotation;
  return m.transpose();
}

Mat6 dense_bias_matrix(const Pose& t) {
  Mat6 m = Mat6::Zero();
  m.topLeftCorner<3, 3>() = t.rotation.transpose();
  m.bottomLeftCorner<3, 3>() = -t.rotation.transpose() * skew(t.position);
  m.bottomRightCorner<3, 3>() = t.rotation.transpose();
  return m;
}

double rotation_angle(const Mat3& r) { return std::acos(std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0)); }

MeasurementFrame exact_frame(const Pose& truth, const Twist& twist) {
  ScenarioConfig cfg = noiseless(reference_scenario());
  cfg.twist = [twist](double) { return twist; };
  TrueState s{truth, 0.0, 0};
  Rng rng(1);
  return gen_measurements(s, cfg, rng);
}

}  // namespace

TEST(CorrectionU, ZeroAtTruth) {
  const Pose truth{so3_exp(Vec3(0.2, 0.4, -0.1)), Vec3(1, -2, 0.5)};
  const MeasurementFrame f = exact_frame(truth, Twist{});
  const Vec6 u = correction_U(f, {truth, Twist{}, 0}, FilterGains{});
  EXPECT_LT(u.norm(), 1e-12);
}

TEST(CorrectionU, LandmarkAtIdentity) {
  MeasurementFrame f;
  f.landmarks = {{Vec3(1, 2, 3), Vec3(1, 2, 3)}};
  EXPECT_EQ(correction_U(f, FilterState{}, FilterGains{}), Vec6::Zero());

  f.landmarks = {{Vec3(1, 0, 0), Vec3(0, 1, 0)}};
  Vec6 want;
  want << 0, 0, -0.5, 0.5, -0.5, 0;
  EXPECT_LT((correction_U(f, FilterState{}, FilterGains{}) - want).norm(), 1e-15);
}

TEST(CorrectionU, WeightsScaleTerms) {
  MeasurementFrame f;
  f.landmarks = {{Vec3(1, 0, 0), Vec3(0, 1, 0)}};
  f.vectors = {{Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0, 0, 1), Vec3(1, 0, 0)}};
  FilterGains g;
  const Vec6 base = correction_U(f, FilterState{}, g);
  g.landmark_weights = {2.0};
  g.vector_weights = {3.0};
  const Vec6 weighted = correction_U(f, FilterState{}, g);
  Vec6 lm, vec;
  lm << 0, 0, -0.5, 0.5, -0.5, 0;
  vec = 0.5 * cross6(Vec3(1, 0, 0), 0, Vec3(0, 0, 1), 0);
  EXPECT_LT((base - lm - vec).norm(), 1e-15);
  EXPECT_LT((weighted - 2 * lm - 3 * vec).norm(), 1e-15);
}

TEST(CorrectionU, NormalizedVectorsOption) {
  MeasurementFrame f;
  f.vectors = {{Vec3(0, 0, 2), Vec3(3, 0, 0), Vec3(0, 0, 1), Vec3(1, 0, 0)}};
  FilterGains g;
  const Vec6 raw = correction_U(f, FilterState{}, g);
  g.normalized_vectors = true;
  const Vec6 unit = correction_U(f, FilterState{}, g);
  EXPECT_LT((raw - 6.0 * unit).norm(), 1e-15);
}

TEST(InnovationW, IdentityAndZero) {
  Rng rng(2);
  const Vec6 u = random_vec6(rng);
  EXPECT_EQ(innovation_W(u, FilterState{}), u);
  const FilterState s{{random_rotation(rng), random_vec(rng)}, Twist{}, 0};
  EXPECT_EQ(innovation_W(Vec6::Zero(), s), Vec6::Zero());
}

TEST(InnovationW, MatchesDenseOracle) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const FilterState s{{random_rotation(rng), random_vec(rng, 3.0)}, Twist{}, 0};
    const Vec6 u = random_vec6(rng);
    EXPECT_LT((innovation_W(u, s) - dense_w_matrix(s.estimate) * u).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(BiasRate, IdentityAndZero) {
  Rng rng(4);
  const Vec6 u = random_vec6(rng);
  EXPECT_EQ(bias_rate(u, FilterState{}, 1.0), -u);
  EXPECT_EQ(bias_rate(Vec6::Zero(), FilterState{{random_rotation(rng), random_vec(rng)}, Twist{}, 0}, 2.0),
            Vec6::Zero());
}

TEST(BiasRate, MatchesDenseOracle) {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const FilterState s{{random_rotation(rng), random_vec(rng, 3.0)}, Twist{}, 0};
    const Vec6 u = random_vec6(rng);
    const double gamma = rng.uniform(0.1, 5.0);
    EXPECT_LT((bias_rate(u, s, gamma) + gamma * dense_bias_matrix(s.estimate) * u).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(FilterStep, EquilibriumHolds) {
  ScenarioConfig cfg = noiseless(reference_scenario());
  cfg.bias_omega = Vec3(0.1, -0.1, 0.1);
  cfg.bias_v = Vec3(0.2, 0.5, 0.1);
  cfg.initial_pose = {so3_exp(Vec3(0.3, 0.1, -0.2)), Vec3(0.5, 0.5, 0.0)};
  Simulator sim(cfg);
  FilterState s{cfg.initial_pose, {cfg.bias_omega, cfg.bias_v}, 0};
  const FilterGains g;
  double worst = 0.0;
  for (int k = 0; k < 1500; ++k) {
    s = filter_step(s, sim.measure(), g, 5.0, cfg.dt);
    sim.advance();
    const PoseError e = pose_error(sim.state().pose, s.estimate);
    worst = std::max({worst, (e.rotation - Mat3::Identity()).cwiseAbs().maxCoeff(), e.position.norm()});
    if (k == 99) {
      EXPECT_LT(worst, 1e-9);
    }
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(FilterStep, DeadReckoningWithoutObservations) {
  MeasurementFrame f;
  f.measured_twist = {Vec3(0.3, -0.2, 0.5), Vec3(1, 0, 2)};
  const Twist bias{Vec3(0.01, 0.02, 0.03), Vec3(0.1, 0.0, -0.1)};
  const FilterState s{{so3_exp(Vec3(0.1, 0.2, 0.3)), Vec3(1, 2, 3)}, bias, 0};
  for (std::size_t n : {std::size_t{1}, std::size_t{10}}) {
    FilterGains g;
    g.substeps = n;
    const FilterState next = filter_step(s, f, g, 50.0, 0.01);
    const Pose want = s.estimate * se3_exp(Twist::from_vector(f.measured_twist.vector() - bias.vector()), 0.01);
    EXPECT_LT((next.estimate.matrix() - want.matrix()).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_EQ(next.bias.vector(), bias.vector());
    EXPECT_EQ(next.step, 1u);
  }
}

TEST(FilterStep, SingleSubstepIsTheDisplayedUpdate) {
  Rng rng(8);
  const Pose truth{random_rotation(rng), random_vec(rng)};
  const MeasurementFrame f = exact_frame(truth, {Vec3(0.1, 0.2, 0.3), Vec3(0.3, 0.2, 0.1)});
  const FilterState s{{random_rotation(rng), random_vec(rng)}, Twist{}, 0};
  FilterGains g;
  g.substeps = 1;
  const double K = 3.0, dt = 0.01;
  const Vec6 u = correction_U(f, s, g);
  const Vec6 xi = f.measured_twist.vector() - s.bias.vector() + K * dense_w_matrix(s.estimate) * u;
  const Pose want = s.estimate * se3_exp(Twist::from_vector(xi), dt);
  const FilterState next = filter_step(s, f, g, K, dt);
  EXPECT_LT((next.estimate.matrix() - want.matrix()).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LT((next.bias.vector() + dt * dense_bias_matrix(s.estimate) * u).norm(), 1e-13);
}

TEST(FilterStep, LargerGainMovesFurther) {
  Rng rng(9);
  const Pose truth{random_rotation(rng), random_vec(rng)};
  const MeasurementFrame f = exact_frame(truth, Twist{});
  const FilterState s{{truth.rotation * so3_exp(Vec3(0.2, -0.1, 0.15)), truth.position + Vec3(0.3, 0.1, -0.2)},
                      Twist{}, 0};
  FilterGains g;
  const Pose dead = filter_step(s, MeasurementFrame{}, g, 1.0, 0.001).estimate;
  double prev = -1.0;
  for (double K : {1.0, 10.0, 100.0}) {
    const Pose p = filter_step(s, f, g, K, 0.001).estimate;
    const double d = rotation_angle(p.rotation * dead.rotation.transpose()) + (p.position - dead.position).norm();
    EXPECT_GT(d, prev) << K;
    prev = d;
  }
}

TEST(FilterStep, StaysOnSo3OverLongRun) {
  Simulator sim(reference_scenario());
  FilterState s{reference_initial_estimate(), Twist{}, 0};
  const FilterGains g;
  EXPECT_GT(rotation_defect(s.estimate.rotation), 1e-3);
  for (int k = 0; k < 3000; ++k) {
    s = filter_step(s, sim.measure(), g, 20.0, 0.01);
    sim.advance();
    ASSERT_LT((s.estimate.rotation.transpose() * s.estimate.rotation - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(FilterStep, RejectsBadInput) {
  EXPECT_THROW(filter_step(FilterState{}, MeasurementFrame{}, FilterGains{}, 1.0, 0.0), ValidationError);
  FilterGains g;
  g.gamma = 0.0;
  EXPECT_THROW(g.validate(), ValidationError);
  g = FilterGains{};
  g.landmark_weights = {-1.0};
  EXPECT_THROW(g.validate(), ValidationError);
  g = FilterGains{};
  g.source = FuzzyGain{};
  EXPECT_THROW(g.validate(), ValidationError);
}

TEST(FilterStep, NonFiniteStateRaises) {
  MeasurementFrame f;
  f.measured_twist.v = Vec3(std::nan(""), 0, 0);
  EXPECT_THROW(filter_step(FilterState{}, f, FilterGains{}, 1.0, 0.01), NumericalError);
}

TEST(GainK, OffsetByOne) {
  EXPECT_EQ(gain_K(0.0), 1.0);
  EXPECT_EQ(gain_K(50.0), 51.0);
  EXPECT_EQ(gain_offset(ConstantGain{7.5}, {}), 7.5);
}

TEST(MeasurableError, PerfectEstimateIsZero) {
  const Pose truth{so3_exp(Vec3(0.5, -0.3, 0.2)), Vec3(1, 1, 1)};
  const MeasurementFrame f = exact_frame(truth, Twist{});
  ErrorTracker tr;
  const ErrorSignals s = tr.update(f, {truth, Twist{}, 0}, truth, 0.01);
  EXPECT_LT(s.e, 1e-12);
  EXPECT_EQ(s.de, 0.0);
}

TEST(MeasurableError, RateFromPrevious) {
  const Pose truth = Pose::identity();
  const MeasurementFrame f = exact_frame(truth, Twist{});
  ErrorTracker tr(ErrorMode::Measurable, 10.0);
  const FilterState off{{Mat3::Identity(), Vec3(0.05, 0, 0)}, Twist{}, 0};
  EXPECT_EQ(tr.update(f, off, truth, 0.01).de, 0.0);
  EXPECT_EQ(tr.update(f, off, truth, 0.01).de, 0.0);
  const ErrorSignals s = tr.update(f, {truth, Twist{}, 0}, truth, 0.01);
  EXPECT_NEAR(s.de, 0.2 * 0.05 / (0.01 * 10.0), 1e-12);
  const FilterState far{{Mat3::Identity(), Vec3(5, 0, 0)}, Twist{}, 0};
  EXPECT_EQ(tr.update(f, far, truth, 0.01).de, 1.0);
}

TEST(MeasurableError, HalfTurnClamps) {
  MeasurementFrame f;
  for (const Vec3& v : {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(Vec3(1, 1, 0) / std::sqrt(2.0))})
    f.vectors.push_back({v, v, v, v});
  const FilterState flipped{{so3_exp(Vec3(0, 0, std::numbers::pi)), Vec3::Zero()}, Twist{}, 0};
  EXPECT_NEAR(measurable_error_raw(f, flipped), 1.0, 1e-12);
  f.landmarks = {{Vec3(0, 0, 1), Vec3(0, 0, 1)}};
  const FilterState shifted{{flipped.estimate.rotation, Vec3(0, 0, 0.5)}, Twist{}, 0};
  EXPECT_GT(measurable_error_raw(f, shifted), 1.0);
  ErrorTracker tr;
  EXPECT_EQ(tr.update(f, shifted, Pose::identity(), 0.01).e, 1.0);
}

TEST(OracleError, UsesTrueState) {
  const Pose truth = Pose::identity();
  const FilterState s{{so3_exp(Vec3(0, 0, std::numbers::pi / 3)), Vec3(0, 0.5, 0)}, Twist{}, 0};
  EXPECT_NEAR(oracle_error_raw(truth, s), 0.25 + 0.2 * 0.5, 1e-12);
  EXPECT_THROW(ErrorTracker(ErrorMode::Oracle, 0.0), ValidationError);
}
