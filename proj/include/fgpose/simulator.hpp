#pragma once

// Ground-truth rigid-body motion and corrupted vector / landmark / velocity measurements.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

#include "fgpose/errors.hpp"
#include "fgpose/rng.hpp"
#include "fgpose/se3.hpp"

namespace fgpose {

/// Angular 1, −1, 1 / translational 2, 5, 1 sinusoid profile of the reference scenario.
inline Twist true_twist(double t) {
  using std::numbers::pi;
  return {Vec3(std::sin(0.7 * t), 0.7 * std::sin(0.5 * t + pi), 0.5 * std::sin(0.3 * t + pi / 3.0)),
          0.3 * Vec3(std::sin(0.6 * t), std::sin(0.4 * t), std::sin(0.1 * t))};
}

struct VectorSource {
  Vec3 inertial;                // v_i^I
  Vec3 bias = Vec3::Zero();     // b_i^B
  double sigma = 0.0;           // per-axis std-dev of n_i^B
};

struct LandmarkSource {
  Vec3 position;                // p_i^I (m)
  Vec3 bias = Vec3::Zero();     // b̄_i^B
  double sigma = 0.0;
};

struct ScenarioConfig {
  double dt = 0.01;
  double t_final = 15.0;
  Vec3 bias_omega = Vec3::Zero();
  Vec3 bias_v = Vec3::Zero();
  double sigma_omega = 0.0;
  double sigma_v = 0.0;
  std::vector<VectorSource> vectors;
  /// Append v_{n+1} = v_1 × v_2 (inertial and measured body) as an extra observation.
  bool cross_vector = false;
  std::vector<LandmarkSource> landmarks;
  std::uint64_t seed = 1;
  Pose initial_pose = Pose::identity();
  std::function<Twist(double)> twist = true_twist;

  std::size_t steps() const { return static_cast<std::size_t>(std::llround(t_final / dt)); }

  void validate() const {
    if (!(dt > 0.0)) throw ValidationError("dt must be positive");
    if (!(t_final >= dt)) throw ValidationError("t_final must be at least dt");
    if (sigma_omega < 0.0 || sigma_v < 0.0) throw ValidationError("noise std-devs must be non-negative");
    for (const auto& v : vectors)
      if (v.sigma < 0.0) throw ValidationError("vector noise std-dev must be non-negative");
    for (const auto& l : landmarks)
      if (l.sigma < 0.0) throw ValidationError("landmark noise std-dev must be non-negative");
    if (cross_vector && vectors.size() < 2) throw ValidationError("cross_vector needs at least two vectors");
  }
};

/// Measurement set, biases and noise levels of the reference simulation.
inline ScenarioConfig reference_scenario() {
  ScenarioConfig cfg;
  cfg.bias_omega = 0.1 * Vec3(1, -1, 1);
  cfg.bias_v = 0.1 * Vec3(2, 5, 1);
  cfg.sigma_omega = 0.2;
  cfg.sigma_v = 0.1;
  cfg.vectors = {{Vec3(1, -1, 1) / std::sqrt(3.0), 0.1 * Vec3(1, -1, 1), 0.1},
                 {Vec3(0, 0, 1), 0.1 * Vec3(0, 0, 1), 0.1}};
  cfg.cross_vector = true;
  cfg.landmarks = {{Vec3(0.5, std::sqrt(2.0), 1.0), Vec3::Zero(), 0.1}};
  return cfg;
}

/// Same geometry with every bias and noise level zeroed.
inline ScenarioConfig noiseless(ScenarioConfig cfg) {
  cfg.bias_omega.setZero();
  cfg.bias_v.setZero();
  cfg.sigma_omega = cfg.sigma_v = 0.0;
  for (auto& v : cfg.vectors) {
    v.bias.setZero();
    v.sigma = 0.0;
  }
  for (auto& l : cfg.landmarks) {
    l.bias.setZero();
    l.sigma = 0.0;
  }
  return cfg;
}

/// Initial estimate T̂(0) used for the large-error reference run.
inline Pose reference_initial_estimate() {
  Mat3 r;
  // clang-format off
  r << -0.829, 0.293,  0.343,
        0.399, 0.157,  0.903,
        0.210, 0.943, -0.257;
  // clang-format on
  return {r, Vec3(4, -3, 5)};
}

struct TrueState {
  Pose pose;
  double t = 0.0;
  std::size_t step = 0;
};

inline constexpr std::size_t kReorthonormalizeEvery = 1000;

inline TrueState step_true_pose(const TrueState& s, double dt,
                                const std::function<Twist(double)>& twist = true_twist) {
  TrueState next{s.pose * se3_exp(twist(s.t), dt), s.t + dt, s.step + 1};
  if (next.step % kReorthonormalizeEvery == 0) next.pose.rotation = project_to_so3(next.pose.rotation);
  return next;
}

struct VectorMeasurement {
  Vec3 inertial;       // v_i^I
  Vec3 body;           // v_i^B
  Vec3 unit_inertial;  // υ_i^I
  Vec3 unit_body;      // υ_i^B
};

struct LandmarkMeasurement {
  Vec3 inertial;  // p_i^I
  Vec3 body;      // y_i^B
};

struct MeasurementFrame {
  double t = 0.0;
  Twist measured_twist;  // 𝒴_m
  std::vector<VectorMeasurement> vectors;
  std::vector<LandmarkMeasurement> landmarks;
  /// Observations removed because they could not be normalized.
  std::size_t dropped = 0;
};

namespace detail {

inline Vec3 noise3(Rng& rng, double sigma) {
  const double x = rng.normal(sigma);
  const double y = rng.normal(sigma);
  const double z = rng.normal(sigma);
  return {x, y, z};
}

inline bool push_vector(MeasurementFrame& f, const Vec3& inertial, const Vec3& body) {
  try {
    f.vectors.push_back({inertial, body, normalize3(inertial), normalize3(body)});
    return true;
  } catch (const DegenerateMeasurement&) {
    ++f.dropped;
    return false;
  }
}

}  // namespace detail

/// Draw order per frame: Ω noise, V noise, each vector, each landmark (three normals each).
inline MeasurementFrame gen_measurements(const TrueState& s, const ScenarioConfig& cfg, Rng& rng) {
  MeasurementFrame f;
  f.t = s.t;
  const Twist truth = cfg.twist(s.t);
  f.measured_twist.omega = truth.omega + cfg.bias_omega + detail::noise3(rng, cfg.sigma_omega);
  f.measured_twist.v = truth.v + cfg.bias_v + detail::noise3(rng, cfg.sigma_v);

  const Mat3 rt = s.pose.rotation.transpose();
  std::vector<Vec3> body;
  body.reserve(cfg.vectors.size());
  for (const auto& src : cfg.vectors) {
    body.push_back(rt * src.inertial + src.bias + detail::noise3(rng, src.sigma));
    detail::push_vector(f, src.inertial, body.back());
  }
  if (cfg.cross_vector) {
    detail::push_vector(f, cfg.vectors[0].inertial.cross(cfg.vectors[1].inertial), body[0].cross(body[1]));
  }
  for (const auto& src : cfg.landmarks) {
    f.landmarks.push_back(
        {src.position, rt * (src.position - s.pose.position) + src.bias + detail::noise3(rng, src.sigma)});
  }
  return f;
}

enum class Observability { Case1 = 1, Case2 = 2, Case3 = 3, Unobservable = 0 };

inline Observability check_observability(const MeasurementFrame& f) {
  bool non_collinear_pair = false;
  for (std::size_t i = 0; i < f.vectors.size() && !non_collinear_pair; ++i)
    for (std::size_t j = i + 1; j < f.vectors.size(); ++j)
      if (std::abs(f.vectors[i].unit_body.dot(f.vectors[j].unit_body)) < 1.0 - 1e-6) {
        non_collinear_pair = true;
        break;
      }
  const std::size_t nv = f.vectors.size(), nl = f.landmarks.size();
  if (non_collinear_pair && nl >= 1) return Observability::Case1;
  if (nv >= 1 && nl >= 2) return Observability::Case2;
  if (nl >= 3) return Observability::Case3;
  return Observability::Unobservable;
}

/// Truth propagation plus the episode's private measurement stream.
class Simulator {
 public:
  explicit Simulator(ScenarioConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) {
    cfg_.validate();
    state_.pose = cfg_.initial_pose;
  }

  const TrueState& state() const { return state_; }
  const ScenarioConfig& config() const { return cfg_; }

  MeasurementFrame measure() { return gen_measurements(state_, cfg_, rng_); }
  void advance() { state_ = step_true_pose(state_, cfg_.dt, cfg_.twist); }

 private:
  ScenarioConfig cfg_;
  Rng rng_;
  TrueState state_;
};

}  // namespace fgpose
