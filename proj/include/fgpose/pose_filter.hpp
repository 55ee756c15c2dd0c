#pragma once

// Nonlinear complementary pose filter on SE(3) with velocity-bias adaptation and a
// gain K = 1 + k_op that can be recomputed every step.

#include <algorithm>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "fgpose/errors.hpp"
#include "fgpose/fuzzy.hpp"
#include "fgpose/se3.hpp"
#include "fgpose/simulator.hpp"

namespace fgpose {

struct FilterState {
  Pose estimate;  // T̂
  Twist bias;     // b̂
  std::size_t step = 0;
};

struct ConstantGain {
  double k_op = 0.0;
};

struct FuzzyGain {
  std::shared_ptr<const FlcModel> model;
};

using GainSource = std::variant<ConstantGain, FuzzyGain>;

struct FilterGains {
  double gamma = 1.0;
  /// s_i^L and s_i^R; missing entries default to 1.
  std::vector<double> landmark_weights;
  std::vector<double> vector_weights;
  /// Feed υ (unit) instead of raw v into the correction term.
  bool normalized_vectors = false;
  /// Correction sub-steps per sample. One sub-step is the plain single-exponential update.
  std::size_t substeps = 10;
  GainSource source = ConstantGain{};

  void validate() const {
    if (!(gamma > 0.0)) throw ValidationError("gamma must be positive");
    if (substeps < 1) throw ValidationError("substeps must be at least 1");
    for (double w : landmark_weights)
      if (!(w > 0.0)) throw ValidationError("landmark weights must be positive");
    for (double w : vector_weights)
      if (!(w > 0.0)) throw ValidationError("vector weights must be positive");
    if (const auto* c = std::get_if<ConstantGain>(&source); c && !(c->k_op >= 0.0))
      throw ValidationError("constant k_op must be non-negative");
    if (const auto* f = std::get_if<FuzzyGain>(&source); f && !f->model)
      throw ValidationError("fuzzy gain source without a model");
  }
};

namespace detail {
inline double weight_at(const std::vector<double>& w, std::size_t i) { return i < w.size() ? w[i] : 1.0; }
}  // namespace detail

/// U = ½ Σ s^L T̂[y;1] ^ [p;1] + ½ Σ s^R T̂[v^B;0] ^ [v^I;0].
inline Vec6 correction_U(const MeasurementFrame& frame, const FilterState& state, const FilterGains& gains) {
  Vec6 u = Vec6::Zero();
  const Pose& t = state.estimate;
  for (std::size_t i = 0; i < frame.landmarks.size(); ++i) {
    const auto& lm = frame.landmarks[i];
    u += 0.5 * detail::weight_at(gains.landmark_weights, i) *
         cross6(t.transform_point(lm.body), 1.0, lm.inertial, 1.0);
  }
  for (std::size_t i = 0; i < frame.vectors.size(); ++i) {
    const auto& vm = frame.vectors[i];
    const Vec3& body = gains.normalized_vectors ? vm.unit_body : vm.body;
    const Vec3& inertial = gains.normalized_vectors ? vm.unit_inertial : vm.inertial;
    u += 0.5 * detail::weight_at(gains.vector_weights, i) *
         cross6(t.transform_direction(body), 0.0, inertial, 0.0);
  }
  return u;
}

/// W = [R̂ 0; [P̂]× R̂  R̂]ᵀ U.
inline Vec6 innovation_W(const Vec6& u, const FilterState& state) {
  const Mat3 rt = state.estimate.rotation.transpose();
  const Vec3 uo = u.head<3>(), uv = u.tail<3>();
  Vec6 w;
  w << rt * (uo - state.estimate.position.cross(uv)), rt * uv;
  return w;
}

/// d b̂/dt = −γ [R̂ᵀ 0; −R̂ᵀ[P̂]×  R̂ᵀ] U.
inline Vec6 bias_rate(const Vec6& u, const FilterState& state, double gamma) {
  const Mat3 rt = state.estimate.rotation.transpose();
  const Vec3 uo = u.head<3>(), uv = u.tail<3>();
  Vec6 r;
  r << rt * uo, rt * (uv - state.estimate.position.cross(uo));
  return -gamma * r;
}

/// The displayed update over one step h: T̂ ← T̂·exp((𝒴_m − b̂ + K·W) h), b̂ ← b̂ + h·ḃ̂.
inline FilterState filter_substep(const FilterState& state, const MeasurementFrame& frame, const FilterGains& gains,
                                  double K, double h) {
  const Vec6 u = correction_U(frame, state, gains);
  const Vec6 w = innovation_W(u, state);
  const Vec6 xi = frame.measured_twist.vector() - state.bias.vector() + K * w;
  FilterState next = state;
  next.estimate = state.estimate * se3_exp(Twist::from_vector(xi), h);
  next.bias = Twist::from_vector(state.bias.vector() + h * bias_rate(u, state, gains.gamma));
  return next;
}

/// Correction flow K·W and bias adaptation only, against a frame taken at the current time.
inline FilterState correction_substep(const FilterState& state, const MeasurementFrame& frame,
                                      const FilterGains& gains, double K, double h) {
  const Vec6 u = correction_U(frame, state, gains);
  FilterState next = state;
  next.estimate = state.estimate * se3_exp(Twist::from_vector(K * innovation_W(u, state)), h);
  next.bias = Twist::from_vector(state.bias.vector() + h * bias_rate(u, state, gains.gamma));
  return next;
}

/// Advances T̂ and b̂ over one sample period dt with gain K = 1 + k_op.
/// An input rotation off SO(3) by more than kRotationTolerance is projected first.
/// With one sub-step this is the displayed update. With n > 1 the correction and bias flow are
/// integrated in n pieces against the sample's frame, then T̂ is propagated by exp((𝒴_m − b̂) dt).
inline FilterState filter_step(const FilterState& state, const MeasurementFrame& frame,
                               const FilterGains& gains, double K, double dt) {
  if (!(dt > 0.0)) throw ValidationError("dt must be positive");
  FilterState start = state;
  if (!(rotation_defect(start.estimate.rotation) <= kRotationTolerance))
    start.estimate.rotation = project_to_so3(start.estimate.rotation);
  FilterState next;
  if (gains.substeps == 1) {
    next = filter_substep(start, frame, gains, K, dt);
  } else {
    const double h = dt / static_cast<double>(gains.substeps);
    next = start;
    for (std::size_t i = 0; i < gains.substeps; ++i) next = correction_substep(next, frame, gains, K, h);
    const Vec6 drift = frame.measured_twist.vector() - start.bias.vector();
    next.estimate = next.estimate * se3_exp(Twist::from_vector(drift), dt);
  }
  next.step = state.step + 1;
  if (next.step % kReorthonormalizeEvery == 0)
    next.estimate.rotation = project_to_so3(next.estimate.rotation);
  if (!is_finite(next.estimate) || !next.bias.vector().allFinite())
    throw NumericalError("filter state became non-finite at step " + std::to_string(next.step));
  return next;
}

struct ErrorSignals {
  double e = 0.0;
  double de = 0.0;
};

enum class ErrorMode { Measurable, Oracle };

inline constexpr double kPositionErrorWeight = 0.2;

/// Unclamped error visible to the filter: mean vector misalignment plus weighted landmark residual.
inline double measurable_error_raw(const MeasurementFrame& frame, const FilterState& state) {
  const Mat3 rt = state.estimate.rotation.transpose();
  double att = 0.0, pos = 0.0;
  for (const auto& vm : frame.vectors) att += 0.5 * (1.0 - (rt * vm.unit_inertial).dot(vm.unit_body));
  for (const auto& lm : frame.landmarks) pos += (rt * (lm.inertial - state.estimate.position) - lm.body).norm();
  if (!frame.vectors.empty()) att /= static_cast<double>(frame.vectors.size());
  if (!frame.landmarks.empty()) pos /= static_cast<double>(frame.landmarks.size());
  return att + kPositionErrorWeight * pos;
}

inline double oracle_error_raw(const Pose& truth, const FilterState& state) {
  const PoseError err = pose_error(truth, state.estimate);
  return attitude_error_norm(err.rotation) + kPositionErrorWeight * err.position.norm();
}

/// Produces (e, Δe) on [0,1]² and remembers the previous e. The first call reports Δe = 0.
class ErrorTracker {
 public:
  explicit ErrorTracker(ErrorMode mode = ErrorMode::Measurable, double rate_scale = 10.0)
      : mode_(mode), rate_scale_(rate_scale) {
    if (!(rate_scale > 0.0)) throw ValidationError("s_delta must be positive");
  }

  ErrorSignals update(const MeasurementFrame& frame, const FilterState& state, const Pose& truth, double dt) {
    const double raw = mode_ == ErrorMode::Oracle ? oracle_error_raw(truth, state)
                                                  : measurable_error_raw(frame, state);
    const double e = std::min(1.0, raw);
    const double prev = prev_.value_or(e);
    prev_ = e;
    return {e, std::min(1.0, std::abs(e - prev) / (dt * rate_scale_))};
  }

  ErrorMode mode() const { return mode_; }

 private:
  ErrorMode mode_;
  double rate_scale_;
  std::optional<double> prev_;
};

/// k_op for this step's error signals.
inline double gain_offset(const GainSource& source, const ErrorSignals& sig) {
  if (const auto* c = std::get_if<ConstantGain>(&source)) return c->k_op;
  return infer_kop(sig.e, sig.de, *std::get<FuzzyGain>(source).model);
}

}  // namespace fgpose
