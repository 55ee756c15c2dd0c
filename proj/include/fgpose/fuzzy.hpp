#pragma once

// Two-input Mamdani controller mapping (error, error rate) to the filter gain offset k_op.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "fgpose/errors.hpp"

namespace fgpose {

struct TriangularMF {
  double a = 0.0;  // left foot
  double b = 0.0;  // peak
  double c = 0.0;  // right foot
};

/// Shoulders (a == b or b == c) evaluate to 1 at the flat end.
inline double tri_mu(double x, const TriangularMF& mf) {
  if (x < mf.a || x > mf.c) return 0.0;
  if (x == mf.b) return 1.0;
  if (x < mf.b) return (x - mf.a) / (mf.b - mf.a);
  return (mf.c - x) / (mf.c - mf.b);
}

enum Term : int { VS = 0, S = 1, M = 2, L = 3, VL = 4 };
inline constexpr int kTerms = 5;

inline const char* term_name(int t) {
  static constexpr const char* names[kTerms] = {"VS", "S", "M", "L", "VL"};
  return names[t];
}

/// Consequent term indexed [Δe term][e term].
using RuleTable = std::array<std::array<Term, kTerms>, kTerms>;

/// The fixed rule base. Rows are Δe and columns are e, both ordered VS..VL.
inline constexpr RuleTable kRuleTable = {{
    //        e: VS  S   M   L   VL
    /* ΔVS */ {VS, S, M, VL, VL},
    /* ΔS  */ {S, M, M, VL, VL},
    /* ΔM  */ {M, M, L, VL, VL},
    /* ΔL  */ {M, L, VL, VL, VL},
    /* ΔVL */ {L, L, VL, VL, VL},
}};

inline constexpr std::size_t kFlcParamCount = 22;

/// k1..k11 shape the shared input partition on [0, 1]; k12..k22 the output partition on [0, 100].
struct FlcParams {
  std::array<double, kFlcParamCount> k{};

  /// 1-based access matching the k1..k22 naming.
  double& operator()(std::size_t i) { return k.at(i - 1); }
  double operator()(std::size_t i) const { return k.at(i - 1); }
  bool operator==(const FlcParams&) const = default;
};

inline constexpr std::array<double, kFlcParamCount> kFlcLower = {
    0.0,                 // k1
    0.0,  0.0,  0.1,     // k2..k4
    0.05, 0.1,  0.1,     // k5..k7
    0.1,  0.2,  0.3,     // k8..k10
    0.2,                 // k11
    0.0,                 // k12
    0.0,  0.0,  5.0,     // k13..k15
    5.0,  10.0, 20.0,    // k16..k18
    20.0, 20.0, 40.0,    // k19..k21
    30.0,                // k22
};

inline constexpr std::array<double, kFlcParamCount> kFlcUpper = {
    0.15,
    0.2,  0.2,  0.2,
    0.2,  0.3,  0.4,
    0.4,  0.8,  0.8,
    0.7,
    10.0,
    10.0, 20.0, 30.0,
    20.0, 50.0, 50.0,
    50.0, 70.0, 90.0,
    70.0,
};

inline FlcParams box_midpoint() {
  FlcParams p;
  for (std::size_t i = 0; i < kFlcParamCount; ++i) p.k[i] = 0.5 * (kFlcLower[i] + kFlcUpper[i]);
  return p;
}

/// Throws ValidationError naming the first parameter outside its box.
inline void check_bounds(const FlcParams& p) {
  for (std::size_t i = 0; i < kFlcParamCount; ++i) {
    if (!std::isfinite(p.k[i]) || p.k[i] < kFlcLower[i] || p.k[i] > kFlcUpper[i]) {
      std::ostringstream os;
      os << "k" << i + 1 << " = " << p.k[i] << " outside bound [" << kFlcLower[i] << ", " << kFlcUpper[i]
         << "]";
      throw ValidationError(os.str());
    }
  }
}

namespace detail {

// Index ranges of the three free triples in each partition.
inline constexpr std::array<std::size_t, 3> kInputTriples = {1, 4, 7};
inline constexpr std::array<std::size_t, 3> kOutputTriples = {12, 15, 18};

inline std::array<TriangularMF, kTerms> partition(const FlcParams& p, std::size_t first, double top) {
  const auto& k = p.k;
  return {{
      {0.0, 0.0, k[first]},
      {k[first + 1], k[first + 2], k[first + 3]},
      {k[first + 4], k[first + 5], k[first + 6]},
      {k[first + 7], k[first + 8], k[first + 9]},
      {k[first + 10], top, top},
  }};
}

// Lowers left feet so that consecutive supports overlap by at least `overlap`,
// never below the parameter's box floor. Indices: the left-foot parameter of S, M, L, VL.
inline void close_gaps(FlcParams& p, std::size_t first, double overlap) {
  auto& k = p.k;
  double frontier = k[first];
  const std::array<std::size_t, 4> left = {first + 1, first + 4, first + 7, first + 10};
  const std::array<std::size_t, 4> right = {first + 3, first + 6, first + 9, first + 10};
  for (std::size_t j = 0; j < 4; ++j) {
    const std::size_t i = left[j];
    if (k[i] >= frontier) k[i] = std::max(kFlcLower[i], frontier - overlap);
    if (j < 3) frontier = std::max(frontier, k[right[j]]);
  }
}

inline std::string uncovered_interval(const std::array<TriangularMF, kTerms>& mfs, double top,
                                      std::size_t grid, const char* universe) {
  double gap_lo = 0.0;
  bool in_gap = false;
  for (std::size_t i = 0; i < grid; ++i) {
    const double x = top * static_cast<double>(i) / static_cast<double>(grid - 1);
    double mu = 0.0;
    for (const auto& mf : mfs) mu = std::max(mu, tri_mu(x, mf));
    if (mu <= 0.0 && !in_gap) {
      in_gap = true;
      gap_lo = x;
    }
    if (mu > 0.0 && in_gap) {
      std::ostringstream os;
      os << universe << " universe uncovered on [" << gap_lo << ", "
         << top * static_cast<double>(i - 1) / static_cast<double>(grid - 1) << "]";
      return os.str();
    }
  }
  if (in_gap) {
    std::ostringstream os;
    os << universe << " universe uncovered on [" << gap_lo << ", " << top << "]";
    return os.str();
  }
  return {};
}

}  // namespace detail

inline constexpr double kInputTop = 1.0;
inline constexpr double kOutputTop = 100.0;
inline constexpr std::size_t kCoverageGrid = 1001;
inline constexpr std::size_t kCentroidGrid = 1001;

/// Clamp into the boxes, sort each triple, then close support gaps between neighbours.
inline FlcParams repair_params(FlcParams p) {
  for (std::size_t i = 0; i < kFlcParamCount; ++i) {
    const double v = std::isfinite(p.k[i]) ? p.k[i] : kFlcLower[i];
    p.k[i] = std::clamp(v, kFlcLower[i], kFlcUpper[i]);
  }
  // Box bounds are non-decreasing inside each triple, so sorting keeps every value in its box.
  for (std::size_t first : detail::kInputTriples) std::sort(p.k.begin() + first, p.k.begin() + first + 3);
  for (std::size_t first : detail::kOutputTriples) std::sort(p.k.begin() + first, p.k.begin() + first + 3);
  detail::close_gaps(p, 0, 1e-3 * kInputTop);
  detail::close_gaps(p, 11, 1e-3 * kOutputTop);
  return p;
}

class FlcModel {
 public:
  const FlcParams& params() const { return params_; }
  const std::array<TriangularMF, kTerms>& input() const { return input_; }
  const std::array<TriangularMF, kTerms>& output() const { return output_; }
  const RuleTable& rules() const { return kRuleTable; }

  /// Output membership of term t at centroid grid point i.
  double output_sample(std::size_t i, int t) const { return samples_[i][static_cast<std::size_t>(t)]; }

  static double grid_point(std::size_t i) {
    return kOutputTop * static_cast<double>(i) / static_cast<double>(kCentroidGrid - 1);
  }

 private:
  friend FlcModel build_model(const FlcParams&);
  FlcParams params_;
  std::array<TriangularMF, kTerms> input_{};
  std::array<TriangularMF, kTerms> output_{};
  std::vector<std::array<double, kTerms>> samples_;
};

/// Throws ValidationError naming the uncovered interval if repair cannot close a gap.
inline FlcModel build_model(const FlcParams& raw) {
  FlcModel m;
  m.params_ = repair_params(raw);
  m.input_ = detail::partition(m.params_, 0, kInputTop);
  m.output_ = detail::partition(m.params_, 11, kOutputTop);
  if (auto gap = detail::uncovered_interval(m.input_, kInputTop, kCoverageGrid, "input"); !gap.empty())
    throw ValidationError(gap);
  if (auto gap = detail::uncovered_interval(m.output_, kOutputTop, kCoverageGrid, "output"); !gap.empty())
    throw ValidationError(gap);
  m.samples_.resize(kCentroidGrid);
  for (std::size_t i = 0; i < kCentroidGrid; ++i)
    for (int t = 0; t < kTerms; ++t) m.samples_[i][t] = tri_mu(FlcModel::grid_point(i), m.output_[t]);
  return m;
}

/// Per-consequent firing strengths: max over rules of min(μ_e, μ_Δe).
inline std::array<double, kTerms> rule_strengths(double e, double de, const FlcModel& model) {
  std::array<double, kTerms> mu_e{}, mu_de{}, fire{};
  for (int t = 0; t < kTerms; ++t) {
    mu_e[t] = tri_mu(e, model.input()[t]);
    mu_de[t] = tri_mu(de, model.input()[t]);
  }
  for (int r = 0; r < kTerms; ++r)
    for (int c = 0; c < kTerms; ++c) {
      const Term out = model.rules()[r][c];
      fire[out] = std::max(fire[out], std::min(mu_e[c], mu_de[r]));
    }
  return fire;
}

/// Centroid of the max-aggregated, min-clipped output sets; 0 if nothing fires.
inline double infer_kop(double e, double de, const FlcModel& model) {
  const auto fire = rule_strengths(std::clamp(e, 0.0, 1.0), std::clamp(de, 0.0, 1.0), model);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < kCentroidGrid; ++i) {
    double mu = 0.0;
    for (int t = 0; t < kTerms; ++t) {
      if (fire[t] > 0.0) mu = std::max(mu, std::min(fire[t], model.output_sample(i, t)));
    }
    num += mu * FlcModel::grid_point(i);
    den += mu;
  }
  return den > 0.0 ? num / den : 0.0;
}

/// K = 1 + k_op.
inline double gain_K(double k_op) { return 1.0 + k_op; }

}  // namespace fgpose
