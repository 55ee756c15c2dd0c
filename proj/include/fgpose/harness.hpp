#pragma once

// Episode runner, windowed pose-error cost, GSA tuning of the fuzzy gain, and file I/O.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fgpose/csv.hpp"
#include "fgpose/errors.hpp"
#include "fgpose/fuzzy.hpp"
#include "fgpose/gsa.hpp"
#include "fgpose/keyvalue.hpp"
#include "fgpose/pose_filter.hpp"
#include "fgpose/se3.hpp"
#include "fgpose/simulator.hpp"

namespace fgpose {

struct EpisodeRow {
  double t = 0.0;
  EulerZYX euler_true, euler_est;
  Vec3 pos_true = Vec3::Zero(), pos_est = Vec3::Zero();
  double err_att = 0.0;  // ‖R̃‖_I
  double err_pos = 0.0;  // ‖P̃‖
  double e = 0.0, de = 0.0;
  double kop = 0.0, K = 1.0;
};

struct EpisodeSeries {
  double dt = 0.01;
  std::vector<EpisodeRow> rows;
  /// FNV-1a over every measurement the filter consumed.
  std::uint64_t measurement_hash = 0;
  /// Final bias estimate b̂.
  Twist final_bias;
};

struct EpisodeSetup {
  ScenarioConfig scenario = reference_scenario();
  Pose initial_estimate = reference_initial_estimate();
  FilterGains gains;
  ErrorMode error_mode = ErrorMode::Measurable;
  double s_delta = 10.0;
};

namespace detail {

class Fnv1a {
 public:
  void add(double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    for (int i = 0; i < 8; ++i) {
      h_ ^= (bits >> (8 * i)) & 0xFFu;
      h_ *= 0x100000001B3ull;
    }
  }
  void add(const Vec3& v) {
    add(v.x());
    add(v.y());
    add(v.z());
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xCBF29CE484222325ull;
};

inline void hash_frame(Fnv1a& h, const MeasurementFrame& f) {
  h.add(f.measured_twist.omega);
  h.add(f.measured_twist.v);
  for (const auto& v : f.vectors) h.add(v.body);
  for (const auto& l : f.landmarks) h.add(l.body);
}

}  // namespace detail

/// Runs t = 0 … t_final on the dt grid with b̂(0) = 0. `seed` replaces the scenario seed.
inline EpisodeSeries run_episode(const EpisodeSetup& setup, std::uint64_t seed) {
  setup.gains.validate();
  ScenarioConfig cfg = setup.scenario;
  cfg.seed = seed;
  Simulator sim(cfg);
  FilterState state{setup.initial_estimate, Twist{}, 0};
  ErrorTracker tracker(setup.error_mode, setup.s_delta);
  detail::Fnv1a hash;

  const std::size_t steps = cfg.steps();
  EpisodeSeries series;
  series.dt = cfg.dt;
  series.rows.reserve(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    const MeasurementFrame frame = sim.measure();
    if (k == 0 && check_observability(frame) == Observability::Unobservable)
      throw ConfigError("measurement set is not pose-observable at t = 0");
    detail::hash_frame(hash, frame);

    const Pose& truth = sim.state().pose;
    const ErrorSignals sig = tracker.update(frame, state, truth, cfg.dt);
    const double kop = gain_offset(setup.gains.source, sig);
    const double K = gain_K(kop);

    const PoseError err = pose_error(truth, state.estimate);
    EpisodeRow row;
    row.t = static_cast<double>(k) * cfg.dt;
    row.euler_true = euler_zyx(truth.rotation);
    row.euler_est = euler_zyx(state.estimate.rotation);
    row.pos_true = truth.position;
    row.pos_est = state.estimate.position;
    row.err_att = attitude_error_norm(err.rotation);
    row.err_pos = err.position.norm();
    row.e = sig.e;
    row.de = sig.de;
    row.kop = kop;
    row.K = K;
    series.rows.push_back(row);

    if (k == steps) break;
    state = filter_step(state, frame, setup.gains, K, cfg.dt);
    sim.advance();
  }
  series.measurement_hash = hash.value();
  series.final_bias = state.bias;
  return series;
}

struct CostWeights {
  double transient_weight = 0.3;
  double position_weight = 0.2;
  double transient_begin = 0.0, transient_end = 1.0;
  double steady_begin = 4.0, steady_end = 14.0;

  void validate() const {
    if (!(transient_weight > 0.0) || !(position_weight > 0.0)) throw ValidationError("cost weights must be positive");
    if (!(transient_begin <= transient_end) || !(steady_begin <= steady_end))
      throw ValidationError("cost window with begin > end");
  }
};

struct CostTerms {
  double transient = 0.0;  // e_tr
  double steady = 0.0;     // e_ss
  double total = 0.0;      // w_tr·e_tr + e_ss
};

/// Sums over grid samples with both window endpoints included.
inline CostTerms episode_cost_terms(const EpisodeSeries& series, const CostWeights& w = {}) {
  w.validate();
  const double eps = 1e-6 * series.dt;
  if (series.rows.empty() || series.rows.back().t + eps < std::max(w.steady_end, w.transient_end))
    throw ValidationError("series ends before the cost windows close");
  auto in = [eps](double t, double lo, double hi) { return t >= lo - eps && t <= hi + eps; };
  double tr_att = 0.0, tr_pos = 0.0, ss_att = 0.0, ss_pos = 0.0;
  for (const auto& r : series.rows) {
    if (in(r.t, w.transient_begin, w.transient_end)) {
      tr_att += r.err_att;
      tr_pos += r.err_pos;
    }
    if (in(r.t, w.steady_begin, w.steady_end)) {
      ss_att += r.err_att;
      ss_pos += r.err_pos;
    }
  }
  CostTerms c;
  c.transient = tr_att + w.position_weight * tr_pos;
  c.steady = ss_att + w.position_weight * ss_pos;
  c.total = w.transient_weight * c.transient + c.steady;
  return c;
}

inline double episode_cost(const EpisodeSeries& series, const CostWeights& w = {}) {
  return episode_cost_terms(series, w).total;
}

inline SearchSpace flc_search_space() {
  SearchSpace s;
  for (std::size_t i = 0; i < kFlcParamCount; ++i) s.bounds.emplace_back(kFlcLower[i], kFlcUpper[i]);
  return s;
}

inline EpisodeSetup with_gain(EpisodeSetup setup, GainSource source) {
  setup.gains.source = std::move(source);
  return setup;
}

inline EpisodeSetup with_fuzzy(const EpisodeSetup& setup, const FlcParams& p) {
  return with_gain(setup, FuzzyGain{std::make_shared<const FlcModel>(build_model(p))});
}

/// Cost of one candidate on the shared noise realization `seed`.
inline double candidate_cost(const FlcParams& p, const EpisodeSetup& setup, const CostWeights& w,
                             std::uint64_t seed) {
  return episode_cost(run_episode(with_fuzzy(setup, p), seed), w);
}

struct TuneResult {
  FlcParams params;  // repaired
  GsaResult gsa;
};

/// Every candidate sees the measurement stream of `seed` (common random numbers).
inline TuneResult tune_flc(const EpisodeSetup& setup, const GsaConfig& gsa, const CostWeights& w,
                           std::uint64_t seed) {
  const CostFunction cost = [&](std::span<const double> x) {
    FlcParams p;
    std::copy(x.begin(), x.end(), p.k.begin());
    return candidate_cost(p, setup, w, seed);
  };
  TuneResult out;
  out.gsa = run_gsa(flc_search_space(), cost, gsa);
  std::copy(out.gsa.best_position.begin(), out.gsa.best_position.end(), out.params.k.begin());
  out.params = repair_params(out.params);
  return out;
}

// ---------------------------------------------------------------------------
// Params file

struct ParamsFile {
  FlcParams params;
  std::optional<double> gamma;
  std::optional<double> s_delta;
  std::optional<std::uint64_t> seed;
};

inline void write_params(std::ostream& os, const ParamsFile& f) {
  os << "# fuzzy gain membership parameters\n";
  for (std::size_t i = 1; i <= kFlcParamCount; ++i) os << 'k' << i << " = " << format_double(f.params(i)) << '\n';
  if (f.gamma) os << "gamma = " << format_double(*f.gamma) << '\n';
  if (f.s_delta) os << "s_delta = " << format_double(*f.s_delta) << '\n';
  if (f.seed) os << "seed = " << *f.seed << '\n';
}

inline void save_params(const std::string& path, const ParamsFile& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path + "'");
  write_params(os, f);
  if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

inline ParamsFile read_params(const KeyValueFile& kv) {
  ParamsFile f;
  for (std::size_t i = 1; i <= kFlcParamCount; ++i) f.params(i) = kv.get_double("k" + std::to_string(i));
  if (kv.has("gamma")) f.gamma = kv.get_double("gamma");
  if (kv.has("s_delta")) f.s_delta = kv.get_double("s_delta");
  if (kv.has("seed")) f.seed = kv.get_uint("seed");
  kv.reject_unused();
  check_bounds(f.params);
  return f;
}

inline ParamsFile load_params(const std::string& path) {
  const KeyValueFile kv = KeyValueFile::load(path);
  try {
    return read_params(kv);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Episode CSV

inline constexpr const char* kSeriesHeader =
    "t,phi_true,theta_true,psi_true,phi_est,theta_est,psi_est,x_true,y_true,z_true,x_est,y_est,z_est,"
    "err_att,err_pos,e,de,kop,K";

inline void write_series_csv(std::ostream& os, const EpisodeSeries& s) {
  os << kSeriesHeader << '\n';
  for (const auto& r : s.rows) {
    const double vals[] = {r.t,
                           r.euler_true.roll, r.euler_true.pitch, r.euler_true.yaw,
                           r.euler_est.roll, r.euler_est.pitch, r.euler_est.yaw,
                           r.pos_true.x(), r.pos_true.y(), r.pos_true.z(),
                           r.pos_est.x(), r.pos_est.y(), r.pos_est.z(),
                           r.err_att, r.err_pos, r.e, r.de, r.kop, r.K};
    bool first = true;
    for (double v : vals) {
      if (!first) os << ',';
      os << format_double(v);
      first = false;
    }
    os << '\n';
  }
}

inline void export_csv(const EpisodeSeries& s, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path + "'");
  write_series_csv(os, s);
  if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

inline EpisodeSeries read_series_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSeriesHeader) throw ParseError("unexpected series header", 1);
  EpisodeSeries s;
  int n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    std::vector<double> v;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      v.push_back(parse_double(std::string_view(line).substr(start, comma - start), n));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (v.size() != 19) throw ParseError("expected 19 columns", n);
    EpisodeRow r;
    r.t = v[0];
    r.euler_true = {v[1], v[2], v[3]};
    r.euler_est = {v[4], v[5], v[6]};
    r.pos_true = {v[7], v[8], v[9]};
    r.pos_est = {v[10], v[11], v[12]};
    r.err_att = v[13];
    r.err_pos = v[14];
    r.e = v[15];
    r.de = v[16];
    r.kop = v[17];
    r.K = v[18];
    s.rows.push_back(r);
  }
  if (s.rows.size() > 1) s.dt = s.rows[1].t - s.rows[0].t;
  return s;
}

inline EpisodeSeries import_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return read_series_csv(in);
}

// ---------------------------------------------------------------------------
// Run configuration (scenario + filter + search settings)

struct RunConfig {
  EpisodeSetup setup;
  GsaConfig gsa;
  CostWeights weights;
  std::uint64_t seed = 1;
};

namespace detail {

inline Vec3 as_vec3(const KeyValueFile& kv, const std::string& key) {
  const auto v = kv.get_list(key);
  if (v.size() != 3) throw ParseError("'" + key + "' needs 3 values", kv.entry(key).line);
  return {v[0], v[1], v[2]};
}

inline ErrorMode parse_error_mode(const std::string& s) {
  if (s == "measurable") return ErrorMode::Measurable;
  if (s == "oracle") return ErrorMode::Oracle;
  throw ParseError("error mode must be 'measurable' or 'oracle', got '" + s + "'");
}

}  // namespace detail

inline ErrorMode parse_error_mode(const std::string& s) { return detail::parse_error_mode(s); }

/// Unset keys keep the reference-scenario defaults. vectorN_* / landmarkN_* (N = 1, 2, …) replace the default lists.
inline RunConfig read_run_config(const KeyValueFile& kv) {
  RunConfig rc;
  rc.gsa.nodes = 20;
  rc.gsa.iterations = 30;
  rc.gsa.threads = std::max(1u, std::thread::hardware_concurrency());
  ScenarioConfig& sc = rc.setup.scenario;
  sc.dt = kv.get_double("dt", sc.dt);
  sc.t_final = kv.get_double("t_final", sc.t_final);
  sc.sigma_omega = kv.get_double("sigma_omega", sc.sigma_omega);
  sc.sigma_v = kv.get_double("sigma_v", sc.sigma_v);
  if (kv.has("bias_omega")) sc.bias_omega = detail::as_vec3(kv, "bias_omega");
  if (kv.has("bias_v")) sc.bias_v = detail::as_vec3(kv, "bias_v");
  sc.cross_vector = kv.get_bool("cross_vector", sc.cross_vector);

  if (kv.has("vector1_inertial")) {
    sc.vectors.clear();
    for (int i = 1; kv.has("vector" + std::to_string(i) + "_inertial"); ++i) {
      const std::string p = "vector" + std::to_string(i) + "_";
      VectorSource v{detail::as_vec3(kv, p + "inertial")};
      if (kv.has(p + "bias")) v.bias = detail::as_vec3(kv, p + "bias");
      v.sigma = kv.get_double(p + "sigma", 0.0);
      sc.vectors.push_back(v);
    }
  }
  if (kv.has("landmark1_position")) {
    sc.landmarks.clear();
    for (int i = 1; kv.has("landmark" + std::to_string(i) + "_position"); ++i) {
      const std::string p = "landmark" + std::to_string(i) + "_";
      LandmarkSource l{detail::as_vec3(kv, p + "position")};
      if (kv.has(p + "bias")) l.bias = detail::as_vec3(kv, p + "bias");
      l.sigma = kv.get_double(p + "sigma", 0.0);
      sc.landmarks.push_back(l);
    }
  }
  if (kv.has("initial_estimate")) {
    const auto v = kv.get_list("initial_estimate");
    if (v.size() != 12) throw ParseError("'initial_estimate' needs 12 values (3x4 row-major)", kv.entry("initial_estimate").line);
    Pose p;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) p.rotation(r, c) = v[4 * r + c];
      p.position[r] = v[4 * r + 3];
    }
    rc.setup.initial_estimate = p;
  }

  rc.setup.gains.gamma = kv.get_double("gamma", rc.setup.gains.gamma);
  rc.setup.gains.normalized_vectors = kv.get_bool("normalized_vectors", false);
  rc.setup.s_delta = kv.get_double("s_delta", rc.setup.s_delta);
  if (kv.has("error_mode")) rc.setup.error_mode = detail::parse_error_mode(kv.get_string("error_mode"));
  rc.seed = kv.get_uint("seed", rc.seed);

  rc.gsa.nodes = kv.get_uint("nodes", rc.gsa.nodes);
  rc.gsa.iterations = kv.get_uint("iters", rc.gsa.iterations);
  rc.gsa.g0 = kv.get_double("g0", rc.gsa.g0);
  rc.gsa.alpha = kv.get_double("alpha", rc.gsa.alpha);
  rc.gsa.delta = kv.get_double("delta", rc.gsa.delta);
  rc.gsa.threads = kv.get_uint("threads", rc.gsa.threads);

  rc.weights.transient_weight = kv.get_double("w_tr", rc.weights.transient_weight);
  rc.weights.position_weight = kv.get_double("w_p", rc.weights.position_weight);
  kv.reject_unused();

  sc.validate();
  rc.setup.gains.validate();
  rc.weights.validate();
  if (!(rc.setup.s_delta > 0.0)) throw ValidationError("s_delta must be positive");
  return rc;
}

inline RunConfig load_run_config(const std::string& path) {
  const KeyValueFile kv = KeyValueFile::load(path);
  try {
    return read_run_config(kv);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace fgpose
