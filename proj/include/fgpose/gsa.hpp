#pragma once

// Gravitational search over a box-bounded space. Minimization: heavier nodes have lower cost.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include "fgpose/csv.hpp"
#include "fgpose/errors.hpp"
#include "fgpose/rng.hpp"

namespace fgpose {

struct SearchSpace {
  std::vector<std::pair<double, double>> bounds;

  std::size_t dim() const { return bounds.size(); }

  void validate() const {
    if (bounds.empty()) throw ValidationError("search space needs at least one dimension");
    for (const auto& [lo, hi] : bounds)
      if (!(lo <= hi)) throw ValidationError("search space bound with lo > hi");
  }

  static SearchSpace cube(std::size_t dim, double lo, double hi) { return {std::vector(dim, std::pair{lo, hi})}; }
};

struct GsaNode {
  std::vector<double> position;
  std::vector<double> velocity;
  double cost = 0.0;
  double mass = 0.0;   // m_j
  double share = 0.0;  // M̄_j
};

struct GsaConfig {
  std::size_t nodes = 100;
  std::size_t iterations = 250;
  double g0 = 100.0;
  double alpha = 20.0;
  double delta = 1e-9;
  std::uint64_t seed = 1;
  /// Cost evaluations run on this many threads; results do not depend on it.
  std::size_t threads = 1;
  /// Size of the attracting set at iteration t; defaults to N at t = 0 shrinking linearly to 1.
  std::function<std::size_t(std::size_t t)> kbest;

  void validate() const {
    if (nodes < 2) throw ValidationError("GSA needs at least two nodes");
    if (iterations < 1) throw ValidationError("GSA needs at least one iteration");
    if (!(g0 > 0.0)) throw ValidationError("G0 must be positive");
    if (!(alpha >= 0.0)) throw ValidationError("alpha must be non-negative");
    if (!(delta > 0.0)) throw ValidationError("delta must be positive");
  }

  std::size_t kbest_at(std::size_t t) const {
    std::size_t k;
    if (kbest) {
      k = kbest(t);
    } else {
      const double frac = iterations > 1 ? static_cast<double>(t) / static_cast<double>(iterations - 1) : 0.0;
      k = static_cast<std::size_t>(std::llround(static_cast<double>(nodes) - frac * static_cast<double>(nodes - 1)));
    }
    return std::clamp<std::size_t>(k, 1, nodes);
  }
};

struct GsaTraceRow {
  std::size_t iter = 0;
  double best_cost = 0.0;
  double g = 0.0;
};

struct GsaResult {
  std::vector<double> best_position;
  double best_cost = std::numeric_limits<double>::infinity();
  /// Best-so-far after each iteration; non-increasing.
  std::vector<GsaTraceRow> trace;
  std::size_t failed_evaluations = 0;
};

/// G(t) = G0 exp(−α t / T_final).
inline double update_gravity(double g0, double alpha, double t, double t_final) {
  return g0 * std::exp(-alpha * t / t_final);
}

struct Masses {
  std::vector<double> m;
  std::vector<double> share;
};

/// Equal costs give m = 1 and a uniform share 1/N.
inline Masses compute_masses(std::span<const double> costs) {
  const auto [lo, hi] = std::minmax_element(costs.begin(), costs.end());
  const double best = *lo, worst = *hi;
  Masses out{std::vector<double>(costs.size()), std::vector<double>(costs.size())};
  for (std::size_t j = 0; j < costs.size(); ++j)
    out.m[j] = best == worst ? 1.0 : (costs[j] - worst) / (best - worst);
  const double total = std::accumulate(out.m.begin(), out.m.end(), 0.0);
  for (std::size_t j = 0; j < costs.size(); ++j) out.share[j] = out.m[j] / total;
  return out;
}

/// Indices of the `count` lowest-cost nodes, ties broken by index.
inline std::vector<std::size_t> best_indices(const std::vector<GsaNode>& swarm, std::size_t count) {
  std::vector<std::size_t> idx(swarm.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return swarm[a].cost < swarm[b].cost; });
  idx.resize(std::min(count, idx.size()));
  return idx;
}

namespace detail {

// Σ_q rand · G · w_j · M̄_q / (‖x_q − x_j‖ + δ) · (x_q − x_j) over the attractors, with w_j = M̄_j or 1.
template <class RandFn>
std::vector<std::vector<double>> attraction(const std::vector<GsaNode>& swarm, double g, std::size_t kbest_count,
                                            double delta, bool weight_by_own_mass, RandFn&& rand) {
  const auto attractors = best_indices(swarm, kbest_count);
  const std::size_t dim = swarm.empty() ? 0 : swarm.front().position.size();
  std::vector<std::vector<double>> out(swarm.size(), std::vector<double>(dim, 0.0));
  for (std::size_t j = 0; j < swarm.size(); ++j) {
    const auto& xj = swarm[j].position;
    const double own = weight_by_own_mass ? swarm[j].share : 1.0;
    for (std::size_t q : attractors) {
      if (q == j) continue;
      const auto& xq = swarm[q].position;
      double dist2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) dist2 += (xq[k] - xj[k]) * (xq[k] - xj[k]);
      const double scale = rand(j) * g * own * swarm[q].share / (std::sqrt(dist2) + delta);
      for (std::size_t k = 0; k < dim; ++k) out[j][k] += scale * (xq[k] - xj[k]);
    }
  }
  return out;
}

}  // namespace detail

/// Force on node j from each attractor q ∈ Kbest, q ≠ j:
/// rand · G · M̄_j M̄_q / (‖x_q − x_j‖ + δ) · (x_q − x_j). `rand(j)` draws from node j's stream.
template <class RandFn>
std::vector<std::vector<double>> compute_force(const std::vector<GsaNode>& swarm, double g, std::size_t kbest_count,
                                               double delta, RandFn&& rand) {
  return detail::attraction(swarm, g, kbest_count, delta, true, std::forward<RandFn>(rand));
}

/// F_j / M̄_j with the node's own mass cancelled, so it stays defined when M̄_j = 0.
template <class RandFn>
std::vector<std::vector<double>> compute_acceleration(const std::vector<GsaNode>& swarm, double g,
                                                      std::size_t kbest_count, double delta, RandFn&& rand) {
  return detail::attraction(swarm, g, kbest_count, delta, false, std::forward<RandFn>(rand));
}

/// ϑ ← r·ϑ + a ; x ← x + ϑ ; clamp, zeroing velocity on clamped axes.
inline void apply_acceleration(GsaNode& node, std::span<const double> accel, const SearchSpace& space, double r) {
  for (std::size_t k = 0; k < node.position.size(); ++k) {
    node.velocity[k] = r * node.velocity[k] + accel[k];
    node.position[k] += node.velocity[k];
    const auto [lo, hi] = space.bounds[k];
    if (node.position[k] < lo || node.position[k] > hi) {
      node.position[k] = std::clamp(node.position[k], lo, hi);
      node.velocity[k] = 0.0;
    }
  }
}

/// Kinematics from a raw force: a = F/M̄, and a massless node coasts (a = 0).
inline void update_kinematics(GsaNode& node, std::span<const double> force, const SearchSpace& space, double r) {
  std::vector<double> accel(force.size(), 0.0);
  if (node.share > 0.0)
    for (std::size_t k = 0; k < force.size(); ++k) accel[k] = force[k] / node.share;
  apply_acceleration(node, accel, space, r);
}

using CostFunction = std::function<double(std::span<const double>)>;

namespace detail {

struct Evaluation {
  double cost = 0.0;
  bool ok = false;
};

inline std::vector<Evaluation> evaluate_all(const std::vector<GsaNode>& swarm, const CostFunction& cost_fn,
                                            std::size_t threads) {
  std::vector<Evaluation> out(swarm.size());
  auto eval = [&](std::size_t j) {
    try {
      const double c = cost_fn(swarm[j].position);
      out[j] = {c, std::isfinite(c)};
    } catch (const std::exception&) {
      out[j] = {0.0, false};
    }
  };
  threads = std::clamp<std::size_t>(threads, 1, swarm.size());
  if (threads == 1) {
    for (std::size_t j = 0; j < swarm.size(); ++j) eval(j);
    return out;
  }
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < swarm.size(); j = next++) eval(j);
      });
  }
  return out;
}

}  // namespace detail

/// Failed or non-finite evaluations are assigned the iteration's worst successful cost.
inline GsaResult run_gsa(const SearchSpace& space, const CostFunction& cost_fn, const GsaConfig& cfg) {
  space.validate();
  cfg.validate();
  const std::size_t n = cfg.nodes, dim = space.dim();

  std::vector<GsaNode> swarm(n);
  for (std::size_t j = 0; j < n; ++j) {
    Rng init(derive_seed(cfg.seed, j, std::numeric_limits<std::uint64_t>::max()));
    swarm[j].position.resize(dim);
    swarm[j].velocity.assign(dim, 0.0);
    for (std::size_t k = 0; k < dim; ++k) swarm[j].position[k] = init.uniform(space.bounds[k].first, space.bounds[k].second);
  }

  GsaResult result;
  result.trace.reserve(cfg.iterations);
  const double t_final = static_cast<double>(cfg.iterations);

  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    const auto evals = detail::evaluate_all(swarm, cost_fn, cfg.threads);
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& ev : evals)
      if (ev.ok) worst = std::max(worst, ev.cost);
    for (std::size_t j = 0; j < n; ++j) {
      if (evals[j].ok) {
        swarm[j].cost = evals[j].cost;
        if (evals[j].cost < result.best_cost) {
          result.best_cost = evals[j].cost;
          result.best_position = swarm[j].position;
        }
      } else {
        ++result.failed_evaluations;
        swarm[j].cost = std::isfinite(worst) ? worst : 0.0;
      }
    }

    const double g = update_gravity(cfg.g0, cfg.alpha, static_cast<double>(t), t_final);
    result.trace.push_back({t, result.best_cost, g});
    if (t + 1 == cfg.iterations) break;

    std::vector<double> costs(n);
    for (std::size_t j = 0; j < n; ++j) costs[j] = swarm[j].cost;
    const Masses masses = compute_masses(costs);
    for (std::size_t j = 0; j < n; ++j) {
      swarm[j].mass = masses.m[j];
      swarm[j].share = masses.share[j];
    }

    std::vector<Rng> rngs;
    rngs.reserve(n);
    for (std::size_t j = 0; j < n; ++j) rngs.emplace_back(derive_seed(cfg.seed, j, t));
    const auto accel =
        compute_acceleration(swarm, g, cfg.kbest_at(t), cfg.delta, [&](std::size_t j) { return rngs[j].uniform(); });
    for (std::size_t j = 0; j < n; ++j) apply_acceleration(swarm[j], accel[j], space, rngs[j].uniform());
  }

  if (result.best_position.empty()) {
    // Every evaluation failed; report the first node so callers still get a point in the space.
    result.best_position = swarm.front().position;
  }
  return result;
}

/// Columns `iter,best_cost,G`.
inline void write_trace_csv(std::ostream& os, const GsaResult& r) {
  os << "iter,best_cost,G\n";
  for (const auto& row : r.trace) os << row.iter << ',' << format_double(row.best_cost) << ',' << format_double(row.g) << '\n';
}

}  // namespace fgpose
