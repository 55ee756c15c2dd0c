#pragma once

// Standard test functions for exercising the optimizer.

#include <cmath>
#include <numbers>
#include <span>
#include <string>

#include "fgpose/errors.hpp"
#include "fgpose/gsa.hpp"

namespace fgpose::bench {

inline double sphere(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

inline double rosenbrock(std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double a = x[i + 1] - x[i] * x[i];
    const double b = 1.0 - x[i];
    s += 100.0 * a * a + b * b;
  }
  return s;
}

inline double rastrigin(std::span<const double> x) {
  double s = 10.0 * static_cast<double>(x.size());
  for (double v : x) s += v * v - 10.0 * std::cos(2.0 * std::numbers::pi * v);
  return s;
}

struct Benchmark {
  CostFunction fn;
  double lo, hi;
};

inline Benchmark by_name(const std::string& name) {
  if (name == "sphere") return {sphere, -5.0, 5.0};
  if (name == "rosenbrock") return {rosenbrock, -5.0, 10.0};
  if (name == "rastrigin") return {rastrigin, -5.12, 5.12};
  throw ConfigError("unknown benchmark '" + name + "' (sphere, rosenbrock, rastrigin)");
}

}  // namespace fgpose::bench
