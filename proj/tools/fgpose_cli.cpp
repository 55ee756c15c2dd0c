#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "fgpose/benchmarks.hpp"
#include "fgpose/harness.hpp"

namespace {

using namespace fgpose;

int run_tune(const std::string& config, const std::string& out, std::optional<std::size_t> nodes,
             std::optional<std::size_t> iters, std::optional<std::uint64_t> seed) {
  RunConfig rc = load_run_config(config);
  if (nodes) rc.gsa.nodes = *nodes;
  if (iters) rc.gsa.iterations = *iters;
  if (seed) rc.seed = *seed;
  rc.gsa.seed = rc.seed;

  const TuneResult res = tune_flc(rc.setup, rc.gsa, rc.weights, rc.seed);
  save_params(out, {res.params, rc.setup.gains.gamma, rc.setup.s_delta, rc.seed});

  const auto trace_path = std::filesystem::path(out).parent_path() / "trace.csv";
  std::ofstream trace(trace_path, std::ios::binary);
  if (!trace) throw std::runtime_error("cannot write '" + trace_path.string() + "'");
  write_trace_csv(trace, res.gsa);

  std::cerr << "best cost " << format_double(res.gsa.best_cost) << " after " << res.gsa.trace.size()
            << " iterations (" << res.gsa.failed_evaluations << " failed evaluations)\n";
  return 0;
}

GainSource parse_gain_mode(const std::string& mode, const FlcParams& params) {
  if (mode == "fuzzy") return FuzzyGain{std::make_shared<const FlcModel>(build_model(params))};
  const std::string prefix = "constant:";
  if (mode.rfind(prefix, 0) == 0) {
    const double K = parse_double(mode.substr(prefix.size()));
    if (!(K >= 1.0)) throw ValidationError("constant gain K must be at least 1");
    return ConstantGain{K - 1.0};
  }
  throw ConfigError("gain mode must be 'fuzzy' or 'constant:<K>', got '" + mode + "'");
}

int run_simulate(const std::string& params_path, const std::string& config, const std::string& out,
                 std::optional<std::uint64_t> seed, const std::string& gain_mode,
                 std::optional<std::string> error_mode) {
  RunConfig rc = load_run_config(config);
  const ParamsFile pf = load_params(params_path);
  if (pf.gamma) rc.setup.gains.gamma = *pf.gamma;
  if (pf.s_delta) rc.setup.s_delta = *pf.s_delta;
  if (error_mode) rc.setup.error_mode = parse_error_mode(*error_mode);
  rc.setup.gains.source = parse_gain_mode(gain_mode, pf.params);

  const EpisodeSeries series = run_episode(rc.setup, seed.value_or(rc.seed));
  export_csv(series, out);
  const CostTerms c = episode_cost_terms(series, rc.weights);
  std::cerr << "e_tr " << format_double(c.transient) << "  e_ss " << format_double(c.steady) << "  cost "
            << format_double(c.total) << '\n';
  return 0;
}

int run_bench(const std::string& function, std::size_t dim, std::size_t iters, std::uint64_t seed,
              std::size_t nodes, const std::string& out) {
  const bench::Benchmark b = bench::by_name(function);
  GsaConfig cfg;
  cfg.nodes = nodes;
  cfg.iterations = iters;
  cfg.seed = seed;
  const GsaResult r = run_gsa(SearchSpace::cube(dim, b.lo, b.hi), b.fn, cfg);
  if (out.empty()) {
    write_trace_csv(std::cout, r);
  } else {
    std::ofstream os(out, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write '" + out + "'");
    write_trace_csv(os, r);
  }
  std::cerr << function << " best " << format_double(r.best_cost) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fuzzy-gain pose filter: tuning, simulation and optimizer benchmarks"};
  app.require_subcommand(1);

  std::string config, out, params, gain_mode = "fuzzy", function;
  std::optional<std::size_t> nodes, iters;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> error_mode;
  std::size_t dim = 5, bench_iters = 250, bench_nodes = 30;
  std::uint64_t bench_seed = 1;

  auto* tune = app.add_subcommand("tune", "search fuzzy membership parameters");
  tune->add_option("--config", config, "run configuration")->required()->check(CLI::ExistingFile);
  tune->add_option("--out", out, "params file to write")->required();
  tune->add_option("--nodes", nodes, "swarm size");
  tune->add_option("--iters", iters, "iterations");
  tune->add_option("--seed", seed, "noise seed shared by all candidates");

  auto* sim = app.add_subcommand("simulate", "run one episode and export the series");
  sim->add_option("--params", params, "params file")->required()->check(CLI::ExistingFile);
  sim->add_option("--config", config, "run configuration")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", out, "series CSV to write")->required();
  sim->add_option("--seed", seed, "noise seed");
  sim->add_option("--gain-mode", gain_mode, "fuzzy or constant:<K>");
  sim->add_option("--error-mode", error_mode, "measurable or oracle");

  auto* bench_cmd = app.add_subcommand("gsa-bench", "run the optimizer on a test function");
  bench_cmd->add_option("--function", function, "sphere, rosenbrock or rastrigin")->required();
  bench_cmd->add_option("--dim", dim, "dimension");
  bench_cmd->add_option("--iters", bench_iters, "iterations");
  bench_cmd->add_option("--seed", bench_seed, "seed");
  bench_cmd->add_option("--nodes", bench_nodes, "swarm size");
  bench_cmd->add_option("--out", out, "trace CSV (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*tune) return run_tune(config, out, nodes, iters, seed);
    if (*sim) return run_simulate(params, config, out, seed, gain_mode, error_mode);
    return run_bench(function, dim, bench_iters, bench_seed, bench_nodes, out);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "invalid value: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
