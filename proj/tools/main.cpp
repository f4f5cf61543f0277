// countproc: experiment driver for the counting-process library.
//
//   countproc <pmf|simulate|moments|lrd|residuals|oracle-compare> --config FILE
//             [--seed N] [--out PATH] [--threads N]
//
// Exit codes: 0 success, 1 numerical failure, 2 usage or config failure.

#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "countproc/error.hpp"
#include "countproc/parallel.hpp"

namespace {

int fail(int code, const std::string& kind, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = {{"kind", kind}, {"message", message}, {"exit_code", code}};
  std::cerr << j.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized counting and Skellam processes: pmfs, simulation, moments, LRD, residuals"};
  app.require_subcommand(1);

  std::string config_path, out_path;
  std::uint64_t seed = 0;
  int threads = 0;
  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {{"pmf", "state probabilities: CSV n,probability,stderr,method"},
                      {"simulate", "sample paths: CSV path,time,value"},
                      {"moments", "mean, variance and cov(s, t) per time"},
                      {"lrd", "correlation table and power-law fit (JSON + CSV)"},
                      {"residuals", "governing-equation residuals: CSV equation,n,t,residual,tolerance,pass"},
                      {"oracle-compare", "closed forms against independent oracles: pass/fail table"}};
  for (const auto& s : subs) {
    auto* sc = app.add_subcommand(s.name, s.help);
    sc->add_option("--config", config_path, "JSON experiment config")->required();
    sc->add_option("--seed", seed, "override the config seed");
    sc->add_option("--out", out_path, "output path (overrides the config; default stdout)");
    sc->add_option("--threads", threads, "worker threads (default: COUNTPROC_THREADS or all cores)")
        ->check(CLI::NonNegativeNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(2, "UsageError", e.what());
  }

  const std::string command = app.get_subcommands().front()->get_name();
  auto* sc = app.get_subcommands().front();

  cli::ExperimentConfig cfg;
  try {
    cfg = cli::load_config(config_path);
  } catch (const cli::ConfigError& e) {
    return fail(2, "ConfigError", e.what());
  }
  if (sc->count("--seed")) cfg.seed = seed;
  if (sc->count("--out")) cfg.output = out_path;
  if (threads > 0) countproc::set_default_threads(threads);
  const int workers = countproc::default_threads();

  cli::CommandOutput result;
  try {
    if (command == "pmf") result = cli::cmd_pmf(cfg, workers);
    else if (command == "simulate") result = cli::cmd_simulate(cfg, workers);
    else if (command == "moments") result = cli::cmd_moments(cfg, workers);
    else if (command == "lrd") result = cli::cmd_lrd(cfg, workers);
    else if (command == "residuals") result = cli::cmd_residuals(cfg, workers);
    else result = cli::cmd_oracle_compare(cfg, workers);
  } catch (const cli::ConfigError& e) {
    return fail(2, "ConfigError", e.what());
  } catch (const countproc::Error& e) {
    return fail(1, e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail(1, "Failure", e.what());
  }

  try {
    for (const auto& [path, content] : result.files) cli::emit(path, content);
  } catch (const std::exception& e) {
    return fail(1, "IOError", e.what());
  }
  return result.exit_code;
}
