#ifndef COUNTPROC_TOOLS_CONFIG_HPP
#define COUNTPROC_TOOLS_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "countproc/error.hpp"
#include "countproc/gcp.hpp"
#include "countproc/skellam.hpp"
#include "countproc/subordinators.hpp"
#include "countproc/timechange.hpp"

namespace cli {

constexpr int kConfigVersion = 1;

/// Usage or config failure (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Process { gcp, gfcp, gsp, gfsp, tcgcp1, tcgfcp1, tcgcp2, tcgfcp2 };
enum class Method { exact, quadrature, mc };

inline const char* process_name(Process p) {
  switch (p) {
    case Process::gcp: return "gcp";
    case Process::gfcp: return "gfcp";
    case Process::gsp: return "gsp";
    case Process::gfsp: return "gfsp";
    case Process::tcgcp1: return "tcgcp1";
    case Process::tcgfcp1: return "tcgfcp1";
    case Process::tcgcp2: return "tcgcp2";
    case Process::tcgfcp2: return "tcgfcp2";
  }
  return "?";
}

inline const char* method_name(Method m) {
  switch (m) {
    case Method::exact: return "exact";
    case Method::quadrature: return "quadrature";
    case Method::mc: return "mc";
  }
  return "?";
}

inline bool is_skellam(Process p) { return p == Process::gsp || p == Process::gfsp; }
inline bool is_timechanged(Process p) {
  return p == Process::tcgcp1 || p == Process::tcgfcp1 || p == Process::tcgcp2 || p == Process::tcgfcp2;
}
inline bool is_inverse(Process p) { return p == Process::tcgcp2 || p == Process::tcgfcp2; }
/// Processes whose clock includes the inverse stable layer.
inline bool is_fractional(Process p) {
  return p == Process::gfcp || p == Process::gfsp || p == Process::tcgfcp1 || p == Process::tcgfcp2;
}

struct ExperimentConfig {
  Process process = Process::gcp;
  std::vector<double> rates;       // gcp family and time-changed processes
  std::vector<double> rates_down;  // gsp, gfsp: rates of the subtracted process
  double alpha = 1.0;
  countproc::SubordinatorSpec subordinator = countproc::GammaSpec{1.0, 1.0};
  std::vector<double> times{1.0};
  std::int64_t n_lo = 0;
  std::int64_t n_hi = 10;
  std::size_t paths = 10000;
  std::uint64_t seed = 0;
  std::optional<Method> method;    // per-command default when absent
  std::string output;              // empty: standard output
  double grid_step = 1e-3;
  std::optional<double> s;         // fixed time for moments / lrd; default times[0]

  countproc::RateVector rate_vector() const { return countproc::RateVector(rates); }
  countproc::SkellamRates skellam_rates() const { return countproc::SkellamRates(rates, rates_down); }
  countproc::FirstPassageConfig first_passage() const { return {grid_step, true}; }
  countproc::TimeChangedSpec tc_spec() const {
    return {rate_vector(), alpha, subordinator,
            is_inverse(process) ? countproc::ClockDirection::Inverse : countproc::ClockDirection::Forward};
  }
  double fixed_time() const { return s.value_or(times.front()); }
};

namespace detail {

inline Process parse_process(const std::string& s) {
  static const std::pair<const char*, Process> table[] = {
      {"gcp", Process::gcp},       {"gfcp", Process::gfcp},       {"gsp", Process::gsp},
      {"gfsp", Process::gfsp},     {"tcgcp1", Process::tcgcp1},   {"tcgfcp1", Process::tcgfcp1},
      {"tcgcp2", Process::tcgcp2}, {"tcgfcp2", Process::tcgfcp2}};
  for (const auto& [name, p] : table)
    if (s == name) return p;
  throw ConfigError("unknown process '" + s + "'");
}

inline Method parse_method(const std::string& s) {
  if (s == "exact") return Method::exact;
  if (s == "quadrature") return Method::quadrature;
  if (s == "mc") return Method::mc;
  throw ConfigError("unknown method '" + s + "' (exact, quadrature, mc)");
}

inline void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

inline double number(const nlohmann::json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError("'" + key + "' must be a number");
  return j.get<double>();
}

inline std::vector<double> number_list(const nlohmann::json& j, const std::string& key) {
  if (!j.is_array() || j.empty()) throw ConfigError("'" + key + "' must be a nonempty list of numbers");
  std::vector<double> v;
  for (const auto& x : j) v.push_back(number(x, key));
  return v;
}

inline std::uint64_t unsigned_int(const nlohmann::json& j, const std::string& key) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0)
    throw ConfigError("'" + key + "' must be a nonnegative integer");
  return j.get<std::uint64_t>();
}

inline countproc::SubordinatorSpec parse_subordinator(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw ConfigError("'subordinator' must be an object with a string 'type'");
  const std::string type = j["type"];
  auto get = [&](const char* key) {
    if (!j.contains(key)) throw ConfigError("subordinator '" + type + "' needs '" + key + "'");
    return number(j[key], std::string("subordinator.") + key);
  };
  if (type == "gamma") {
    check_keys(j, {"type", "a", "b"}, "subordinator");
    return countproc::GammaSpec{get("a"), get("b")};
  }
  if (type == "stable") {
    check_keys(j, {"type", "alpha"}, "subordinator");
    return countproc::StableSpec{get("alpha")};
  }
  if (type == "tempered_stable") {
    check_keys(j, {"type", "eta", "theta"}, "subordinator");
    return countproc::TemperedStableSpec{get("eta"), get("theta")};
  }
  if (type == "inverse_gaussian") {
    check_keys(j, {"type", "delta", "gamma"}, "subordinator");
    return countproc::InverseGaussianSpec{get("delta"), get("gamma")};
  }
  throw ConfigError("unknown subordinator type '" + type +
                    "' (gamma, stable, tempered_stable, inverse_gaussian)");
}

}  // namespace detail

/// Parses and validates a config document. Every failure is a ConfigError.
inline ExperimentConfig parse_config(const nlohmann::json& j) {
  using namespace detail;
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  check_keys(j,
             {"config_version", "process", "rates", "alpha", "subordinator", "times", "n_range", "paths",
              "seed", "method", "output", "grid_step", "s"},
             "config");
  if (j.contains("config_version") && (!j["config_version"].is_number_integer() ||
                                       j["config_version"].get<int>() != kConfigVersion))
    throw ConfigError("unsupported config_version (expected " + std::to_string(kConfigVersion) + ")");
  if (!j.contains("process") || !j["process"].is_string()) throw ConfigError("'process' is required");
  if (!j.contains("rates")) throw ConfigError("'rates' is required");

  ExperimentConfig c;
  c.process = parse_process(j["process"]);
  if (is_skellam(c.process)) {
    const auto& r = j["rates"];
    if (!r.is_object()) throw ConfigError("'rates' for " + std::string(process_name(c.process)) +
                                          " must be an object {\"up\": [...], \"down\": [...]}");
    check_keys(r, {"up", "down"}, "rates");
    if (!r.contains("up") || !r.contains("down")) throw ConfigError("'rates' needs 'up' and 'down'");
    c.rates = number_list(r["up"], "rates.up");
    c.rates_down = number_list(r["down"], "rates.down");
  } else {
    c.rates = number_list(j["rates"], "rates");
  }
  if (j.contains("alpha")) c.alpha = number(j["alpha"], "alpha");
  if (j.contains("subordinator")) c.subordinator = parse_subordinator(j["subordinator"]);
  if (j.contains("times")) c.times = number_list(j["times"], "times");
  if (is_skellam(c.process)) c.n_lo = -10;
  if (j.contains("n_range")) {
    const auto& r = j["n_range"];
    if (!r.is_array() || r.size() != 2 || !r[0].is_number_integer() || !r[1].is_number_integer())
      throw ConfigError("'n_range' must be [lo, hi] with integer bounds");
    c.n_lo = r[0].get<std::int64_t>();
    c.n_hi = r[1].get<std::int64_t>();
  }
  if (j.contains("paths")) c.paths = unsigned_int(j["paths"], "paths");
  if (j.contains("seed")) c.seed = unsigned_int(j["seed"], "seed");
  if (j.contains("method")) {
    if (!j["method"].is_string()) throw ConfigError("'method' must be a string");
    c.method = parse_method(j["method"]);
  }
  if (j.contains("output")) {
    if (!j["output"].is_string()) throw ConfigError("'output' must be a string");
    c.output = j["output"].get<std::string>();
  }
  if (j.contains("grid_step")) c.grid_step = number(j["grid_step"], "grid_step");
  if (j.contains("s")) c.s = number(j["s"], "s");

  // Semantic checks; library validation errors are config errors here.
  try {
    if (!(c.alpha > 0.0 && c.alpha <= 1.0)) throw ConfigError("'alpha' must lie in (0, 1]");
    if (!is_fractional(c.process) && c.alpha != 1.0)
      throw ConfigError(std::string(process_name(c.process)) + " has alpha = 1; use the fractional process");
    if (is_skellam(c.process))
      (void)c.skellam_rates();
    else
      (void)c.rate_vector();
    if (is_timechanged(c.process)) c.tc_spec().validate();
    for (std::size_t i = 0; i < c.times.size(); ++i) {
      if (!(c.times[i] > 0.0)) throw ConfigError("'times' must be positive");
      if (i > 0 && !(c.times[i] > c.times[i - 1])) throw ConfigError("'times' must be strictly increasing");
    }
    if (c.n_lo > c.n_hi) throw ConfigError("'n_range' needs lo <= hi");
    if (!is_skellam(c.process) && c.n_lo < 0) throw ConfigError("'n_range' must be nonnegative for counting processes");
    if (c.paths < 2) throw ConfigError("'paths' must be at least 2");
    if (!(c.grid_step > 0.0)) throw ConfigError("'grid_step' must be positive");
    if (c.s && !(*c.s > 0.0)) throw ConfigError("'s' must be positive");
  } catch (const countproc::Error& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace cli

#endif  // COUNTPROC_TOOLS_CONFIG_HPP
