#ifndef COUNTPROC_TOOLS_COMMANDS_HPP
#define COUNTPROC_TOOLS_COMMANDS_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "countproc/gcp.hpp"
#include "countproc/parallel.hpp"
#include "countproc/skellam.hpp"
#include "countproc/stats.hpp"
#include "countproc/timechange.hpp"
#include "output.hpp"

namespace cli {

/// Files to write once the command has finished; an empty path is stdout.
struct CommandOutput {
  std::vector<std::pair<std::string, std::string>> files;
  int exit_code = 0;
};

namespace detail {

[[noreturn]] inline void unsupported(const char* command, const ExperimentConfig& c, Method m,
                                     const std::string& why = "") {
  throw ConfigError(std::string(command) + ": method '" + method_name(m) + "' is not available for process '" +
                    process_name(c.process) + "'" + (why.empty() ? "" : " (" + why + ")"));
}

inline bool forward_alpha_one(const ExperimentConfig& c) {
  return (c.process == Process::tcgcp1 || c.process == Process::tcgfcp1) && c.alpha == 1.0;
}

// Marginal draw at t for any process.
inline std::int64_t draw(const ExperimentConfig& c, double t, countproc::RngStream& rng) {
  using namespace countproc;
  switch (c.process) {
    case Process::gcp: return sample_gcp(c.rate_vector(), t, rng);
    case Process::gfcp: return c.alpha == 1.0 ? sample_gcp(c.rate_vector(), t, rng)
                                              : sample_gfcp(c.rate_vector(), c.alpha, t, rng);
    case Process::gsp: return sample_gsp(c.skellam_rates(), t, rng);
    case Process::gfsp: return c.alpha == 1.0 ? sample_gsp(c.skellam_rates(), t, rng)
                                              : sample_gfsp(c.skellam_rates(), c.alpha, t, rng);
    default: return sample_tc(c.tc_spec(), t, rng, c.first_passage());
  }
}

// Empirical pmf over [n_lo, n_hi] with binomial standard errors.
inline std::vector<countproc::Estimate> empirical_pmf_range(const ExperimentConfig& c, double t, int threads) {
  std::vector<std::int64_t> draws(c.paths);
  countproc::parallel_for(c.paths, threads, [&](std::size_t p) {
    countproc::RngStream rng(c.seed, p);
    draws[p] = draw(c, t, rng);
  });
  const auto table = countproc::empirical_pmf(draws);
  std::vector<countproc::Estimate> out;
  const double N = static_cast<double>(c.paths);
  for (std::int64_t n = c.n_lo; n <= c.n_hi; ++n) {
    const double p = table.at(n);
    out.push_back({p, std::sqrt(p * (1.0 - p) / N)});
  }
  return out;
}

inline countproc::SampleEnsemble ensemble(const ExperimentConfig& c, std::vector<double> times, int threads) {
  using namespace countproc;
  switch (c.process) {
    case Process::gcp:
      return sample_gfcp_ensemble(c.rate_vector(), 1.0, std::move(times), c.paths, c.seed, c.first_passage(), threads);
    case Process::gfcp:
      return sample_gfcp_ensemble(c.rate_vector(), c.alpha, std::move(times), c.paths, c.seed, c.first_passage(),
                                  threads);
    case Process::gsp:
      return sample_gfsp_ensemble(c.skellam_rates(), 1.0, std::move(times), c.paths, c.seed, c.first_passage(),
                                  threads);
    case Process::gfsp:
      return sample_gfsp_ensemble(c.skellam_rates(), c.alpha, std::move(times), c.paths, c.seed,
                                  c.first_passage(), threads);
    default:
      return sample_tc_ensemble(c.tc_spec(), std::move(times), c.paths, c.seed, c.first_passage(), threads);
  }
}

// Sorted union of the config times and s.
inline std::vector<double> times_with(const ExperimentConfig& c, double s) {
  std::vector<double> t = c.times;
  if (std::find(t.begin(), t.end(), s) == t.end()) t.push_back(s);
  std::sort(t.begin(), t.end());
  return t;
}

inline std::size_t index_of(const std::vector<double>& v, double x) {
  return static_cast<std::size_t>(std::find(v.begin(), v.end(), x) - v.begin());
}

// Ensemble moments with delta-method standard errors.
inline countproc::MomentEstimates ensemble_moments(const countproc::SampleEnsemble& ens, std::size_t is,
                                                   std::size_t it) {
  countproc::RunningMoments ms, mt;
  for (std::size_t p = 0; p < ens.paths; ++p) {
    ms.add(static_cast<double>(ens.value(p, is)));
    mt.add(static_cast<double>(ens.value(p, it)));
  }
  countproc::RunningMoments v, cv;
  for (std::size_t p = 0; p < ens.paths; ++p) {
    const double xs = static_cast<double>(ens.value(p, is)) - ms.mean();
    const double xt = static_cast<double>(ens.value(p, it)) - mt.mean();
    v.add(xt * xt);
    cv.add(xs * xt);
  }
  const double n = static_cast<double>(ens.paths);
  const double bessel = n / (n - 1.0);
  return {mt.estimate(), {v.mean() * bessel, v.std_error()}, {cv.mean() * bessel, cv.std_error()}};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// pmf

inline Method default_pmf_method(const ExperimentConfig& c) {
  switch (c.process) {
    case Process::gcp:
    case Process::gsp:
    case Process::tcgcp1: return Method::exact;
    case Process::gfcp:
    case Process::gfsp:
      if (c.alpha == 1.0) return Method::exact;
      return countproc::mixing_quadrature_supported(c.alpha) ? Method::quadrature : Method::mc;
    case Process::tcgfcp1: return c.alpha == 1.0 ? Method::exact : Method::mc;
    default: return Method::mc;
  }
}

inline CommandOutput cmd_pmf(const ExperimentConfig& c, int threads) {
  using namespace countproc;
  const Method m = c.method.value_or(default_pmf_method(c));
  const double t = c.times.front();
  std::vector<Estimate> est;
  const bool fractional = is_fractional(c.process) && c.alpha < 1.0;

  if (c.process == Process::gcp || c.process == Process::gsp ||
      ((c.process == Process::gfcp || c.process == Process::gfsp) && !fractional)) {
    if (m == Method::quadrature) detail::unsupported("pmf", c, m, "closed form available");
    if (m == Method::exact) {
      for (std::int64_t n = c.n_lo; n <= c.n_hi; ++n)
        est.push_back({is_skellam(c.process) ? gsp_pmf(c.skellam_rates(), n, t) : gcp_pmf(c.rate_vector(), n, t),
                       std::nullopt});
    } else {
      est = detail::empirical_pmf_range(c, t, threads);
    }
  } else if (c.process == Process::gfcp || c.process == Process::gfsp) {
    if (m == Method::exact) detail::unsupported("pmf", c, m, "needs alpha = 1");
    if (m == Method::quadrature && !mixing_quadrature_supported(c.alpha))
      detail::unsupported("pmf", c, m, "inverse stable quadrature needs alpha = 0.5");
    MixingOptions opt;
    opt.method = m == Method::quadrature ? MixingMethod::Quadrature : MixingMethod::MonteCarlo;
    opt.paths = c.paths;
    opt.seed = c.seed;
    opt.threads = threads;
    est = c.process == Process::gfcp ? gfcp_pmf_range(c.rate_vector(), c.alpha, c.n_lo, c.n_hi, t, opt)
                                     : gfsp_pmf_range(c.skellam_rates(), c.alpha, c.n_lo, c.n_hi, t, opt);
  } else if (c.process == Process::tcgcp1 || detail::forward_alpha_one(c)) {
    TimeChangedSpec spec = c.tc_spec();
    LaplaceOptions opt;
    opt.paths = c.paths;
    opt.seed = c.seed;
    opt.threads = threads;
    if (m == Method::exact) {
      opt.method = LaplaceMethod::Derivative;
    } else if (m == Method::quadrature) {
      if (!has_density(spec.sub)) detail::unsupported("pmf", c, m, "no closed-form clock density");
      opt.method = LaplaceMethod::Quadrature;
    } else {
      opt.method = LaplaceMethod::MonteCarlo;
    }
    const auto all = tcgcp1_pmf_range(spec, c.n_hi, t, opt);
    est.assign(all.begin() + c.n_lo, all.end());
  } else if ((c.process == Process::tcgcp2 || (c.process == Process::tcgfcp2 && !fractional)) && m == Method::mc) {
    const auto all = tcgcp2_pmf_range(c.tc_spec(), c.n_hi, t, c.paths, c.seed, c.first_passage(), threads);
    est.assign(all.begin() + c.n_lo, all.end());
  } else {
    if (m != Method::mc) detail::unsupported("pmf", c, m, "Monte Carlo only");
    est = detail::empirical_pmf_range(c, t, threads);
  }

  Csv csv({"n", "probability", "stderr", "method"});
  for (std::size_t i = 0; i < est.size(); ++i)
    csv.row({fmt(c.n_lo + static_cast<std::int64_t>(i)), fmt(est[i].value), fmt(est[i].std_error), method_name(m)});
  return {{{c.output, csv.str()}}, 0};
}

// ---------------------------------------------------------------------------
// simulate

inline CommandOutput cmd_simulate(const ExperimentConfig& c, int threads) {
  if (c.method && *c.method != Method::mc) detail::unsupported("simulate", c, *c.method, "sampling is Monte Carlo");
  const auto ens = detail::ensemble(c, c.times, threads);
  std::string text = "path,time,value\n";
  text.reserve(text.size() + ens.paths * ens.times.size() * 12);
  std::vector<std::string> tcol;
  for (double t : ens.times) tcol.push_back(fmt(t));
  for (std::size_t p = 0; p < ens.paths; ++p)
    for (std::size_t i = 0; i < ens.times.size(); ++i) {
      text += std::to_string(p);
      text += ',';
      text += tcol[i];
      text += ',';
      text += std::to_string(ens.value(p, i));
      text += '\n';
    }
  return {{{c.output, text}}, 0};
}

// ---------------------------------------------------------------------------
// moments

inline bool has_exact_moments(const ExperimentConfig& c) {
  if (!is_timechanged(c.process)) return true;
  return !is_inverse(c.process) && std::holds_alternative<countproc::GammaSpec>(c.subordinator);
}

inline CommandOutput cmd_moments(const ExperimentConfig& c, int threads) {
  using namespace countproc;
  const Method m = c.method.value_or(has_exact_moments(c) ? Method::exact : Method::mc);
  if (m == Method::quadrature) detail::unsupported("moments", c, m);
  if (m == Method::exact && !has_exact_moments(c))
    detail::unsupported("moments", c, m, "clock moments need Monte Carlo");
  const double s = c.fixed_time();
  std::vector<double> ts;
  for (double t : c.times)
    if (t >= s) ts.push_back(t);
  if (ts.empty()) throw ConfigError("moments: no time >= s");

  std::vector<MomentEstimates> rows;
  if (m == Method::exact) {
    for (double t : ts) {
      MeanVarCov r{};
      switch (c.process) {
        case Process::gcp: r = gfcp_moments(c.rate_vector(), 1.0, s, t); break;
        case Process::gfcp: r = gfcp_moments(c.rate_vector(), c.alpha, s, t); break;
        case Process::gsp: r = gsp_moments(c.skellam_rates(), s, t); break;
        case Process::gfsp: r = gfsp_moments(c.skellam_rates(), c.alpha, s, t); break;
        default:
          r = tcgfcp1_moments_gamma(c.rate_vector(), c.alpha, std::get<GammaSpec>(c.subordinator), s, t);
      }
      rows.push_back({{r.mean, std::nullopt}, {r.var, std::nullopt}, {r.cov, std::nullopt}});
    }
  } else if (is_timechanged(c.process)) {
    const auto spec = c.tc_spec();
    const auto k = derived_constants(spec.rates, spec.alpha);
    for (double t : ts)
      rows.push_back(is_inverse(c.process)
                         ? tcgfcp2_moments(spec, k, s, t, c.paths, c.seed, c.first_passage(), threads)
                         : tcgfcp1_moments(spec, k, s, t, c.paths, c.seed, threads));
  } else {
    const auto all = detail::times_with(c, s);
    const auto ens = detail::ensemble(c, all, threads);
    for (double t : ts) rows.push_back(detail::ensemble_moments(ens, detail::index_of(all, s), detail::index_of(all, t)));
  }

  Csv csv({"time", "mean", "var", "cov", "stderr_mean", "stderr_var", "stderr_cov", "s", "method"});
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto& r = rows[i];
    csv.row({fmt(ts[i]), fmt(r.mean.value), fmt(r.var.value), fmt(r.cov.value), fmt(r.mean.std_error),
             fmt(r.var.std_error), fmt(r.cov.std_error), fmt(s), method_name(m)});
  }
  return {{{c.output, csv.str()}}, 0};
}

// ---------------------------------------------------------------------------
// lrd

inline CommandOutput cmd_lrd(const ExperimentConfig& c, int threads) {
  using namespace countproc;
  const Method m = c.method.value_or(has_exact_moments(c) ? Method::exact : Method::mc);
  if (m == Method::quadrature) detail::unsupported("lrd", c, m);
  if (m == Method::exact && !has_exact_moments(c)) detail::unsupported("lrd", c, m, "clock moments need Monte Carlo");
  const double s = c.fixed_time();
  std::vector<double> ts;
  for (double t : c.times)
    if (t > s) ts.push_back(t);
  if (ts.size() < 5) throw ConfigError("lrd: needs at least 5 times greater than s");

  std::vector<CorrEstimate> corr;
  if (m == Method::exact) {
    for (double t : ts) {
      double r = 0.0;
      switch (c.process) {
        case Process::gcp:
        case Process::gfcp: {
          const double a = c.process == Process::gcp ? 1.0 : c.alpha;
          const auto st = gfcp_moments(c.rate_vector(), a, s, t);
          const auto ss = gfcp_moments(c.rate_vector(), a, s, s);
          r = st.cov / std::sqrt(ss.var * st.var);
          break;
        }
        case Process::gsp: r = gfsp_corr(c.skellam_rates(), 1.0, s, t); break;
        case Process::gfsp: r = gfsp_corr(c.skellam_rates(), c.alpha, s, t); break;
        default: r = tcgfcp1_corr_gamma(c.rate_vector(), c.alpha, std::get<GammaSpec>(c.subordinator), s, t);
      }
      corr.push_back({r, 0.0});
    }
  } else {
    const auto all = detail::times_with(c, s);
    const auto ens = detail::ensemble(c, all, threads);
    for (double t : ts) corr.push_back(corr_estimate(ens, detail::index_of(all, s), detail::index_of(all, t)));
  }

  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < ts.size(); ++i) pts.emplace_back(ts[i], corr[i].corr);
  const FitResult fit = lrd_fit(pts);

  nlohmann::ordered_json j;
  j["process"] = process_name(c.process);
  j["method"] = method_name(m);
  j["s"] = s;
  j["fit"] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"stderr", fit.stderr}, {"r_squared", fit.r_squared}};
  j["lrd"] = fit.slope < 0.0 && fit.slope > -1.0;
  nlohmann::ordered_json table = nlohmann::ordered_json::array();
  Csv csv({"t", "corr", "stderr"});
  for (std::size_t i = 0; i < ts.size(); ++i) {
    nlohmann::ordered_json row = {{"t", ts[i]}, {"corr", corr[i].corr}};
    std::optional<double> se;
    if (m == Method::mc) se = corr[i].std_error;
    row["stderr"] = se ? nlohmann::ordered_json(*se) : nlohmann::ordered_json(nullptr);
    table.push_back(row);
    csv.row({fmt(ts[i]), fmt(corr[i].corr), fmt(se)});
  }
  j["table"] = table;

  CommandOutput out;
  if (c.output.empty()) {
    out.files.push_back({"", j.dump(2) + "\n"});
  } else {
    std::filesystem::path base(c.output);
    out.files.push_back({std::filesystem::path(base).replace_extension(".json").string(), j.dump(2) + "\n"});
    out.files.push_back({std::filesystem::path(base).replace_extension(".csv").string(), csv.str()});
  }
  return out;
}

// ---------------------------------------------------------------------------
// residuals

inline CommandOutput cmd_residuals(const ExperimentConfig& c, int /*threads*/) {
  using namespace countproc;
  Csv csv({"equation", "n", "t", "residual", "tolerance", "pass"});
  auto add = [&](const char* eq, std::int64_t n, double t, double r, double tol) {
    csv.row({eq, fmt(n), fmt(t), fmt(r), fmt(tol), r < tol ? "true" : "false"});
  };
  const bool fractional = is_fractional(c.process) && c.alpha < 1.0;
  switch (c.process) {
    case Process::gcp:
      for (double t : c.times)
        for (std::int64_t n = c.n_lo; n <= c.n_hi; ++n) add("gcp-ode", n, t, gcp_ode_residual(c.rate_vector(), n, t), 1e-6);
      break;
    case Process::gsp:
      for (double t : c.times)
        for (std::int64_t n = c.n_lo; n <= c.n_hi; ++n)
          add("gsp-ode", n, t, gsp_ode_residual(c.skellam_rates(), n, t), 1e-6);
      break;
    case Process::gfcp:
    case Process::gfsp:
      if (!fractional || !mixing_quadrature_supported(c.alpha))
        throw ConfigError("residuals: the fractional system check needs alpha = 0.5");
      for (double t : c.times) {
        if (c.process == Process::gfcp) {
          const auto r = gfcp_fde_residuals(c.rate_vector(), c.alpha, c.n_hi, t);
          for (std::int64_t n = c.n_lo; n <= c.n_hi; ++n) add("gfcp-fde", n, t, r[n].relative, 1e-3);
        } else {
          const auto r = gfsp_fde_residuals(c.skellam_rates(), c.alpha, c.n_lo, c.n_hi, t);
          for (std::int64_t n = c.n_lo; n <= c.n_hi; ++n) add("gfsp-fde", n, t, r[n - c.n_lo].relative, 1e-3);
        }
      }
      break;
    case Process::tcgcp1:
      if (const auto* ts = std::get_if<TemperedStableSpec>(&c.subordinator)) {
        if (ts->theta != 0.5) throw ConfigError("residuals: the tempered stable equation needs theta = 0.5");
        for (double t : c.times) {
          if (t < 0.2) throw ConfigError("residuals: needs t >= 0.2");
          for (std::int64_t n = c.n_lo; n <= c.n_hi; ++n)
            add("tss-ode", n, t, tss_ode_residual(c.rate_vector(), ts->eta, n, t), 1e-4);
        }
      } else if (const auto* ig = std::get_if<InverseGaussianSpec>(&c.subordinator)) {
        for (double t : c.times) {
          if (t < 0.2) throw ConfigError("residuals: needs t >= 0.2");
          for (std::int64_t n = c.n_lo; n <= c.n_hi; ++n)
            add("igs-ode", n, t, igs_ode_residual(c.rate_vector(), ig->delta, ig->gamma, n, t), 1e-4);
        }
      } else {
        throw ConfigError("residuals: tcgcp1 equations exist for tempered_stable (theta = 0.5) and inverse_gaussian");
      }
      break;
    default: throw ConfigError(std::string("residuals: no governing equation check for ") + process_name(c.process));
  }
  return {{{c.output, csv.str()}}, 0};
}

// ---------------------------------------------------------------------------
// oracle-compare

inline CommandOutput cmd_oracle_compare(const ExperimentConfig& c, int threads) {
  using namespace countproc;
  Csv csv({"check", "value", "tolerance", "pass"});
  bool all_pass = true;
  auto add = [&](const std::string& name, double v, double tol) {
    const bool ok = v < tol;
    all_pass = all_pass && ok;
    csv.row({name, fmt(v), fmt(tol), ok ? "true" : "false"});
  };
  const double t = c.times.front();
  auto tv_against_sampler = [&](const std::vector<Estimate>& pmf, std::int64_t lo) {
    std::vector<std::int64_t> draws(c.paths);
    parallel_for(c.paths, threads, [&](std::size_t p) {
      RngStream rng(c.seed, p);
      draws[p] = detail::draw(c, t, rng);
    });
    std::vector<double> v;
    for (const auto& e : pmf) v.push_back(std::clamp(e.value, 0.0, 1.0));
    return tv_distance(empirical_pmf(draws), PmfTable::from_values(lo, v));
  };

  switch (c.process) {
    case Process::gcp: {
      const auto r = c.rate_vector();
      const auto mv = gcp_moments(r, t);
      const auto hi = static_cast<std::int64_t>(mv.mean + 12.0 * std::sqrt(mv.var) + 10.0);
      std::vector<Estimate> pmf;
      double series = 0.0, total = 0.0;
      for (std::int64_t n = 0; n <= hi; ++n) {
        const double p = gcp_pmf(r, n, t);
        pmf.push_back({p, std::nullopt});
        total += p;
        series += std::pow(0.5, static_cast<double>(n)) * p;
      }
      add("pmf-normalization-deficit", std::abs(1.0 - total), 1e-10);
      add("pgf-vs-pmf-series-u0.5", std::abs(series - gcp_pgf(r, 0.5, t)), 1e-10);
      add("pmf-vs-sampler-tv", tv_against_sampler(pmf, 0), 5e-3);
      break;
    }
    case Process::gsp: {
      double worst = 0.0;
      for (double tt : c.times)
        for (std::int64_t n = c.n_lo; n <= c.n_hi; ++n)
          worst = std::max(worst, std::abs(gsp_pmf(c.skellam_rates(), n, tt) -
                                           gsp_pmf_oracle(c.skellam_rates(), n, tt).value));
      add("bessel-vs-convolution-max-abs", worst, 1e-10);
      break;
    }
    case Process::gfcp:
    case Process::gfsp: {
      MixingOptions opt;
      opt.paths = c.paths;
      opt.seed = c.seed;
      opt.threads = threads;
      auto range = [&](MixingMethod mm) {
        opt.method = mm;
        return c.process == Process::gfcp ? gfcp_pmf_range(c.rate_vector(), c.alpha, c.n_lo, c.n_hi, t, opt)
                                          : gfsp_pmf_range(c.skellam_rates(), c.alpha, c.n_lo, c.n_hi, t, opt);
      };
      const auto mc = range(MixingMethod::MonteCarlo);
      if (mixing_quadrature_supported(c.alpha)) {
        const auto q = range(MixingMethod::Quadrature);
        double z = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i)
          if (mc[i].std_error && *mc[i].std_error > 0.0)
            z = std::max(z, std::abs(q[i].value - mc[i].value) / *mc[i].std_error);
        add("quadrature-vs-mc-mixing-max-z", z, 3.0);
      }
      add("mixing-vs-sampler-tv", tv_against_sampler(mc, c.n_lo), 1e-2);
      break;
    }
    case Process::tcgcp1: {
      const auto spec = c.tc_spec();
      const double L = spec.rates.Lambda();
      if (const auto* g = std::get_if<GammaSpec>(&spec.sub)) {
        double worst = 0.0;
        LaplaceOptions closed, quad;
        closed.method = LaplaceMethod::Closed;
        quad.method = LaplaceMethod::Quadrature;
        for (int s = 0; s <= 10; ++s)
          worst = std::max(worst, std::abs(laplace_moment(*g, L, s, t, closed).value -
                                           laplace_moment(*g, L, s, t, quad).value));
        add("laplace-closed-vs-quadrature-max-abs", worst, 1e-10);
      }
      const auto pmf = tcgcp1_pmf_range(spec, std::max<std::int64_t>(c.n_hi, 60), t);
      for (double u : {0.3, 0.7}) {
        double series = 0.0;
        for (std::size_t n = 0; n < pmf.size(); ++n) series += std::pow(u, static_cast<double>(n)) * pmf[n].value;
        add("pgf-vs-pmf-series-u" + fmt(u), std::abs(series - tcgcp1_pgf(spec, u, t)), 1e-8);
      }
      if (!std::holds_alternative<StableSpec>(spec.sub)) {
        double worst = 0.0;
        for (std::int64_t n = 1; n <= 30; ++n) {
          const double a = jump_rate(spec, n), b = levy_weights(spec, n);
          worst = std::max(worst, std::abs(a - b) / b);
        }
        add("jump-rate-vs-levy-max-rel", worst, 1e-10);
      }
      add("pmf-vs-sampler-tv", tv_against_sampler(pmf, 0), 1e-2);
      break;
    }
    case Process::tcgcp2: {
      const auto pmf = tcgcp2_pmf_range(c.tc_spec(), c.n_hi, t, c.paths, c.seed, c.first_passage(), threads);
      double total = 0.0;
      for (const auto& e : pmf) total += e.value;
      add("pmf-normalization-deficit", 1.0 - total, 2e-2);
      add("pmf-vs-sampler-tv", tv_against_sampler(pmf, 0), 2e-2);
      break;
    }
    case Process::tcgfcp1:
    case Process::tcgfcp2: {
      const auto spec = c.tc_spec();
      const auto k = derived_constants(spec.rates, spec.alpha);
      const double s = c.fixed_time();
      const double tt = c.times.back();
      if (tt < s) throw ConfigError("oracle-compare: needs max(times) >= s");
      const auto f = is_inverse(c.process) ? tcgfcp2_moments(spec, k, s, tt, c.paths, c.seed, c.first_passage(), threads)
                                           : tcgfcp1_moments(spec, k, s, tt, c.paths, c.seed, threads);
      ExperimentConfig bc = c;
      bc.seed = c.seed + 1;
      const std::vector<double> lv = s == tt ? std::vector<double>{s} : std::vector<double>{s, tt};
      const auto ens = detail::ensemble(bc, lv, threads);
      const auto b = detail::ensemble_moments(ens, 0, lv.size() - 1);
      auto z = [](const Estimate& x, const Estimate& y) {
        const double se = std::hypot(x.std_error.value_or(0.0), y.std_error.value_or(0.0));
        return se > 0.0 ? std::abs(x.value - y.value) / se : std::abs(x.value - y.value);
      };
      add("mean-formula-vs-ensemble-z", z(f.mean, b.mean), 3.0);
      add("var-formula-vs-ensemble-z", z(f.var, b.var), 3.0);
      add("cov-formula-vs-ensemble-z", z(f.cov, b.cov), 3.0);
      break;
    }
  }
  CommandOutput out;
  out.files.push_back({"", csv.str()});
  if (!c.output.empty()) out.files.push_back({c.output, csv.str()});
  out.exit_code = all_pass ? 0 : 1;
  return out;
}

}  // namespace cli

#endif  // COUNTPROC_TOOLS_COMMANDS_HPP
