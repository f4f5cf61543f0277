#ifndef COUNTPROC_TIMECHANGE_HPP
#define COUNTPROC_TIMECHANGE_HPP

// GCP and GFCP run on a subordinator clock D_f (type I) or on the inverse
// subordinator H_f (type II): pmfs through the Laplace moments
// E(exp(-Lambda D) D^s), pgfs, jump rates and Lévy measures, moment
// formulas with coupled-path estimates, and the integer-order governing
// equations for the tempered stable and inverse Gaussian clocks.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "countproc/error.hpp"
#include "countproc/gcp.hpp"
#include "countproc/parallel.hpp"
#include "countproc/specfun.hpp"
#include "countproc/stats.hpp"
#include "countproc/subordinators.hpp"

namespace countproc {

enum class ClockDirection { Forward, Inverse };

struct TimeChangedSpec {
  RateVector rates;
  double alpha = 1.0;
  SubordinatorSpec sub = GammaSpec{1.0, 1.0};
  ClockDirection direction = ClockDirection::Forward;

  void validate() const {
    detail::require(rates.k() >= 1, "TimeChangedSpec: rates must be set");
    detail::require(alpha > 0.0 && alpha <= 1.0, "TimeChangedSpec: need 0 < alpha <= 1");
    countproc::validate(sub);
    if (direction == ClockDirection::Forward && std::holds_alternative<StableSpec>(sub))
      throw DomainError(
          "TimeChangedSpec: the stable subordinator has no finite moments and is not allowed as a "
          "forward clock");
  }
};

struct DerivedConstants {
  double l1 = 0.0;
  double l2 = 0.0;
  double d = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
  double theta_growth = 0.0;
};

inline DerivedConstants derived_constants(const RateVector& rates, double alpha) {
  detail::require(alpha > 0.0 && alpha <= 1.0, "derived_constants: need 0 < alpha <= 1");
  DerivedConstants c;
  const double g = std::tgamma(alpha + 1.0);
  c.l1 = rates.r1() / g;
  c.l2 = rates.r2() / g;
  c.d = alpha * c.l1 * c.l1 * beta(alpha, alpha + 1.0);
  return c;
}

/// Constants with the gamma-clock growth E D^{i alpha}(t) ~ (b/a)^{i alpha} t^{i alpha}.
inline DerivedConstants gamma_constants(const RateVector& rates, double alpha, const GammaSpec& g) {
  DerivedConstants c = derived_constants(rates, alpha);
  c.k1 = std::pow(g.b / g.a, alpha);
  c.k2 = std::pow(g.b / g.a, 2.0 * alpha);
  c.theta_growth = alpha;
  return c;
}

// ---------------------------------------------------------------------------
// Laplace moments E(exp(-Lambda D(t)) D(t)^s)

enum class LaplaceMethod { Closed, Derivative, Quadrature, MonteCarlo };

struct LaplaceOptions {
  LaplaceMethod method = LaplaceMethod::Derivative;
  std::size_t paths = 1000000;
  std::uint64_t seed = 0;
  int threads = 0;
  double quad_tol = 1e-13;
};

namespace detail {

// c_s = E(exp(-Lambda D) D^s) / s! for s = 0..n from the recursion
// c_n = (t/n) sum_{m=1}^n |f^{(m)}(Lambda)| / (m-1)! c_{n-m}, c_0 = exp(-t f(Lambda)).
// All terms are positive (f' is completely monotone).
inline std::vector<double> laplace_taylor(const SubordinatorSpec& sub, double Lambda, int n, double t) {
  std::vector<double> c(n + 1, 0.0);
  c[0] = std::exp(-t * bernstein(sub, Lambda));
  if (n == 0) return c;
  detail::require(Lambda > 0.0 || !std::holds_alternative<StableSpec>(sub),
                  "laplace_moment: stable clock needs Lambda > 0");
  std::vector<double> a(n + 1, 0.0);
  for (int m = 1; m <= n; ++m)
    a[m] = std::exp(log_abs_bernstein_derivative(sub, m, Lambda) - log_factorial(m - 1));
  for (int k = 1; k <= n; ++k) {
    CompensatedSum s;
    for (int m = 1; m <= k; ++m) s.add(a[m] * c[k - m]);
    c[k] = t / k * s.value();
  }
  return c;
}

inline double laplace_gamma_closed(const GammaSpec& g, double Lambda, int s, double t) {
  const double shape = g.b * t;
  return std::exp(shape * (std::log(g.a) - std::log(g.a + Lambda)) + std::lgamma(shape + s) -
                  std::lgamma(shape) - s * std::log(g.a + Lambda));
}

template <class G>
double integrate_against_density(const SubordinatorSpec& sub, double t, G&& g, double tol) {
  QuadOptions opt;
  opt.tol = tol;
  opt.initial_panels = 16;
  if (const auto* gs = std::get_if<GammaSpec>(&sub)) {
    // x^{shape-1} is singular (or has a singular derivative) at the origin, so the head
    // goes to tanh-sinh and the smooth tail to adaptive Gauss-Legendre.
    const double shape = gs->b * t;
    const double x0 = std::max(shape, 1.0) / gs->a;
    auto f = [&](double x) { return x > 0.0 ? g(x) * density(sub, x, t) : 0.0; };
    boost::math::quadrature::tanh_sinh<double> ts;
    double err = 0.0;
    const double head = ts.integrate(f, 0.0, x0, tol, &err);
    const double tail = quad_halfline([&](double u) { return f(x0 + u); }, opt, x0);
    if (!std::isfinite(head) || err > std::max(1e3 * tol, 1e-10) * std::abs(head + tail))
      throw NonConvergence("quadrature: tanh-sinh head did not converge for " + describe(sub));
    return head + tail;
  }
  if (!has_density(sub)) throw Unsupported("quadrature: no closed-form density for " + describe(sub));
  double scale = 1.0;
  if (const auto* ig = std::get_if<InverseGaussianSpec>(&sub)) scale = ig->delta * t / ig->gamma;
  if (const auto* ts = std::get_if<TemperedStableSpec>(&sub))
    scale = ts->theta * std::pow(ts->eta, ts->theta - 1.0) * t;
  if (std::holds_alternative<StableSpec>(sub)) scale = t * t;
  return quad_halfline([&](double x) { return x > 0.0 ? g(x) * density(sub, x, t) : 0.0; }, opt, scale);
}

}  // namespace detail

inline Estimate laplace_moment(const SubordinatorSpec& sub, double Lambda, int s, double t,
                               const LaplaceOptions& opt = {}) {
  validate(sub);
  detail::require(t > 0.0, "laplace_moment: t must be positive");
  detail::require(Lambda >= 0.0, "laplace_moment: Lambda must be nonnegative");
  detail::require(s >= 0, "laplace_moment: s must be nonnegative");
  switch (opt.method) {
    case LaplaceMethod::Closed: {
      const auto* g = std::get_if<GammaSpec>(&sub);
      if (!g) throw Unsupported("laplace_moment: closed form only for the gamma subordinator");
      return {detail::laplace_gamma_closed(*g, Lambda, s, t), std::nullopt};
    }
    case LaplaceMethod::Derivative: {
      const auto c = detail::laplace_taylor(sub, Lambda, s, t);
      return {c[s] * std::exp(log_factorial(s)), std::nullopt};
    }
    case LaplaceMethod::Quadrature: {
      const double v = detail::integrate_against_density(
          sub, t, [&](double x) { return std::exp(-Lambda * x + s * std::log(x)); }, opt.quad_tol);
      return {v, std::nullopt};
    }
    case LaplaceMethod::MonteCarlo: {
      return mc_means(opt.paths, opt.seed, 1, opt.threads,
                      [&](RngStream& rng, std::size_t, std::span<double> o) {
                        const double x = sample_marginal(sub, t, rng);
                        o[0] = std::exp(-Lambda * x + s * std::log(x));
                      })[0];
    }
  }
  throw Unsupported("laplace_moment: unknown method");
}

// ---------------------------------------------------------------------------
// TCGCP-I pmf and pgf

namespace detail {

// log of sum over Omega(k, n) with s_k = s of prod lambda_j^{x_j} / x_j!, per s.
inline std::vector<double> log_weights_by_count(const RateVector& rates, std::int64_t n) {
  std::vector<LogSumExp> acc(static_cast<std::size_t>(n) + 1);
  std::vector<double> log_l(rates.k());
  for (int j = 1; j <= rates.k(); ++j) log_l[j - 1] = std::log(rates[j]);
  for_each_composition(rates.k(), n, [&](const Composition& c) {
    double lt = 0.0;
    for (int j = 0; j < rates.k(); ++j)
      if (c.x[j] > 0) lt += c.x[j] * log_l[j] - log_factorial(c.x[j]);
    acc[c.s_k].add(lt);
  });
  std::vector<double> out(acc.size());
  for (std::size_t s = 0; s < acc.size(); ++s) out[s] = acc[s].log_value();
  return out;
}

inline void require_forward_unit(const TimeChangedSpec& spec, const char* what) {
  spec.validate();
  detail::require(spec.direction == ClockDirection::Forward, std::string(what) + ": needs a forward clock");
  detail::require(spec.alpha == 1.0, std::string(what) + ": needs alpha = 1");
}

}  // namespace detail

/// P(M(D_f(t)) = n) for n in [0, n_max]. Exact methods combine the Laplace
/// moments, one per distinct s_k; Monte Carlo averages gcp_pmf(n, D_f(t)).
inline std::vector<Estimate> tcgcp1_pmf_range(const TimeChangedSpec& spec, std::int64_t n_max, double t,
                                              const LaplaceOptions& opt = {}) {
  detail::require_forward_unit(spec, "tcgcp1_pmf");
  detail::require(n_max >= 0, "tcgcp1_pmf: n must be nonnegative");
  detail::require(t > 0.0, "tcgcp1_pmf: t must be positive");
  const std::size_t K = static_cast<std::size_t>(n_max) + 1;
  if (opt.method == LaplaceMethod::MonteCarlo) {
    return mc_means(opt.paths, opt.seed, K, opt.threads,
                    [&](RngStream& rng, std::size_t, std::span<double> o) {
                      const double x = sample_marginal(spec.sub, t, rng);
                      for (std::size_t n = 0; n < K; ++n) o[n] = gcp_pmf(spec.rates, n, x);
                    });
  }
  const double L = spec.rates.Lambda();
  // log E(exp(-L D) D^s) for s = 0..n_max, each computed once.
  std::vector<double> log_lm(K);
  if (opt.method == LaplaceMethod::Derivative) {
    const auto c = detail::laplace_taylor(spec.sub, L, static_cast<int>(n_max), t);
    for (std::size_t s = 0; s < K; ++s) log_lm[s] = std::log(c[s]) + log_factorial(s);
  } else {
    for (std::size_t s = 0; s < K; ++s)
      log_lm[s] = std::log(laplace_moment(spec.sub, L, static_cast<int>(s), t, opt).value);
  }
  std::vector<Estimate> out(K);
  for (std::size_t n = 0; n < K; ++n) {
    const auto lw = detail::log_weights_by_count(spec.rates, n);
    LogSumExp acc;
    for (std::size_t s = 0; s < lw.size(); ++s) acc.add(lw[s] + log_lm[s]);
    out[n] = {std::exp(acc.log_value()), std::nullopt};
  }
  return out;
}

inline Estimate tcgcp1_pmf(const TimeChangedSpec& spec, std::int64_t n, double t,
                           const LaplaceOptions& opt = {}) {
  detail::require(n >= 0, "tcgcp1_pmf: n must be nonnegative");
  return tcgcp1_pmf_range(spec, n, t, opt)[static_cast<std::size_t>(n)];
}

inline double tcgcp1_pgf(const TimeChangedSpec& spec, double u, double t) {
  detail::require_forward_unit(spec, "tcgcp1_pgf");
  detail::require(std::abs(u) <= 1.0, "tcgcp1_pgf: need |u| <= 1");
  CompensatedSum x;
  for (int j = 1; j <= spec.rates.k(); ++j) x.add(spec.rates[j] * (1.0 - std::pow(u, j)));
  return std::exp(-t * bernstein(spec.sub, std::max(0.0, x.value())));
}

// ---------------------------------------------------------------------------
// Jumps

/// Largest s_k accepted by jump_rate. The rates are evaluated in log space,
/// so the bound only limits work, not precision.
constexpr std::int64_t kJumpOrderLimit = 500;

/// Coefficient of h in P(Z(h) = n): f(Lambda) for n = 0 (the total jump
/// intensity), and -sum_{Omega(k,n)} f^{(s_k)}(Lambda) prod (-lambda_j)^{x_j}/x_j!
/// for n >= 1.
inline double jump_rate(const TimeChangedSpec& spec, std::int64_t n) {
  detail::require_forward_unit(spec, "jump_rate");
  detail::require(n >= 0, "jump_rate: n must be nonnegative");
  const double L = spec.rates.Lambda();
  if (n == 0) return bernstein(spec.sub, L);
  // Every term has sign +1: sign f^{(s)} = (-1)^{s-1} and sign prod (-lambda)^x = (-1)^s.
  const auto lw = detail::log_weights_by_count(spec.rates, n);
  LogSumExp acc;
  for (std::size_t s = 1; s < lw.size(); ++s) {
    if (std::isinf(lw[s])) continue;
    if (static_cast<std::int64_t>(s) > kJumpOrderLimit)
      throw Unsupported("jump_rate: derivative order above " + std::to_string(kJumpOrderLimit));
    acc.add(lw[s] + log_abs_bernstein_derivative(spec.sub, static_cast<int>(s), L));
  }
  return std::exp(acc.log_value());
}

/// Atom at n >= 1 of the Lévy measure of the type-I process, from the
/// Lévy measure of the clock.
inline double levy_weights(const TimeChangedSpec& spec, std::int64_t n) {
  detail::require_forward_unit(spec, "levy_weights");
  detail::require(n >= 1, "levy_weights: n must be >= 1");
  const double L = spec.rates.Lambda();
  const auto lw = detail::log_weights_by_count(spec.rates, n);
  LogSumExp acc;
  for (std::size_t s = 1; s < lw.size(); ++s) {
    if (std::isinf(lw[s])) continue;
    const double sd = static_cast<double>(s);
    const double lm = std::visit(
        overloaded{
            [&](const GammaSpec& g) { return std::log(g.b) + std::lgamma(sd) - sd * std::log(L + g.a); },
            [&](const TemperedStableSpec& p) {
              return std::log(p.theta) - std::lgamma(1.0 - p.theta) + std::lgamma(sd - p.theta) -
                     (sd - p.theta) * std::log(L + p.eta);
            },
            [&](const InverseGaussianSpec& p) {
              return std::log(p.delta) - 0.5 * std::log(2.0 * std::numbers::pi) + std::lgamma(sd - 0.5) -
                     (sd - 0.5) * std::log(L + 0.5 * p.gamma * p.gamma);
            },
            [&](const StableSpec&) -> double { throw Unsupported("levy_weights: stable clock"); },
        },
        spec.sub);
    acc.add(lw[s] + lm);
  }
  return std::exp(acc.log_value());
}

// ---------------------------------------------------------------------------
// Sampling

namespace detail {

// Clock values at `times` for one path.
inline std::vector<double> clock_path(const TimeChangedSpec& spec, std::span<const double> times,
                                      const FirstPassageConfig& cfg, RngStream& rng) {
  if (spec.direction == ClockDirection::Inverse) return sample_first_passage_path(spec.sub, times, cfg, rng);
  std::vector<double> d(times.size());
  double prev_t = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] > prev_t) acc += sample_marginal(spec.sub, times[i] - prev_t, rng);
    d[i] = acc;
    prev_t = times[i];
  }
  return d;
}

}  // namespace detail

/// One draw of the time-changed process at t.
inline std::int64_t sample_tc(const TimeChangedSpec& spec, double t, RngStream& rng,
                              const FirstPassageConfig& cfg = {}) {
  spec.validate();
  detail::require(t > 0.0, "sample_tc: t must be positive");
  const double clock = spec.direction == ClockDirection::Forward ? sample_marginal(spec.sub, t, rng)
                                                                 : sample_first_passage(spec.sub, t, cfg, rng);
  if (spec.alpha == 1.0 || clock <= 0.0) return sample_gcp(spec.rates, clock, rng);
  return sample_gcp(spec.rates, sample_inverse_stable(spec.alpha, clock, rng), rng);
}

/// Jointly distributed values at `times`. For alpha < 1 the inner inverse
/// stable clock is a first-passage path evaluated at the outer clock values.
inline SampleEnsemble sample_tc_ensemble(const TimeChangedSpec& spec, std::vector<double> times,
                                         std::size_t paths, std::uint64_t seed,
                                         const FirstPassageConfig& cfg = {}, int threads = 0) {
  spec.validate();
  SampleEnsemble ens;
  ens.paths = paths;
  ens.times = std::move(times);
  ens.seed = seed;
  ens.meta = std::string(spec.direction == ClockDirection::Forward ? "forward " : "inverse ") +
             describe(spec.sub) + " alpha=" + std::to_string(spec.alpha) +
             " grid_step=" + std::to_string(cfg.grid_step);
  ens.values.assign(paths * ens.times.size(), 0);
  ens.validate();
  const std::size_t m = ens.times.size();
  const SubordinatorSpec stable = StableSpec{spec.alpha < 1.0 ? spec.alpha : 0.5};
  parallel_for(paths, threads, [&](std::size_t p) {
    RngStream rng(seed, p);
    std::vector<double> clock = detail::clock_path(spec, ens.times, cfg, rng);
    if (spec.alpha < 1.0) {
      // Zero clock values map to zero inner time.
      std::vector<double> inner(m, 0.0);
      std::size_t first = 0;
      while (first < m && clock[first] <= 0.0) ++first;
      if (first < m) {
        auto y = sample_first_passage_path(stable, std::span<const double>(clock).subspan(first), cfg, rng);
        std::copy(y.begin(), y.end(), inner.begin() + first);
      }
      clock = std::move(inner);
    }
    gcp_at_clock(spec.rates, clock, rng, std::span<std::int64_t>(ens.values.data() + p * m, m));
  });
  return ens;
}

// ---------------------------------------------------------------------------
// TCGCP-II pmf

/// P(M(H_f(t)) = n) for n in [0, n_max], averaging gcp_pmf(n, H_f(t)) over
/// first-passage draws.
inline std::vector<Estimate> tcgcp2_pmf_range(const TimeChangedSpec& spec, std::int64_t n_max, double t,
                                              std::size_t paths, std::uint64_t seed,
                                              const FirstPassageConfig& cfg = {}, int threads = 0) {
  spec.validate();
  detail::require(spec.direction == ClockDirection::Inverse, "tcgcp2_pmf: needs an inverse clock");
  detail::require(spec.alpha == 1.0, "tcgcp2_pmf: needs alpha = 1");
  detail::require(n_max >= 0 && t > 0.0, "tcgcp2_pmf: need n >= 0 and t > 0");
  const std::size_t K = static_cast<std::size_t>(n_max) + 1;
  return mc_means(paths, seed, K, threads, [&](RngStream& rng, std::size_t, std::span<double> o) {
    const double h = sample_first_passage(spec.sub, t, cfg, rng);
    for (std::size_t n = 0; n < K; ++n)
      o[n] = h > 0.0 ? gcp_pmf(spec.rates, n, h) : (n == 0 ? 1.0 : 0.0);
  });
}

inline Estimate tcgcp2_pmf(const TimeChangedSpec& spec, std::int64_t n, double t, std::size_t paths,
                           std::uint64_t seed, const FirstPassageConfig& cfg = {}) {
  detail::require(n >= 0, "tcgcp2_pmf: n must be nonnegative");
  return tcgcp2_pmf_range(spec, n, t, paths, seed, cfg)[static_cast<std::size_t>(n)];
}

// ---------------------------------------------------------------------------
// Moments

struct MomentEstimates {
  Estimate mean;  // at t
  Estimate var;   // at t
  Estimate cov;   // between s and t
};

namespace detail {

// Combines clock moments into mean, var and cov. Inputs per path:
// a1 = C_s^alpha, a2 = C_t^alpha, b1 = C_s^{2alpha}, b2 = C_t^{2alpha},
// c = C_t^{2alpha} B(alpha, alpha+1; C_s / C_t). Standard errors by the
// delta method on per-path influence values.
inline MomentEstimates combine_clock_moments(const DerivedConstants& k, double alpha,
                                             const std::vector<std::array<double, 5>>& v) {
  const std::size_t N = v.size();
  std::array<CompensatedSum, 5> sums;
  for (const auto& row : v)
    for (int i = 0; i < 5; ++i) sums[i].add(row[i]);
  std::array<double, 5> m{};
  for (int i = 0; i < 5; ++i) m[i] = sums[i].value() / static_cast<double>(N);
  const double l1sq = k.l1 * k.l1;
  MomentEstimates out;
  const double mean = k.l1 * m[1];
  const double var = m[1] * (k.l2 - l1sq * m[1]) + 2.0 * k.d * m[3];
  const double cov = k.l2 * m[0] + k.d * m[2] - l1sq * m[0] * m[1] + alpha * l1sq * m[4];
  RunningMoments im, iv, ic;
  for (const auto& r : v) {
    im.add(k.l1 * r[1]);
    iv.add((k.l2 - 2.0 * l1sq * m[1]) * r[1] + 2.0 * k.d * r[3]);
    ic.add(k.l2 * r[0] + k.d * r[2] - l1sq * (m[1] * r[0] + m[0] * r[1]) + alpha * l1sq * r[4]);
  }
  out.mean = {mean, im.std_error()};
  out.var = {var, iv.std_error()};
  out.cov = {cov, ic.std_error()};
  return out;
}

inline MomentEstimates clock_moment_estimates(const TimeChangedSpec& spec, const DerivedConstants& k,
                                              double s, double t, std::size_t paths, std::uint64_t seed,
                                              const FirstPassageConfig& cfg, int threads) {
  detail::require(s > 0.0 && s <= t, "moments: need 0 < s <= t");
  detail::require(paths >= 2, "moments: need at least 2 paths");
  const double alpha = spec.alpha;
  std::vector<std::array<double, 5>> v(paths);
  std::vector<double> levels = s == t ? std::vector<double>{t} : std::vector<double>{s, t};
  parallel_for(paths, threads, [&](std::size_t p) {
    RngStream rng(seed, p);
    const auto c = clock_path(spec, levels, cfg, rng);
    const double cs = c.front(), ct = c.back();
    const double ratio = ct > 0.0 ? std::min(1.0, cs / ct) : 1.0;
    const double b2 = std::pow(ct, 2.0 * alpha);
    const double ib = ratio > 0.0 ? incomplete_beta(alpha, alpha + 1.0, ratio) : 0.0;
    v[p] = {std::pow(cs, alpha), std::pow(ct, alpha), std::pow(cs, 2.0 * alpha), b2, b2 * ib};
  });
  return combine_clock_moments(k, alpha, v);
}

}  // namespace detail

/// TCGFCP-I moments with clock expectations estimated from `paths` coupled
/// paths: D(s) and D(t) = D(s) + an independent increment.
inline MomentEstimates tcgfcp1_moments(const TimeChangedSpec& spec, const DerivedConstants& k, double s,
                                       double t, std::size_t paths, std::uint64_t seed = 0, int threads = 0) {
  spec.validate();
  detail::require(spec.direction == ClockDirection::Forward, "tcgfcp1_moments: needs a forward clock");
  return detail::clock_moment_estimates(spec, k, s, t, paths, seed, FirstPassageConfig{}, threads);
}

/// TCGFCP-II moments from coupled first-passage paths H(s) <= H(t).
inline MomentEstimates tcgfcp2_moments(const TimeChangedSpec& spec, const DerivedConstants& k, double s,
                                       double t, std::size_t paths, std::uint64_t seed = 0,
                                       const FirstPassageConfig& cfg = {}, int threads = 0) {
  spec.validate();
  detail::require(spec.direction == ClockDirection::Inverse, "tcgfcp2_moments: needs an inverse clock");
  return detail::clock_moment_estimates(spec, k, s, t, paths, seed, cfg, threads);
}

/// E D^p(t) for the gamma clock.
inline double gamma_clock_moment(const GammaSpec& g, double p, double t) {
  const double shape = g.b * t;
  return std::exp(std::lgamma(shape + p) - std::lgamma(shape) - p * std::log(g.a));
}

/// E B(alpha, alpha+1; D(s)/D(t)) for the gamma clock, where
/// D(s)/D(t) ~ Beta(b s, b (t-s)) independently of D(t).
inline double gamma_clock_beta_term(const GammaSpec& g, double alpha, double s, double t) {
  if (s == t) return beta(alpha, alpha + 1.0);
  const double A = g.b * s, B = g.b * (t - s);
  // E B(R) = int_0^1 u^{alpha-1} (1-u)^alpha P(R > u) du, with u = v^{1/alpha}.
  QuadOptions opt;
  opt.tol = 1e-12;
  opt.initial_panels = 64;
  const double v = quad_interval(
      [&](double w) {
        if (w <= 0.0) return 1.0;
        const double u = std::pow(w, 1.0 / alpha);
        if (u >= 1.0) return 0.0;
        return std::pow(1.0 - u, alpha) * boost::math::ibetac(A, B, u);
      },
      0.0, 1.0, opt);
  return v / alpha;
}

/// Exact TCGFCP-I moments for the gamma clock.
inline MeanVarCov tcgfcp1_moments_gamma(const RateVector& rates, double alpha, const GammaSpec& g, double s,
                                        double t) {
  detail::require(s > 0.0 && s <= t, "tcgfcp1_moments_gamma: need 0 < s <= t");
  const auto k = derived_constants(rates, alpha);
  const double l1sq = k.l1 * k.l1;
  const double a1 = gamma_clock_moment(g, alpha, s), a2 = gamma_clock_moment(g, alpha, t);
  const double b1 = gamma_clock_moment(g, 2.0 * alpha, s), b2 = gamma_clock_moment(g, 2.0 * alpha, t);
  const double c = b2 * gamma_clock_beta_term(g, alpha, s, t);
  return {k.l1 * a2, a2 * (k.l2 - l1sq * a2) + 2.0 * k.d * b2,
          k.l2 * a1 + k.d * b1 - l1sq * a1 * a2 + alpha * l1sq * c};
}

inline double tcgfcp1_corr_gamma(const RateVector& rates, double alpha, const GammaSpec& g, double s, double t) {
  const auto st = tcgfcp1_moments_gamma(rates, alpha, g, s, t);
  const auto ss = tcgfcp1_moments_gamma(rates, alpha, g, s, s);
  return st.cov / std::sqrt(ss.var * st.var);
}

/// Corr(Z(s), Z(t)) ~ c1(s) t^{-theta}. Clock moments at s are exact for the
/// gamma clock and estimated with `paths` draws otherwise.
inline CorrAsymptote tcgfcp1_corr_asymptote(const TimeChangedSpec& spec, const DerivedConstants& k, double s,
                                            std::size_t paths = 1000000, std::uint64_t seed = 0) {
  spec.validate();
  detail::require(spec.direction == ClockDirection::Forward, "tcgfcp1_corr_asymptote: needs a forward clock");
  detail::require(s > 0.0, "tcgfcp1_corr_asymptote: s must be positive");
  detail::require(k.k1 > 0.0, "tcgfcp1_corr_asymptote: need k1 > 0");
  if (k.k2 < k.k1 * k.k1) throw DomainError("tcgfcp1_corr_asymptote: need k2 >= k1^2");
  detail::require(k.theta_growth > 0.0 && k.theta_growth < 1.0, "tcgfcp1_corr_asymptote: need 0 < theta < 1");
  const double alpha = spec.alpha;
  double a1, b1, var_s;
  if (const auto* g = std::get_if<GammaSpec>(&spec.sub)) {
    a1 = gamma_clock_moment(*g, alpha, s);
    b1 = gamma_clock_moment(*g, 2.0 * alpha, s);
  } else {
    const auto e = mc_means(paths, seed, 2, 0, [&](RngStream& rng, std::size_t, std::span<double> o) {
      const double x = sample_marginal(spec.sub, s, rng);
      o[0] = std::pow(x, alpha);
      o[1] = std::pow(x, 2.0 * alpha);
    });
    a1 = e[0].value;
    b1 = e[1].value;
  }
  var_s = a1 * (k.l2 - k.l1 * k.l1 * a1) + 2.0 * k.d * b1;
  const double growth = 2.0 * k.d * k.k2 - k.k1 * k.k1 * k.l1 * k.l1;
  detail::require(growth > 0.0 && var_s > 0.0, "tcgfcp1_corr_asymptote: nonpositive variance constant");
  return {(k.l2 * a1 + k.d * b1) / std::sqrt(var_s * growth), -k.theta_growth};
}

// ---------------------------------------------------------------------------
// Integer-order governing equations

namespace detail {

// p(n, t) for all n <= n_max by quadrature of gcp_pmf against the clock density.
inline std::vector<double> tc_pmf_quadrature(const RateVector& rates, const SubordinatorSpec& sub,
                                             std::int64_t n_max, double t) {
  std::vector<double> out(static_cast<std::size_t>(n_max) + 1);
  for (std::int64_t n = 0; n <= n_max; ++n)
    out[n] = integrate_against_density(sub, t, [&](double x) { return gcp_pmf(rates, n, x); }, 1e-13);
  return out;
}

inline double lower_state_rhs(const RateVector& rates, std::span<const double> p, std::int64_t n) {
  double rhs = rates.Lambda() * p[n];
  for (int j = 1; j <= std::min<std::int64_t>(n, rates.k()); ++j) rhs -= rates[j] * p[n - j];
  return rhs;
}

}  // namespace detail

/// |-2 sqrt(eta) p' + p'' - (Lambda p(n) - sum_j lambda_j p(n-j))| for the
/// tempered stable clock with theta = 1/2.
inline double tss_ode_residual(const RateVector& rates, double eta, std::int64_t n, double t, double h = 1e-3) {
  detail::require(eta > 0.0, "tss_ode_residual: eta must be positive");
  detail::require(n >= 0, "tss_ode_residual: n must be nonnegative");
  detail::require(t >= 0.2, "tss_ode_residual: need t >= 0.2");
  detail::require(h > 0.0 && h < 0.1 * t, "tss_ode_residual: need 0 < h < t/10");
  const SubordinatorSpec sub = TemperedStableSpec{eta, 0.5};
  const auto pm = detail::tc_pmf_quadrature(rates, sub, n, t - h);
  const auto p0 = detail::tc_pmf_quadrature(rates, sub, n, t);
  const auto pp = detail::tc_pmf_quadrature(rates, sub, n, t + h);
  const double d1 = (pp[n] - pm[n]) / (2.0 * h);
  const double d2 = (pp[n] - 2.0 * p0[n] + pm[n]) / (h * h);
  return std::abs(-2.0 * std::sqrt(eta) * d1 + d2 - detail::lower_state_rhs(rates, p0, n));
}

inline double tss_ode_residual(const RateVector& rates, const TemperedStableSpec& sub, std::int64_t n, double t,
                               double h = 1e-3) {
  if (sub.theta != 0.5) throw Unsupported("tss_ode_residual: only theta = 1/2");
  return tss_ode_residual(rates, sub.eta, n, t, h);
}

/// |p'' - 2 delta gamma p' - 2 delta^2 (Lambda p(n) - sum_j lambda_j p(n-j))|
/// for the inverse Gaussian clock.
inline double igs_ode_residual(const RateVector& rates, double delta, double gamma_p, std::int64_t n, double t,
                               double h = 1e-3) {
  detail::require(delta > 0.0 && gamma_p > 0.0, "igs_ode_residual: delta, gamma must be positive");
  detail::require(n >= 0, "igs_ode_residual: n must be nonnegative");
  detail::require(t >= 0.2, "igs_ode_residual: need t >= 0.2");
  detail::require(h > 0.0 && h < 0.1 * t, "igs_ode_residual: need 0 < h < t/10");
  const SubordinatorSpec sub = InverseGaussianSpec{delta, gamma_p};
  const auto pm = detail::tc_pmf_quadrature(rates, sub, n, t - h);
  const auto p0 = detail::tc_pmf_quadrature(rates, sub, n, t);
  const auto pp = detail::tc_pmf_quadrature(rates, sub, n, t + h);
  const double d1 = (pp[n] - pm[n]) / (2.0 * h);
  const double d2 = (pp[n] - 2.0 * p0[n] + pm[n]) / (h * h);
  return std::abs(d2 - 2.0 * delta * gamma_p * d1 - 2.0 * delta * delta * detail::lower_state_rhs(rates, p0, n));
}

}  // namespace countproc

#endif  // COUNTPROC_TIMECHANGE_HPP
