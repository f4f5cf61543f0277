#ifndef COUNTPROC_SKELLAM_HPP
#define COUNTPROC_SKELLAM_HPP

// Generalized Skellam process S(t) = M1(t) - M2(t) for independent GCPs
// with rates lambda (up) and mu (down), and its fractional version
// S(Y_alpha(t)).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "countproc/error.hpp"
#include "countproc/gcp.hpp"
#include "countproc/parallel.hpp"
#include "countproc/specfun.hpp"
#include "countproc/stats.hpp"
#include "countproc/subordinators.hpp"

namespace countproc {

class SkellamRates {
 public:
  SkellamRates() = default;
  SkellamRates(RateVector up, RateVector down) : up_(std::move(up)), down_(std::move(down)) {
    detail::require(up_.k() == down_.k(), "SkellamRates: up and down must have the same k");
    detail::require(m2() > std::abs(m1()), "SkellamRates: need m2 > |m1|");
  }
  SkellamRates(std::vector<double> up, std::vector<double> down)
      : SkellamRates(RateVector(std::move(up)), RateVector(std::move(down))) {}

  const RateVector& up() const { return up_; }
  const RateVector& down() const { return down_; }
  int k() const { return up_.k(); }
  double Lambda() const { return up_.Lambda(); }
  double LambdaBar() const { return down_.Lambda(); }
  double m1() const { return up_.r1() - down_.r1(); }
  double m2() const { return up_.r2() + down_.r2(); }

 private:
  RateVector up_;
  RateVector down_;
};

// ---------------------------------------------------------------------------
// Bessel-form pmf

/// log of e^{-(L+Lb)t} (L/Lb)^{n/2} I_|n|(2t sqrt(L Lb)). This is the law of
/// the difference of the number of up and down jumps; it is the law of S(t)
/// itself when k = 1 (see gsp_pmf_oracle for the convolution form).
inline double gsp_log_pmf(const SkellamRates& rates, std::int64_t n, double t) {
  detail::require(t > 0.0, "gsp_pmf: t must be positive");
  const double L = rates.Lambda(), Lb = rates.LambdaBar();
  return -(L + Lb) * t + 0.5 * static_cast<double>(n) * (std::log(L) - std::log(Lb)) +
         log_bessel_i(static_cast<int>(n < 0 ? -n : n), 2.0 * t * std::sqrt(L * Lb));
}

inline double gsp_pmf(const SkellamRates& rates, std::int64_t n, double t) {
  return std::exp(gsp_log_pmf(rates, n, t));
}

struct OracleValue {
  double value;
  bool truncation_warning;  // last included term above 1e-15
};

/// Brute-force sum_m P(M1 = m + n) P(M2 = m) (mirrored for n < 0), with
/// m running to `trunc` (default: mean + 12 sd of the summed process + 30).
inline OracleValue gsp_pmf_oracle(const SkellamRates& rates, std::int64_t n, double t,
                                  std::int64_t trunc = -1) {
  detail::require(t > 0.0, "gsp_pmf_oracle: t must be positive");
  const RateVector& hi = n >= 0 ? rates.up() : rates.down();
  const RateVector& lo = n >= 0 ? rates.down() : rates.up();
  const std::int64_t shift = n >= 0 ? n : -n;
  if (trunc < 0) {
    const auto mv = gcp_moments(lo, t);
    trunc = static_cast<std::int64_t>(std::ceil(mv.mean + 12.0 * std::sqrt(mv.var))) + 30;
  }
  CompensatedSum s;
  double last = 0.0;
  for (std::int64_t m = 0; m <= trunc; ++m) {
    last = gcp_pmf(hi, m + shift, t) * gcp_pmf(lo, m, t);
    s.add(last);
  }
  return {s.value(), last > 1e-15};
}

// ---------------------------------------------------------------------------
// Transforms and moments

constexpr double kSkellamPgfUMin = 0.05;

/// E u^{S(t)} for u in [u_min, 1].
inline double gsp_pgf(const SkellamRates& rates, double u, double t, double u_min = kSkellamPgfUMin) {
  detail::require(u > 0.0, "gsp_pgf: u must be positive");
  detail::require(u >= u_min && u <= 1.0, "gsp_pgf: u outside [u_min, 1]");
  CompensatedSum s;
  for (int j = 1; j <= rates.k(); ++j) {
    s.add(rates.up()[j] * (1.0 - std::pow(u, j)));
    s.add(rates.down()[j] * (1.0 - std::pow(u, -j)));
  }
  return std::exp(-t * s.value());
}

inline std::complex<double> gsp_cf(const SkellamRates& rates, double xi, double t) {
  std::complex<double> e{rates.Lambda() + rates.LambdaBar(), 0.0};
  for (int j = 1; j <= rates.k(); ++j) {
    e -= std::polar(rates.up()[j], xi * j);
    e -= std::polar(rates.down()[j], -xi * j);
  }
  return std::exp(-t * e);
}

/// Atoms of the Lévy measure: lambda_j at +j, mu_j at -j.
inline std::map<std::int64_t, double> gsp_levy_weights(const SkellamRates& rates) {
  std::map<std::int64_t, double> w;
  for (int j = 1; j <= rates.k(); ++j) {
    w[j] = rates.up()[j];
    w[-j] = rates.down()[j];
  }
  return w;
}

/// Mean and variance at t, covariance m2 min(s, t).
inline MeanVarCov gsp_moments(const SkellamRates& rates, double s, double t) {
  detail::require(s > 0.0 && t > 0.0, "gsp_moments: s, t must be positive");
  MeanVarCov m{rates.m1() * t, rates.m2() * t, rates.m2() * std::min(s, t)};
  if (!(m.var - m.mean > 0.0)) throw DomainError("gsp_moments: overdispersion violated");
  return m;
}

/// |central dq/dt - (L (q(n-1) - q(n)) - Lb (q(n) - q(n+1)))|.
inline double gsp_ode_residual(const SkellamRates& rates, std::int64_t n, double t, double h = 1e-4) {
  detail::require(t > 0.0, "gsp_ode_residual: t must be positive");
  detail::require(h > 0.0 && h <= 1e-3 * t, "gsp_ode_residual: need 0 < h <= 1e-3 t");
  const double dq = central_first([&](double tt) { return gsp_pmf(rates, n, tt); }, t, h);
  const double q0 = gsp_pmf(rates, n, t);
  const double rhs = rates.Lambda() * (gsp_pmf(rates, n - 1, t) - q0) -
                     rates.LambdaBar() * (q0 - gsp_pmf(rates, n + 1, t));
  return std::abs(dq - rhs);
}

// ---------------------------------------------------------------------------
// Fractional process

/// P(S(Y_alpha(t)) = n) for n in [n_lo, n_hi], mixing the Bessel-form pmf.
inline std::vector<Estimate> gfsp_pmf_range(const SkellamRates& rates, double alpha, std::int64_t n_lo,
                                            std::int64_t n_hi, double t, const MixingOptions& opt = {}) {
  detail::require(n_lo <= n_hi, "gfsp_pmf: need n_lo <= n_hi");
  const std::size_t K = static_cast<std::size_t>(n_hi - n_lo + 1);
  return mix_over_inverse_stable(K, alpha, t, opt, [&](double u, std::size_t i) {
    const std::int64_t n = n_lo + static_cast<std::int64_t>(i);
    if (u <= 0.0) return n == 0 ? 1.0 : 0.0;
    return gsp_pmf(rates, n, u);
  });
}

inline Estimate gfsp_pmf(const SkellamRates& rates, double alpha, std::int64_t n, double t,
                         const MixingOptions& opt = {}) {
  return gfsp_pmf_range(rates, alpha, n, n, t, opt)[0];
}

/// zeta(u) = sum_j lambda_j (u^j - 1) + mu_j (u^{-j} - 1).
inline double gsp_zeta(const SkellamRates& rates, double u) {
  CompensatedSum s;
  for (int j = 1; j <= rates.k(); ++j) {
    s.add(rates.up()[j] * (std::pow(u, j) - 1.0));
    s.add(rates.down()[j] * (std::pow(u, -j) - 1.0));
  }
  return s.value();
}

/// E u^{S(Y_alpha(t))} = E_{alpha,1}(zeta(u) t^alpha).
inline double gfsp_pgf(const SkellamRates& rates, double alpha, double u, double t,
                       double u_min = kSkellamPgfUMin) {
  detail::require(alpha > 0.0 && alpha <= 1.0, "gfsp_pgf: need 0 < alpha <= 1");
  detail::require(u > 0.0, "gfsp_pgf: u must be positive");
  detail::require(u >= u_min && u <= 1.0, "gfsp_pgf: u outside [u_min, 1]");
  return mittag_leffler(alpha, 1.0, 1.0, gsp_zeta(rates, u) * std::pow(t, alpha));
}

namespace detail {

// Calls visit(parts) for every ordered composition of r into n positive parts.
template <class Visit>
void for_each_positive_composition(int r, int n, std::vector<int>& parts, Visit&& visit) {
  if (n == 0) {
    if (r == 0) visit(parts);
    return;
  }
  for (int first = 1; first <= r - (n - 1); ++first) {
    parts.push_back(first);
    for_each_positive_composition(r - first, n - 1, parts, visit);
    parts.pop_back();
  }
}

}  // namespace detail

/// E[(S)(S-1)...(S-r+1)] for S = S(Y_alpha(t)).
inline double gfsp_factorial_moment(const SkellamRates& rates, double alpha, int r, double t) {
  detail::require(r >= 1, "gfsp_factorial_moment: need r >= 1");
  detail::require(r <= 20, "gfsp_factorial_moment: need r <= 20");
  detail::require(alpha > 0.0 && alpha <= 1.0, "gfsp_factorial_moment: need 0 < alpha <= 1");
  detail::require(t > 0.0, "gfsp_factorial_moment: t must be positive");
  // c[m] = zeta^{(m)}(1) / m!
  std::vector<double> c(r + 1, 0.0);
  for (int m = 1; m <= r; ++m) {
    CompensatedSum s;
    for (int j = 1; j <= rates.k(); ++j) {
      s.add(static_cast<double>(falling_factorial(j, m)) * rates.up()[j]);
      const double sign = (m % 2 == 0) ? 1.0 : -1.0;
      s.add(sign * static_cast<double>(rising_factorial(j, m)) * rates.down()[j]);
    }
    c[m] = s.value() / std::exp(log_factorial(m));
  }
  CompensatedSum total;
  std::vector<int> parts;
  for (int n = 1; n <= r; ++n) {
    CompensatedSum inner;
    detail::for_each_positive_composition(r, n, parts, [&](const std::vector<int>& p) {
      double prod = 1.0;
      for (int m : p) prod *= c[m];
      inner.add(prod);
    });
    total.add(std::pow(t, n * alpha) / std::tgamma(n * alpha + 1.0) * inner.value());
  }
  return std::exp(log_factorial(r)) * total.value();
}

/// Mean and variance at t, covariance between s <= t.
inline MeanVarCov gfsp_moments(const SkellamRates& rates, double alpha, double s, double t) {
  detail::require(s > 0.0 && s <= t, "gfsp_moments: need 0 < s <= t");
  const auto yt = inverse_stable_moments(alpha, s, t);
  const auto ys = inverse_stable_moments(alpha, s, s);
  const double m1 = rates.m1(), m2 = rates.m2();
  return {m1 * yt.mean, m2 * yt.mean + m1 * m1 * yt.var, m2 * ys.mean + m1 * m1 * yt.cov};
}

inline double gfsp_corr(const SkellamRates& rates, double alpha, double s, double t) {
  const auto st = gfsp_moments(rates, alpha, s, t);
  const auto ss = gfsp_moments(rates, alpha, s, s);
  return st.cov / std::sqrt(ss.var * st.var);
}

/// Corr(S(s), S(t)) ~ c0(s) t^{-alpha} as t grows, for m1 != 0.
inline CorrAsymptote gfsp_corr_asymptote(const SkellamRates& rates, double alpha, double s) {
  detail::require(alpha > 0.0 && alpha < 1.0, "gfsp_corr_asymptote: need 0 < alpha < 1");
  detail::require(s > 0.0, "gfsp_corr_asymptote: s must be positive");
  const double m1 = rates.m1(), m2 = rates.m2();
  detail::require(m1 != 0.0, "gfsp_corr_asymptote: needs m1 != 0");
  const double g1 = std::tgamma(alpha + 1.0);
  const double g2 = std::tgamma(2.0 * alpha + 1.0);
  const auto ys = inverse_stable_moments(alpha, s, s);
  const double var_s = m2 * ys.mean + m1 * m1 * ys.var;
  const double num = m2 * g1 * g1 * ys.mean + m1 * m1 * alpha * std::pow(s, 2.0 * alpha) * beta(alpha, alpha + 1.0);
  const double den = g1 * g1 * std::sqrt(var_s) * std::sqrt(2.0 * m1 * m1 / g2 - m1 * m1 / (g1 * g1));
  return {num / den, -alpha};
}

// ---------------------------------------------------------------------------
// Sampling

inline std::int64_t sample_gsp(const SkellamRates& rates, double t, RngStream& rng) {
  return sample_gcp(rates.up(), t, rng) - sample_gcp(rates.down(), t, rng);
}

inline std::int64_t sample_gfsp(const SkellamRates& rates, double alpha, double t, RngStream& rng) {
  return sample_gsp(rates, sample_inverse_stable(alpha, t, rng), rng);
}

/// Jointly distributed values at `times`. alpha = 1 gives exact GSP paths;
/// alpha < 1 runs the GSP on a first-passage inverse stable clock.
inline SampleEnsemble sample_gfsp_ensemble(const SkellamRates& rates, double alpha,
                                           std::vector<double> times, std::size_t paths,
                                           std::uint64_t seed, const FirstPassageConfig& cfg = {},
                                           int threads = 0) {
  detail::require(alpha > 0.0 && alpha <= 1.0, "sample_gfsp_ensemble: need 0 < alpha <= 1");
  SampleEnsemble ens;
  ens.paths = paths;
  ens.times = std::move(times);
  ens.seed = seed;
  ens.meta = alpha == 1.0 ? std::string("gsp exact increments")
                          : "gfsp alpha=" + std::to_string(alpha) +
                                " first-passage grid_step=" + std::to_string(cfg.grid_step);
  ens.values.assign(paths * ens.times.size(), 0);
  ens.validate();
  const SubordinatorSpec stable = StableSpec{alpha};
  const std::size_t m = ens.times.size();
  parallel_for(paths, threads, [&](std::size_t p) {
    RngStream rng(seed, p);
    std::vector<double> clock =
        alpha == 1.0 ? ens.times : sample_first_passage_path(stable, ens.times, cfg, rng);
    std::vector<std::int64_t> up(m), down(m);
    gcp_at_clock(rates.up(), clock, rng, up);
    gcp_at_clock(rates.down(), clock, rng, down);
    for (std::size_t i = 0; i < m; ++i) ens.values[p * m + i] = up[i] - down[i];
  });
  return ens;
}

// ---------------------------------------------------------------------------
// Fractional governing system

/// L1-Caputo residuals of the fractional system for states n in [n_lo, n_hi]
/// at time t; pmfs on the grid use quadrature mixing (alpha = 1/2).
inline std::vector<FdeResidual> gfsp_fde_residuals(const SkellamRates& rates, double alpha,
                                                   std::int64_t n_lo, std::int64_t n_hi, double t,
                                                   int steps = 2000) {
  detail::require(alpha > 0.0 && alpha < 1.0, "gfsp_fde_residual: need 0 < alpha < 1");
  detail::require(n_lo <= n_hi, "gfsp_fde_residual: need n_lo <= n_hi");
  const auto grid = uniform_grid(t, steps);
  const std::int64_t lo = n_lo - 1, hi = n_hi + 1;
  const std::size_t K = static_cast<std::size_t>(hi - lo + 1);
  std::vector<std::vector<double>> p(K, std::vector<double>(grid.size()));
  MixingOptions opt;
  opt.method = MixingMethod::Quadrature;
  parallel_for(grid.size(), 0, [&](std::size_t i) {
    if (grid[i] == 0.0) {
      for (std::size_t n = 0; n < K; ++n) p[n][i] = (lo + static_cast<std::int64_t>(n) == 0) ? 1.0 : 0.0;
      return;
    }
    const auto e = gfsp_pmf_range(rates, alpha, lo, hi, grid[i], opt);
    for (std::size_t n = 0; n < K; ++n) p[n][i] = e[n].value;
  });
  std::vector<FdeResidual> out;
  for (std::size_t n = 1; n + 1 < K; ++n) {
    const double lhs = caputo_l1(grid, p[n], alpha);
    const double q = p[n].back();
    const double rhs = rates.Lambda() * (p[n - 1].back() - q) - rates.LambdaBar() * (q - p[n + 1].back());
    const double r = std::abs(lhs - rhs);
    out.push_back({r, rhs, r / std::max(std::abs(rhs), 1e-6)});
  }
  return out;
}

inline FdeResidual gfsp_fde_residual(const SkellamRates& rates, double alpha, std::int64_t n, double t,
                                     int steps = 2000) {
  return gfsp_fde_residuals(rates, alpha, n, n, t, steps)[0];
}

}  // namespace countproc

#endif  // COUNTPROC_SKELLAM_HPP
