#ifndef COUNTPROC_GCP_HPP
#define COUNTPROC_GCP_HPP

// Generalized counting process M(t): jumps of size j = 1..k at rates
// lambda_j. Exact pmf by enumerating the solution set of
// x_1 + 2 x_2 + ... + k x_k = n, pgf and characteristic function, moments,
// samplers, and the fractional version M(Y_alpha(t)) obtained by mixing over
// the inverse stable clock.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "countproc/error.hpp"
#include "countproc/parallel.hpp"
#include "countproc/rng.hpp"
#include "countproc/specfun.hpp"
#include "countproc/stats.hpp"
#include "countproc/subordinators.hpp"

namespace countproc {

/// Jump rates lambda_1..lambda_k.
class RateVector {
 public:
  RateVector() = default;
  explicit RateVector(std::vector<double> lambda) : lambda_(std::move(lambda)) {
    detail::require(!lambda_.empty(), "RateVector: need k >= 1");
    for (double l : lambda_)
      detail::require(l > 0.0 && std::isfinite(l), "RateVector: every rate must be positive");
  }

  int k() const { return static_cast<int>(lambda_.size()); }
  /// Rate of jumps of size j, j = 1..k.
  double operator[](int j) const { return lambda_[j - 1]; }
  const std::vector<double>& values() const { return lambda_; }

  double Lambda() const {
    CompensatedSum s;
    for (double l : lambda_) s.add(l);
    return s.value();
  }
  double r1() const {
    CompensatedSum s;
    for (int j = 1; j <= k(); ++j) s.add(j * (*this)[j]);
    return s.value();
  }
  double r2() const {
    CompensatedSum s;
    for (int j = 1; j <= k(); ++j) s.add(static_cast<double>(j) * j * (*this)[j]);
    return s.value();
  }

  /// lambda_j = lambda for every j.
  static RateVector uniform(int k, double lambda) {
    detail::require(k >= 1, "RateVector::uniform: need k >= 1");
    return RateVector(std::vector<double>(k, lambda));
  }

  /// Pólya-Aeppli weights lambda_j = lambda (1-rho) rho^{j-1} / (1-rho^k).
  static RateVector polya_aeppli(int k, double lambda, double rho) {
    detail::require(k >= 1, "RateVector::polya_aeppli: need k >= 1");
    detail::require(rho > 0.0 && rho < 1.0, "RateVector::polya_aeppli: need 0 < rho < 1");
    std::vector<double> v(k);
    const double norm = 1.0 - std::pow(rho, k);
    for (int j = 1; j <= k; ++j) v[j - 1] = lambda * (1.0 - rho) * std::pow(rho, j - 1) / norm;
    return RateVector(std::move(v));
  }

 private:
  std::vector<double> lambda_;
};

// ---------------------------------------------------------------------------
// Compositions

/// A solution x of x_1 + 2 x_2 + ... + k x_k = n; s_k = x_1 + ... + x_k.
struct Composition {
  std::vector<std::int64_t> x;
  std::int64_t s_k = 0;

  std::int64_t weighted_sum() const {
    std::int64_t w = 0;
    for (std::size_t j = 0; j < x.size(); ++j) w += static_cast<std::int64_t>(j + 1) * x[j];
    return w;
  }
  bool operator==(const Composition&) const = default;
};

/// Visits every solution in descending lexicographic order of x.
inline void for_each_composition(int k, std::int64_t n,
                                 const std::function<void(const Composition&)>& visit) {
  detail::require(k >= 1, "enumerate_compositions: need k >= 1");
  detail::require(n >= 0, "enumerate_compositions: n must be nonnegative");
  Composition c;
  c.x.assign(k, 0);
  // Assign x_1, x_2, ... in turn; x_k is forced by the remainder.
  std::function<void(int, std::int64_t, std::int64_t)> dfs = [&](int j, std::int64_t rem,
                                                                 std::int64_t count) {
    if (j == k) {
      if (rem % k != 0) return;
      c.x[k - 1] = rem / k;
      c.s_k = count + rem / k;
      visit(c);
      c.x[k - 1] = 0;
      return;
    }
    for (std::int64_t xj = rem / j; xj >= 0; --xj) {
      c.x[j - 1] = xj;
      dfs(j + 1, rem - j * xj, count + xj);
    }
    c.x[j - 1] = 0;
  };
  dfs(1, n, 0);
}

inline std::vector<Composition> enumerate_compositions(int k, std::int64_t n) {
  std::vector<Composition> out;
  for_each_composition(k, n, [&](const Composition& c) { out.push_back(c); });
  return out;
}

/// |Omega(k, n)|: partitions of n into parts of size at most k.
inline double count_compositions(int k, std::int64_t n) {
  detail::require(k >= 1 && n >= 0, "count_compositions: need k >= 1, n >= 0");
  std::vector<double> ways(static_cast<std::size_t>(n) + 1, 0.0);
  ways[0] = 1.0;
  for (int part = 1; part <= k; ++part)
    for (std::int64_t m = part; m <= n; ++m) ways[m] += ways[m - part];
  return ways[n];
}

// ---------------------------------------------------------------------------
// Exact distribution

inline double gcp_log_pmf(const RateVector& rates, std::int64_t n, double t) {
  detail::require(n >= 0, "gcp_pmf: n must be nonnegative");
  detail::require(t > 0.0, "gcp_pmf: t must be positive");
  const double Lt = rates.Lambda() * t;
  if (rates.k() == 1) return n * std::log(rates[1] * t) - log_factorial(n) - Lt;
  std::vector<double> log_rate_t(rates.k());
  for (int j = 1; j <= rates.k(); ++j) log_rate_t[j - 1] = std::log(rates[j] * t);
  LogSumExp acc;
  for_each_composition(rates.k(), n, [&](const Composition& c) {
    double lt = 0.0;
    for (int j = 0; j < rates.k(); ++j)
      if (c.x[j] > 0) lt += c.x[j] * log_rate_t[j] - log_factorial(c.x[j]);
    acc.add(lt);
  });
  return acc.log_value() - Lt;
}

/// P(M(t) = n).
inline double gcp_pmf(const RateVector& rates, std::int64_t n, double t) {
  return std::exp(gcp_log_pmf(rates, n, t));
}

/// E u^{M(t)} for |u| <= 1.
inline double gcp_pgf(const RateVector& rates, double u, double t) {
  detail::require(std::abs(u) <= 1.0, "gcp_pgf: need |u| <= 1");
  CompensatedSum s;
  for (int j = 1; j <= rates.k(); ++j) s.add(rates[j] * (1.0 - std::pow(u, j)));
  return std::exp(-s.value() * t);
}

inline std::complex<double> gcp_cf(const RateVector& rates, double xi, double t) {
  std::complex<double> e{0.0, 0.0};
  for (int j = 1; j <= rates.k(); ++j) e += std::polar(rates[j], xi * j);
  return std::exp(-t * (rates.Lambda() - e));
}

struct MeanVar {
  double mean;
  double var;
};

inline MeanVar gcp_moments(const RateVector& rates, double t) {
  return {rates.r1() * t, rates.r2() * t};
}

struct MeanVarCov {
  double mean;  // at t
  double var;   // at t
  double cov;   // between s and t
};

/// GFCP moments: mean and variance at t, covariance between s <= t.
inline MeanVarCov gfcp_moments(const RateVector& rates, double alpha, double s, double t) {
  detail::require(s > 0.0 && s <= t, "gfcp_moments: need 0 < s <= t");
  const auto yt = inverse_stable_moments(alpha, s, t);
  const auto ys = inverse_stable_moments(alpha, s, s);
  const double r1 = rates.r1(), r2 = rates.r2();
  return {r1 * yt.mean, r2 * yt.mean + r1 * r1 * yt.var, r2 * ys.mean + r1 * r1 * yt.cov};
}

// ---------------------------------------------------------------------------
// Sampling

/// M(t) as sum_j j N_j(t) with independent Poisson N_j.
inline std::int64_t sample_gcp(const RateVector& rates, double t, RngStream& rng) {
  detail::require(t >= 0.0, "sample_gcp: t must be nonnegative");
  std::int64_t m = 0;
  for (int j = 1; j <= rates.k(); ++j) m += j * rng.poisson(rates[j] * t);
  return m;
}

/// Jump times and sizes of one path on [0, horizon].
struct SamplePath {
  double horizon = 0.0;
  std::vector<double> times;
  std::vector<int> sizes;

  std::int64_t value_at(double t) const {
    std::int64_t v = 0;
    for (std::size_t i = 0; i < times.size() && times[i] <= t; ++i) v += sizes[i];
    return v;
  }
};

/// Superposition of k Poisson streams: exponential(Lambda) gaps, and each
/// jump has size j with probability lambda_j / Lambda.
inline SamplePath sample_gcp_path(const RateVector& rates, double horizon, RngStream& rng) {
  detail::require(horizon > 0.0, "sample_gcp_path: horizon must be positive");
  const double L = rates.Lambda();
  std::vector<double> cum(rates.k());
  double acc = 0.0;
  for (int j = 1; j <= rates.k(); ++j) cum[j - 1] = (acc += rates[j] / L);
  SamplePath path;
  path.horizon = horizon;
  for (double tt = rng.exponential() / L; tt <= horizon; tt += rng.exponential() / L) {
    const double u = rng.uniform();
    int j = 1;
    while (j < rates.k() && u > cum[j - 1]) ++j;
    path.times.push_back(tt);
    path.sizes.push_back(j);
  }
  return path;
}

/// M(t)/t from a single path; approaches r1 as t grows.
inline double gcp_lln_check(const RateVector& rates, double t_large, RngStream& rng) {
  detail::require(t_large >= 1e3, "gcp_lln_check: need t_large >= 1000");
  return static_cast<double>(sample_gcp(rates, t_large, rng)) / t_large;
}

/// Values of M at increasing times, given the clock values at those times.
inline void gcp_at_clock(const RateVector& rates, std::span<const double> clock,
                         RngStream& rng, std::span<std::int64_t> out) {
  std::int64_t m = 0;
  double prev = 0.0;
  for (std::size_t i = 0; i < clock.size(); ++i) {
    const double dt = std::max(0.0, clock[i] - prev);
    m += sample_gcp(rates, dt, rng);
    out[i] = m;
    prev = std::max(prev, clock[i]);
  }
}

/// GFCP marginal draw M(Y_alpha(t)).
inline std::int64_t sample_gfcp(const RateVector& rates, double alpha, double t, RngStream& rng) {
  return sample_gcp(rates, sample_inverse_stable(alpha, t, rng), rng);
}

/// Jointly distributed GFCP values at `times`: the inverse stable clock is
/// a first-passage path of the alpha-stable subordinator, so the values
/// carry an O(grid_step) bias.
inline SampleEnsemble sample_gfcp_ensemble(const RateVector& rates, double alpha,
                                           std::vector<double> times, std::size_t paths,
                                           std::uint64_t seed, const FirstPassageConfig& cfg = {},
                                           int threads = 0) {
  SampleEnsemble ens;
  ens.paths = paths;
  ens.times = std::move(times);
  ens.seed = seed;
  ens.meta = "gfcp alpha=" + std::to_string(alpha) + " first-passage grid_step=" +
             std::to_string(cfg.grid_step);
  ens.values.assign(paths * ens.times.size(), 0);
  ens.validate();
  const SubordinatorSpec stable = StableSpec{alpha};
  const std::size_t m = ens.times.size();
  parallel_for(paths, threads, [&](std::size_t p) {
    RngStream rng(seed, p);
    std::vector<double> clock = alpha == 1.0 ? ens.times
                                             : sample_first_passage_path(stable, ens.times, cfg, rng);
    gcp_at_clock(rates, clock, rng, std::span<std::int64_t>(ens.values.data() + p * m, m));
  });
  return ens;
}

// ---------------------------------------------------------------------------
// Mixing over the inverse stable clock

enum class MixingMethod { Auto, Quadrature, MonteCarlo };

inline const char* method_name(MixingMethod m) {
  switch (m) {
    case MixingMethod::Auto: return "auto";
    case MixingMethod::Quadrature: return "quadrature";
    case MixingMethod::MonteCarlo: return "mc";
  }
  return "?";
}

struct MixingOptions {
  MixingMethod method = MixingMethod::Auto;
  std::size_t paths = 1000000;
  std::uint64_t seed = 0;
  int threads = 0;
  double quad_tol = 1e-10;
};

/// True when the inverse stable density can be integrated over the whole
/// half-line with a tail below 1e-12. Only alpha = 1/2 has a closed form; the
/// Wright series for other alpha stops at a point where the remaining tail
/// mass is still around 1e-4.
inline bool mixing_quadrature_supported(double alpha) { return alpha == 0.5; }

/// Integral of g(u) h_alpha(u, t) du over u >= 0 for the supported alpha.
template <class G>
double integrate_against_inverse_stable(G&& g, double alpha, double t, double tol = 1e-10) {
  if (!mixing_quadrature_supported(alpha))
    throw StabilityError("inverse stable mixing quadrature needs alpha = 1/2 (Wright tail beyond "
                         "the stable range is not negligible); use Monte Carlo mixing");
  // erfc(7.5) < 1e-25, so the density beyond 15 sqrt(t) is negligible.
  const double u_max = 15.0 * std::sqrt(t);
  QuadOptions opt;
  opt.tol = tol;
  opt.initial_panels = 16;
  return quad_interval([&](double u) { return g(u) * inverse_stable_pdf(alpha, u, t); }, 0.0,
                       u_max, opt);
}

/// Evaluates E g_i(Y_alpha(t)) for i < K, where eval(u, i) = g_i(u).
/// Monte Carlo reuses the same clock draws for every i.
template <class Eval>
std::vector<Estimate> mix_over_inverse_stable(std::size_t K, double alpha, double t,
                                              const MixingOptions& opt, Eval&& eval) {
  detail::require(alpha > 0.0 && alpha <= 1.0, "mixing: need 0 < alpha <= 1");
  detail::require(t > 0.0, "mixing: t must be positive");
  std::vector<Estimate> out(K);
  if (alpha == 1.0) {
    for (std::size_t i = 0; i < K; ++i) out[i] = {eval(t, i), std::nullopt};
    return out;
  }
  MixingMethod method = opt.method;
  if (method == MixingMethod::Auto)
    method = mixing_quadrature_supported(alpha) ? MixingMethod::Quadrature : MixingMethod::MonteCarlo;
  if (method == MixingMethod::Quadrature) {
    for (std::size_t i = 0; i < K; ++i)
      out[i] = {integrate_against_inverse_stable([&](double u) { return eval(u, i); }, alpha, t,
                                                 opt.quad_tol),
                std::nullopt};
    return out;
  }
  return mc_means(opt.paths, opt.seed, K, opt.threads,
                  [&](RngStream& rng, std::size_t, std::span<double> o) {
                    const double u = sample_inverse_stable(alpha, t, rng);
                    for (std::size_t i = 0; i < K; ++i) o[i] = eval(u, i);
                  });
}

/// P(M(Y_alpha(t)) = n) for n in [n_lo, n_hi].
inline std::vector<Estimate> gfcp_pmf_range(const RateVector& rates, double alpha, std::int64_t n_lo,
                                            std::int64_t n_hi, double t, const MixingOptions& opt = {}) {
  detail::require(0 <= n_lo && n_lo <= n_hi, "gfcp_pmf: need 0 <= n_lo <= n_hi");
  const std::size_t K = static_cast<std::size_t>(n_hi - n_lo + 1);
  return mix_over_inverse_stable(K, alpha, t, opt, [&](double u, std::size_t i) {
    const std::int64_t n = n_lo + static_cast<std::int64_t>(i);
    if (u <= 0.0) return n == 0 ? 1.0 : 0.0;
    return gcp_pmf(rates, n, u);
  });
}

inline Estimate gfcp_pmf(const RateVector& rates, double alpha, std::int64_t n, double t,
                         const MixingOptions& opt = {}) {
  return gfcp_pmf_range(rates, alpha, n, n, t, opt)[0];
}

// ---------------------------------------------------------------------------
// Governing equations

/// |dp/dt + Lambda p(n) - sum_{j <= min(n,k)} lambda_j p(n-j)| with central differences.
inline double gcp_ode_residual(const RateVector& rates, std::int64_t n, double t, double h = 1e-4) {
  detail::require(h > 0.0 && h < t, "gcp_ode_residual: need 0 < h < t");
  auto p = [&](std::int64_t m, double tt) { return gcp_pmf(rates, m, tt); };
  const double dp = central_first([&](double tt) { return p(n, tt); }, t, h);
  double rhs = -rates.Lambda() * p(n, t);
  for (int j = 1; j <= std::min<std::int64_t>(n, rates.k()); ++j) rhs += rates[j] * p(n - j, t);
  return std::abs(dp - rhs);
}

/// Uniform grid of steps+1 points on [0, t].
inline std::vector<double> uniform_grid(double t, int steps) {
  std::vector<double> g(steps + 1);
  for (int i = 0; i <= steps; ++i) g[i] = t * i / steps;
  g[steps] = t;
  return g;
}

struct FdeResidual {
  double residual;  // |Caputo(p) - rhs|
  double rhs;
  double relative;  // residual / max(|rhs|, 1e-6)
};

/// L1-Caputo residual of the fractional system for GFCP states 0..n_max
/// at time t, using quadrature pmfs (alpha = 1/2).
inline std::vector<FdeResidual> gfcp_fde_residuals(const RateVector& rates, double alpha,
                                                   std::int64_t n_max, double t, int steps = 2000) {
  detail::require(alpha > 0.0 && alpha < 1.0, "gfcp_fde_residual: need 0 < alpha < 1");
  const auto grid = uniform_grid(t, steps);
  const std::size_t K = static_cast<std::size_t>(n_max + 1);
  std::vector<std::vector<double>> p(K, std::vector<double>(grid.size()));
  MixingOptions opt;
  opt.method = MixingMethod::Quadrature;
  parallel_for(grid.size(), 0, [&](std::size_t i) {
    if (grid[i] == 0.0) {
      for (std::size_t n = 0; n < K; ++n) p[n][i] = n == 0 ? 1.0 : 0.0;
      return;
    }
    const auto e = gfcp_pmf_range(rates, alpha, 0, n_max, grid[i], opt);
    for (std::size_t n = 0; n < K; ++n) p[n][i] = e[n].value;
  });
  std::vector<FdeResidual> out;
  for (std::size_t n = 0; n < K; ++n) {
    const double lhs = caputo_l1(grid, p[n], alpha);
    double rhs = -rates.Lambda() * p[n].back();
    for (int j = 1; j <= std::min<std::int64_t>(static_cast<std::int64_t>(n), rates.k()); ++j)
      rhs += rates[j] * p[n - j].back();
    const double r = std::abs(lhs - rhs);
    out.push_back({r, rhs, r / std::max(std::abs(rhs), 1e-6)});
  }
  return out;
}

}  // namespace countproc

#endif  // COUNTPROC_GCP_HPP
