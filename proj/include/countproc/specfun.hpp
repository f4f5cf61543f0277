#ifndef COUNTPROC_SPECFUN_HPP
#define COUNTPROC_SPECFUN_HPP

// Special functions: three-parameter Mittag-Leffler and its derivatives,
// modified Bessel I_n, the Wright function M_alpha, beta functions and
// integer factorials.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/special_functions/beta.hpp>

#include "countproc/error.hpp"
#include "countproc/stats.hpp"

namespace countproc {

struct SeriesPolicy {
  double rel_tol = 1e-14;
  int max_terms = 10000;

  void validate() const {
    detail::require(rel_tol > 0.0, "SeriesPolicy: rel_tol must be positive");
    detail::require(max_terms >= 1, "SeriesPolicy: max_terms must be >= 1");
  }
};

/// log|1/Gamma(x)| and its sign. At the poles x = 0, -1, -2, ... the
/// reciprocal is exactly zero and `sign` is 0.
struct LogRGamma {
  double log_abs;
  int sign;
};

inline LogRGamma log_rgamma(double x) {
  if (x > 0.0) return {-std::lgamma(x), 1};
  const double nearest = std::round(x);
  if (std::abs(x - nearest) <= 1e-12 * std::max(1.0, std::abs(x)))
    return {-std::numeric_limits<double>::infinity(), 0};
  // 1/Gamma(x) = Gamma(1-x) sin(pi x) / pi
  const double fl = std::floor(x);
  double s = std::sin(std::numbers::pi * (x - fl));
  if (static_cast<std::int64_t>(fl) % 2 != 0) s = -s;
  return {std::lgamma(1.0 - x) + std::log(std::abs(s)) - std::log(std::numbers::pi),
          s > 0.0 ? 1 : -1};
}

inline double rgamma(double x) {
  const auto r = log_rgamma(x);
  return r.sign == 0 ? 0.0 : r.sign * std::exp(r.log_abs);
}

inline double log_factorial(std::int64_t n) { return std::lgamma(static_cast<double>(n) + 1.0); }

namespace detail {

// Sums terms produced by `next(j) -> (log|term|, sign)` until three
// consecutive terms fall below rel_tol relative to the running sum.
template <class Term>
double signed_log_series(Term&& next, const SeriesPolicy& policy, const char* name) {
  policy.validate();
  CompensatedSum sum;
  int small_run = 0;
  for (int j = 0; j < policy.max_terms; ++j) {
    const auto [log_abs, sign] = next(j);
    const double term = sign == 0 ? 0.0 : sign * std::exp(log_abs);
    sum.add(term);
    const double partial = std::abs(sum.value());
    if (std::abs(term) <= policy.rel_tol * partial) {
      if (++small_run >= 3) return sum.value();
    } else {
      small_run = 0;
    }
  }
  throw NonConvergence(std::string(name) + ": series did not converge within max_terms");
}

}  // namespace detail

/// E^gamma_{alpha,beta}(x) = sum_j Gamma(j+gamma) x^j / (Gamma(gamma) j! Gamma(j alpha + beta)).
inline double mittag_leffler(double alpha, double beta, double gamma, double x,
                             const SeriesPolicy& policy = {}) {
  detail::require(alpha > 0.0 && beta > 0.0 && gamma > 0.0,
                  "mittag_leffler: alpha, beta, gamma must be positive");
  detail::require(std::isfinite(x), "mittag_leffler: x must be finite");
  if (x == 0.0) return 1.0 / std::tgamma(beta);
  const double lg_gamma = std::lgamma(gamma);
  const double log_x = std::log(std::abs(x));
  const int xsign = x < 0.0 ? -1 : 1;
  auto term = [&](int j) {
    const double jd = j;
    const double la = std::lgamma(jd + gamma) - lg_gamma - std::lgamma(jd + 1.0) -
                      std::lgamma(jd * alpha + beta) + jd * log_x;
    const int sign = (xsign < 0 && (j % 2 == 1)) ? -1 : 1;
    return std::pair{la, sign};
  };
  return detail::signed_log_series(term, policy, "mittag_leffler");
}

/// n-th derivative of E_{beta,gamma}: n! E^{n+1}_{beta, n beta + gamma}(x).
inline double mittag_leffler_derivative(int n, double beta, double gamma, double x,
                                        const SeriesPolicy& policy = {}) {
  detail::require(n >= 0, "mittag_leffler_derivative: n must be >= 0");
  detail::require(beta > 0.0 && gamma > 0.0, "mittag_leffler_derivative: beta, gamma must be positive");
  return std::exp(log_factorial(n)) *
         mittag_leffler(beta, n * beta + gamma, n + 1.0, x, policy);
}

/// log I_n(x) for x >= 0. Terms are generated by their ratio recurrence
/// relative to the leading term; the running sum is rescaled before it can
/// overflow.
inline double log_bessel_i(int n, double x, const SeriesPolicy& policy = {}) {
  detail::require(x >= 0.0, "log_bessel_i: x must be nonnegative");
  policy.validate();
  const int m = n < 0 ? -n : n;
  if (x == 0.0) return m == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  const double q = 0.25 * x * x;
  double log_scale = m * std::log(0.5 * x) - log_factorial(m);
  double term = 1.0;
  CompensatedSum sum;
  sum.add(1.0);
  int small_run = 0;
  for (int j = 1; j < policy.max_terms; ++j) {
    term *= q / (static_cast<double>(j) * static_cast<double>(j + m));
    sum.add(term);
    if (term <= policy.rel_tol * sum.value()) {
      if (++small_run >= 3) return log_scale + std::log(sum.value());
    } else {
      small_run = 0;
    }
    if (sum.value() > 1e280) {
      const double v = sum.value();
      log_scale += std::log(v);
      term /= v;
      sum = CompensatedSum{};
      sum.add(1.0);
    }
  }
  throw NonConvergence("bessel_i: series did not converge within max_terms");
}

/// Modified Bessel function of the first kind, integer order.
inline double bessel_i(int n, double x, const SeriesPolicy& policy = {}) {
  const int m = n < 0 ? -n : n;
  const double v = std::exp(log_bessel_i(m, std::abs(x), policy));
  return (x < 0.0 && m % 2 == 1) ? -v : v;
}

namespace detail {

struct WrightSeries {
  double value;
  double max_term;
};

inline WrightSeries wright_series(double alpha, double x, const SeriesPolicy& policy) {
  if (x == 0.0) return {rgamma(1.0 - alpha), std::abs(rgamma(1.0 - alpha))};
  const double lx = std::log(x);
  double max_term = 0.0;
  auto term = [&](int j) {
    const auto rg = log_rgamma(1.0 - alpha - j * alpha);
    const double la = j * lx - log_factorial(j) + rg.log_abs;
    int sign = rg.sign;
    if (j % 2 == 1) sign = -sign;
    if (sign != 0) max_term = std::max(max_term, std::exp(la));
    return std::pair{la, sign};
  };
  // Terms at Gamma poles are exactly zero and are skipped, so they never
  // count toward the stopping run.
  CompensatedSum sum;
  int small_run = 0;
  for (int j = 0; j < policy.max_terms; ++j) {
    const auto [la, sign] = term(j);
    if (sign == 0) continue;
    const double t = sign * std::exp(la);
    sum.add(t);
    if (std::abs(t) <= policy.rel_tol * std::abs(sum.value())) {
      if (++small_run >= 3) return {sum.value(), max_term};
    } else {
      small_run = 0;
    }
  }
  throw NonConvergence("wright_m: series did not converge within max_terms");
}

inline double scan_wright_bound(double alpha) {
  // Largest x on a 0.01 grid where max|term| / |M| stays below 1e6.
  const SeriesPolicy policy{1e-16, 100000};
  double last_ok = 0.0;
  for (int i = 1; i <= 5000; ++i) {
    const double x = 0.01 * i;
    WrightSeries s;
    try {
      s = wright_series(alpha, x, policy);
    } catch (const NonConvergence&) {
      break;
    }
    if (!(s.value > 0.0) || s.max_term / s.value >= 1e6) break;
    last_ok = x;
  }
  return last_ok;
}

inline const std::array<double, 9>& wright_bound_table() {
  static const std::array<double, 9> table = [] {
    std::array<double, 9> t{};
    for (int i = 0; i < 9; ++i) t[i] = scan_wright_bound(0.1 * (i + 1));
    return t;
  }();
  return table;
}

}  // namespace detail

/// Largest x for which the Wright series keeps at least ten significant
/// digits (cancellation loses fewer than six). Tabulated for alpha in
/// {0.1, ..., 0.9}; other alpha are scanned directly.
inline double wright_stability_bound(double alpha) {
  detail::require(alpha > 0.0 && alpha < 1.0, "wright_stability_bound: need 0 < alpha < 1");
  const double scaled = alpha * 10.0;
  const double r = std::round(scaled);
  if (std::abs(scaled - r) < 1e-12 && r >= 1.0 && r <= 9.0)
    return detail::wright_bound_table()[static_cast<int>(r) - 1];
  return detail::scan_wright_bound(alpha);
}

/// Wright function M_alpha(x) = sum_j (-x)^j / (j! Gamma(1 - alpha - j alpha)), x >= 0.
inline double wright_m(double alpha, double x, const SeriesPolicy& policy = {}) {
  detail::require(alpha > 0.0 && alpha < 1.0, "wright_m: need 0 < alpha < 1");
  detail::require(x >= 0.0, "wright_m: x must be nonnegative");
  policy.validate();
  const double bound = wright_stability_bound(alpha);
  if (x > bound)
    throw StabilityError("wright_m: x=" + std::to_string(x) + " exceeds stability bound " +
                         std::to_string(bound) + " for alpha=" + std::to_string(alpha));
  return detail::wright_series(alpha, x, policy).value;
}

inline double beta(double a, double b) {
  detail::require(a > 0.0 && b > 0.0, "beta: a, b must be positive");
  return boost::math::beta(a, b);
}

/// Unregularized incomplete beta, integral_0^x u^{a-1} (1-u)^{b-1} du.
inline double incomplete_beta(double a, double b, double x) {
  detail::require(a > 0.0 && b > 0.0, "incomplete_beta: a, b must be positive");
  detail::require(x >= 0.0 && x <= 1.0, "incomplete_beta: x must lie in [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return boost::math::beta(a, b);
  return boost::math::beta(a, b, x);
}

/// (j)_m = j (j-1) ... (j-m+1).
inline std::int64_t falling_factorial(std::int64_t j, int m) {
  detail::require(m >= 0, "falling_factorial: m must be >= 0");
  std::int64_t r = 1;
  for (int i = 0; i < m; ++i) {
    if (__builtin_mul_overflow(r, j - i, &r)) throw DomainError("falling_factorial: overflow");
    if (r == 0) return 0;
  }
  return r;
}

/// j^{(m)} = j (j+1) ... (j+m-1).
inline std::int64_t rising_factorial(std::int64_t j, int m) {
  detail::require(m >= 0, "rising_factorial: m must be >= 0");
  std::int64_t r = 1;
  for (int i = 0; i < m; ++i) {
    if (__builtin_mul_overflow(r, j + i, &r)) throw DomainError("rising_factorial: overflow");
    if (r == 0) return 0;
  }
  return r;
}

/// Pochhammer symbol (x)_m = x (x+1) ... (x+m-1) for real x.
inline double pochhammer(double x, int m) {
  detail::require(m >= 0, "pochhammer: m must be >= 0");
  double r = 1.0;
  for (int i = 0; i < m; ++i) r *= x + i;
  return r;
}

}  // namespace countproc

#endif  // COUNTPROC_SPECFUN_HPP
