#ifndef COUNTPROC_SUBORDINATORS_HPP
#define COUNTPROC_SUBORDINATORS_HPP

// Lévy subordinators (stable, gamma, tempered stable, inverse Gaussian):
// Bernstein functions and their derivatives, exact marginal samplers,
// closed-form densities, and first-passage samplers for the inverse
// subordinator. Also the inverse stable clock Y_alpha.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "countproc/error.hpp"
#include "countproc/rng.hpp"
#include "countproc/specfun.hpp"

namespace countproc {

struct StableSpec {
  double alpha;
};
struct GammaSpec {
  double a;
  double b;
};
struct TemperedStableSpec {
  double eta;
  double theta;
};
struct InverseGaussianSpec {
  double delta;
  double gamma;
};

using SubordinatorSpec =
    std::variant<StableSpec, GammaSpec, TemperedStableSpec, InverseGaussianSpec>;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline void validate(const SubordinatorSpec& spec) {
  std::visit(overloaded{
                 [](const StableSpec& s) {
                   detail::require(s.alpha > 0.0 && s.alpha < 1.0, "Stable: need 0 < alpha < 1");
                 },
                 [](const GammaSpec& s) {
                   detail::require(s.a > 0.0 && s.b > 0.0, "Gamma: need a > 0 and b > 0");
                 },
                 [](const TemperedStableSpec& s) {
                   detail::require(s.eta > 0.0, "TemperedStable: need eta > 0");
                   detail::require(s.theta > 0.0 && s.theta < 1.0,
                                   "TemperedStable: need 0 < theta < 1");
                 },
                 [](const InverseGaussianSpec& s) {
                   detail::require(s.delta > 0.0 && s.gamma > 0.0,
                                   "InverseGaussian: need delta > 0 and gamma > 0");
                 },
             },
             spec);
}

inline std::string describe(const SubordinatorSpec& spec) {
  return std::visit(
      overloaded{
          [](const StableSpec& s) { return "Stable{alpha=" + std::to_string(s.alpha) + "}"; },
          [](const GammaSpec& s) {
            return "Gamma{a=" + std::to_string(s.a) + ",b=" + std::to_string(s.b) + "}";
          },
          [](const TemperedStableSpec& s) {
            return "TemperedStable{eta=" + std::to_string(s.eta) +
                   ",theta=" + std::to_string(s.theta) + "}";
          },
          [](const InverseGaussianSpec& s) {
            return "InverseGaussian{delta=" + std::to_string(s.delta) +
                   ",gamma=" + std::to_string(s.gamma) + "}";
          },
      },
      spec);
}

/// Bernstein function f with E exp(-s D(t)) = exp(-t f(s)).
inline double bernstein(const SubordinatorSpec& spec, double s) {
  validate(spec);
  detail::require(s >= 0.0, "bernstein: s must be nonnegative");
  return std::visit(overloaded{
                        [&](const StableSpec& p) { return std::pow(s, p.alpha); },
                        [&](const GammaSpec& p) { return p.b * std::log1p(s / p.a); },
                        [&](const TemperedStableSpec& p) {
                          return std::pow(p.eta + s, p.theta) - std::pow(p.eta, p.theta);
                        },
                        [&](const InverseGaussianSpec& p) {
                          return p.delta * (std::sqrt(2.0 * s + p.gamma * p.gamma) - p.gamma);
                        },
                    },
                    spec);
}

/// log|f^{(m)}(s)| for m >= 1. The sign of f^{(m)} is (-1)^{m-1} for every
/// Bernstein function.
inline double log_abs_bernstein_derivative(const SubordinatorSpec& spec, int m, double s) {
  validate(spec);
  detail::require(m >= 1, "bernstein_derivative: order must be >= 1");
  detail::require(s >= 0.0, "bernstein_derivative: s must be nonnegative");
  // |p (p-1) ... (p-m+1)| = p Gamma(m-p) / Gamma(1-p) for 0 < p < 1
  auto log_abs_falling = [m](double p) {
    return std::log(p) + std::lgamma(m - p) - std::lgamma(1.0 - p);
  };
  return std::visit(
      overloaded{
          [&](const StableSpec& p) {
            detail::require(s > 0.0, "bernstein_derivative: stable derivative needs s > 0");
            return log_abs_falling(p.alpha) + (p.alpha - m) * std::log(s);
          },
          [&](const GammaSpec& p) {
            return std::log(p.b) + log_factorial(m - 1) - m * std::log(p.a + s);
          },
          [&](const TemperedStableSpec& p) {
            return log_abs_falling(p.theta) + (p.theta - m) * std::log(p.eta + s);
          },
          [&](const InverseGaussianSpec& p) {
            return std::log(p.delta) + m * std::numbers::ln2 + log_abs_falling(0.5) +
                   (0.5 - m) * std::log(2.0 * s + p.gamma * p.gamma);
          },
      },
      spec);
}

inline double bernstein_derivative(const SubordinatorSpec& spec, int m, double s) {
  const double mag = std::exp(log_abs_bernstein_derivative(spec, m, s));
  return (m % 2 == 1) ? mag : -mag;
}

// ---------------------------------------------------------------------------
// Samplers

/// Unit positive stable variable, E exp(-s X) = exp(-s^alpha), by Kanter's
/// representation evaluated in log space.
inline double sample_unit_stable(double alpha, RngStream& rng) {
  detail::require(alpha > 0.0 && alpha <= 1.0, "sample_unit_stable: need 0 < alpha <= 1");
  if (alpha == 1.0) return 1.0;
  const double u = std::numbers::pi * rng.uniform();
  const double w = rng.exponential();
  const double lx = std::log(std::sin(alpha * u)) - std::log(std::sin(u)) / alpha +
                    (1.0 - alpha) / alpha * (std::log(std::sin((1.0 - alpha) * u)) - std::log(w));
  return std::exp(lx);
}

namespace detail {

// Gamma(shape, rate) that stays accurate for tiny shapes: for shape < 1 use
// G(shape) = G(shape + 1) U^{1/shape}, combined in log space.
inline double gamma_draw(double shape, double rate, RngStream& rng) {
  if (shape >= 1.0) return rng.gamma(shape, rate);
  const double g = rng.gamma(shape + 1.0, 1.0);
  const double lx = std::log(g) + std::log(rng.uniform()) / shape;
  return std::exp(lx) / rate;
}

// Michael-Schucany-Haas inverse Gaussian draw with mean mu and shape lambda.
inline double inverse_gaussian_draw(double mu, double lambda, RngStream& rng) {
  const double nu = rng.normal();
  const double y = nu * nu;
  const double x = mu - 2.0 * mu * mu * y / (mu * y + std::sqrt(4.0 * mu * lambda * y + mu * mu * y * y));
  if (rng.uniform() <= mu / (mu + x)) return x;
  return mu * mu / x;
}

constexpr std::int64_t kRejectionBudget = 1000000;

}  // namespace detail

/// One draw of D_f(t).
inline double sample_marginal(const SubordinatorSpec& spec, double t, RngStream& rng) {
  detail::require(t > 0.0, "sample_marginal: t must be positive");
  return std::visit(
      overloaded{
          [&](const StableSpec& p) {
            return std::pow(t, 1.0 / p.alpha) * sample_unit_stable(p.alpha, rng);
          },
          [&](const GammaSpec& p) { return detail::gamma_draw(p.b * t, p.a, rng); },
          [&](const TemperedStableSpec& p) {
            const double scale = std::pow(t, 1.0 / p.theta);
            for (std::int64_t i = 0; i < detail::kRejectionBudget; ++i) {
              const double x = scale * sample_unit_stable(p.theta, rng);
              if (rng.uniform() <= std::exp(-p.eta * x)) return x;
            }
            throw RejectionBudgetExceeded("TemperedStable: rejection budget of 1e6 proposals exhausted");
          },
          [&](const InverseGaussianSpec& p) {
            const double mu = p.delta * t / p.gamma;
            const double lambda = (p.delta * t) * (p.delta * t);
            return detail::inverse_gaussian_draw(mu, lambda, rng);
          },
      },
      spec);
}

/// Pre-validated sampler for repeated draws at a fixed step.
class MarginalSampler {
 public:
  explicit MarginalSampler(SubordinatorSpec spec) : spec_(spec) { validate(spec_); }
  double operator()(double t, RngStream& rng) const { return sample_marginal(spec_, t, rng); }
  const SubordinatorSpec& spec() const { return spec_; }

 private:
  SubordinatorSpec spec_;
};

/// Exact draw of the inverse stable clock, Y_alpha(t) = (t / D_alpha(1))^alpha.
/// alpha = 1 is the identity clock.
inline double sample_inverse_stable(double alpha, double t, RngStream& rng) {
  detail::require(alpha > 0.0 && alpha <= 1.0, "sample_inverse_stable: need 0 < alpha <= 1");
  detail::require(t > 0.0, "sample_inverse_stable: t must be positive");
  if (alpha == 1.0) return t;
  const double x = sample_unit_stable(alpha, rng);
  return std::exp(alpha * (std::log(t) - std::log(x)));
}

// ---------------------------------------------------------------------------
// Inverse stable density and moments

/// Density of Y_alpha(t) at u: t^{-alpha} M_alpha(u t^{-alpha}). The
/// alpha = 1/2 case is evaluated in closed form on the whole half-line.
inline double inverse_stable_pdf(double alpha, double u, double t) {
  detail::require(alpha > 0.0 && alpha < 1.0, "inverse_stable_pdf: need 0 < alpha < 1");
  detail::require(u >= 0.0 && t > 0.0, "inverse_stable_pdf: need u >= 0 and t > 0");
  if (alpha == 0.5) return std::exp(-u * u / (4.0 * t)) / std::sqrt(std::numbers::pi * t);
  const double scale = std::pow(t, -alpha);
  return scale * wright_m(alpha, u * scale);
}

struct InverseStableMoments {
  double mean;
  double var;
  double cov;
};

/// Mean and variance at t and Cov(Y(s), Y(t)) for 0 < s <= t.
inline InverseStableMoments inverse_stable_moments(double alpha, double s, double t) {
  detail::require(alpha > 0.0 && alpha <= 1.0, "inverse_stable_moments: need 0 < alpha <= 1");
  detail::require(s > 0.0 && s <= t, "inverse_stable_moments: need 0 < s <= t");
  const double g1 = std::tgamma(alpha + 1.0);
  const double g2 = std::tgamma(2.0 * alpha + 1.0);
  InverseStableMoments m;
  m.mean = std::pow(t, alpha) / g1;
  m.var = (2.0 / g2 - 1.0 / (g1 * g1)) * std::pow(t, 2.0 * alpha);
  const double B = beta(alpha, alpha + 1.0);
  if (s == t) {
    m.cov = m.var;
  } else {
    m.cov = (alpha * std::pow(s, 2.0 * alpha) * B +
             alpha * std::pow(t, 2.0 * alpha) * incomplete_beta(alpha, alpha + 1.0, s / t) -
             std::pow(t * s, alpha)) /
            (g1 * g1);
  }
  return m;
}

/// Large-t form of Cov(Y(s), Y(t)) for fixed s.
inline double inverse_stable_cov_asymptote(double alpha, double s, double t) {
  detail::require(alpha > 0.0 && alpha <= 1.0, "inverse_stable_cov_asymptote: need 0 < alpha <= 1");
  detail::require(s > 0.0 && s <= t, "inverse_stable_cov_asymptote: need 0 < s <= t");
  const double g1 = std::tgamma(alpha + 1.0);
  return (alpha * std::pow(s, 2.0 * alpha) * beta(alpha, alpha + 1.0) -
          alpha * alpha * std::pow(s, alpha + 1.0) / ((alpha + 1.0) * std::pow(t, 1.0 - alpha))) /
         (g1 * g1);
}

// ---------------------------------------------------------------------------
// Densities

/// Density of D_f(t) at x, where a closed form exists.
inline double density(const SubordinatorSpec& spec, double x, double t) {
  validate(spec);
  detail::require(x > 0.0 && t > 0.0, "density: need x > 0 and t > 0");
  auto stable_half = [](double x, double t) {
    return t * std::exp(-1.5 * std::log(x) - t * t / (4.0 * x)) / (2.0 * std::sqrt(std::numbers::pi));
  };
  return std::visit(
      overloaded{
          [&](const StableSpec& p) {
            if (p.alpha != 0.5) throw Unsupported("density: Stable only for alpha = 1/2");
            return stable_half(x, t);
          },
          [&](const GammaSpec& p) {
            const double shape = p.b * t;
            return std::exp(shape * std::log(p.a) + (shape - 1.0) * std::log(x) - p.a * x -
                            std::lgamma(shape));
          },
          [&](const TemperedStableSpec& p) {
            if (p.theta != 0.5) throw Unsupported("density: TemperedStable only for theta = 1/2");
            return t * std::exp(-p.eta * x + std::sqrt(p.eta) * t - 1.5 * std::log(x) -
                                t * t / (4.0 * x)) /
                   (2.0 * std::sqrt(std::numbers::pi));
          },
          [&](const InverseGaussianSpec& p) {
            const double dt = p.delta * t;
            return dt / std::sqrt(2.0 * std::numbers::pi) *
                   std::exp(-1.5 * std::log(x) + dt * p.gamma -
                            0.5 * (dt * dt / x + p.gamma * p.gamma * x));
          },
      },
      spec);
}

inline bool has_density(const SubordinatorSpec& spec) {
  if (auto* s = std::get_if<StableSpec>(&spec)) return s->alpha == 0.5;
  if (auto* s = std::get_if<TemperedStableSpec>(&spec)) return s->theta == 0.5;
  return true;
}

// ---------------------------------------------------------------------------
// First passage

struct FirstPassageConfig {
  double grid_step = 1e-3;
  bool refine = true;

  void validate() const {
    detail::require(grid_step > 0.0, "FirstPassageConfig: grid_step must be positive");
  }
};

namespace detail {
constexpr std::int64_t kFirstPassageBudget = 100000000;
}

/// H_f at each level in `levels` (nondecreasing) from one simulated
/// path of D_f on the grid, so the values are jointly distributed.
inline std::vector<double> sample_first_passage_path(const SubordinatorSpec& spec,
                                                     std::span<const double> levels,
                                                     const FirstPassageConfig& cfg,
                                                     RngStream& rng) {
  validate(spec);
  cfg.validate();
  for (std::size_t i = 0; i < levels.size(); ++i) {
    detail::require(levels[i] > 0.0, "sample_first_passage: t must be positive");
    if (i > 0) detail::require(levels[i] >= levels[i - 1], "sample_first_passage: levels must not decrease");
  }
  std::vector<double> out(levels.size());
  std::size_t next = 0;
  double sum = 0.0;
  for (std::int64_t k = 0; next < levels.size(); ++k) {
    if (k >= detail::kFirstPassageBudget)
      throw BudgetExceeded("sample_first_passage: 1e8 grid steps without crossing");
    const double inc = sample_marginal(spec, cfg.grid_step, rng);
    while (next < levels.size() && sum + inc > levels[next]) {
      const double frac = cfg.refine ? (levels[next] - sum) / inc : 1.0;
      out[next] = (static_cast<double>(k) + frac) * cfg.grid_step;
      ++next;
    }
    sum += inc;
  }
  return out;
}

inline double sample_first_passage(const SubordinatorSpec& spec, double t,
                                   const FirstPassageConfig& cfg, RngStream& rng) {
  const double level[1] = {t};
  return sample_first_passage_path(spec, level, cfg, rng)[0];
}

}  // namespace countproc

#endif  // COUNTPROC_SUBORDINATORS_HPP
