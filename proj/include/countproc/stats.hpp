#ifndef COUNTPROC_STATS_HPP
#define COUNTPROC_STATS_HPP

// Estimators and numerical-analysis utilities shared by every verification
// path: compensated reductions, empirical pmfs, TV distance, correlation with
// jackknife errors, power-law fitting, finite differences, the L1 Caputo
// scheme and adaptive Gauss-Legendre quadrature.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "countproc/error.hpp"

namespace countproc {

/// A point estimate. Exact evaluations carry no standard error.
struct Estimate {
  double value = 0.0;
  std::optional<double> std_error;

  bool exact() const { return !std_error.has_value(); }
};

/// Neumaier-compensated sum. Order of `add` calls fixes the result bitwise.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Streaming log-sum-exp: accumulates exp(log_term) without overflow.
class LogSumExp {
 public:
  void add(double log_term) {
    if (log_term == -std::numeric_limits<double>::infinity()) return;
    if (log_term > max_) {
      scaled_ = scaled_ * std::exp(max_ - log_term) + 1.0;
      max_ = log_term;
    } else {
      scaled_ += std::exp(log_term - max_);
    }
  }
  double log_value() const {
    if (scaled_ == 0.0) return -std::numeric_limits<double>::infinity();
    return max_ + std::log(scaled_);
  }
  /// Ratio of exp(log_term) to the current total.
  double relative(double log_term) const {
    if (scaled_ == 0.0) return std::numeric_limits<double>::infinity();
    return std::exp(log_term - max_) / scaled_;
  }

 private:
  double max_ = -std::numeric_limits<double>::infinity();
  double scaled_ = 0.0;
};

/// Welford mean/variance accumulator; sequential, so deterministic.
class RunningMoments {
 public:
  void add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double std_error() const {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }
  Estimate estimate() const { return {mean_, std_error()}; }

  /// Chan's pairwise update; merging in a fixed order keeps results stable.
  void merge(const RunningMoments& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n_), nb = static_cast<double>(o.n_);
    const double delta = o.mean_ - mean_;
    const double n = na + nb;
    mean_ += delta * nb / n;
    m2_ += o.m2_ + delta * delta * na * nb / n;
    n_ += o.n_;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

inline Estimate mean_estimate(std::span<const double> xs) {
  RunningMoments acc;
  for (double x : xs) acc.add(x);
  return acc.estimate();
}

// ---------------------------------------------------------------------------
// Probability mass tables

/// Finite map from integer state to probability with a declared window.
struct PmfTable {
  std::int64_t n_lo = 0;
  std::int64_t n_hi = -1;
  std::map<std::int64_t, double> prob;
  double mass_deficit = 1.0;

  double at(std::int64_t n) const {
    auto it = prob.find(n);
    return it == prob.end() ? 0.0 : it->second;
  }

  double total() const {
    CompensatedSum s;
    for (const auto& [n, p] : prob) s.add(p);
    return s.value();
  }

  /// Builds a table over [n_lo, n_lo + values.size()).
  static PmfTable from_values(std::int64_t n_lo, std::span<const double> values) {
    PmfTable t;
    t.n_lo = n_lo;
    t.n_hi = n_lo + static_cast<std::int64_t>(values.size()) - 1;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!(values[i] >= 0.0 && values[i] <= 1.0 + 1e-12))
        throw DomainError("PmfTable: probability outside [0,1] at n=" +
                          std::to_string(n_lo + static_cast<std::int64_t>(i)));
      t.prob[n_lo + static_cast<std::int64_t>(i)] = values[i];
    }
    t.mass_deficit = 1.0 - t.total();
    if (t.mass_deficit < -1e-12) throw DomainError("PmfTable: total mass exceeds 1");
    return t;
  }
};

inline PmfTable empirical_pmf(std::span<const std::int64_t> draws) {
  PmfTable t;
  if (draws.empty()) return t;
  std::map<std::int64_t, std::size_t> counts;
  for (auto d : draws) ++counts[d];
  const double n = static_cast<double>(draws.size());
  for (const auto& [state, c] : counts) t.prob[state] = static_cast<double>(c) / n;
  t.n_lo = counts.begin()->first;
  t.n_hi = counts.rbegin()->first;
  t.mass_deficit = 0.0;
  return t;
}

/// Total variation distance; states missing from one table count as 0.
inline double tv_distance(const PmfTable& p, const PmfTable& q) {
  CompensatedSum s;
  auto ip = p.prob.begin();
  auto iq = q.prob.begin();
  while (ip != p.prob.end() || iq != q.prob.end()) {
    if (iq == q.prob.end() || (ip != p.prob.end() && ip->first < iq->first)) {
      s.add(std::abs(ip->second));
      ++ip;
    } else if (ip == p.prob.end() || iq->first < ip->first) {
      s.add(std::abs(iq->second));
      ++iq;
    } else {
      s.add(std::abs(ip->second - iq->second));
      ++ip;
      ++iq;
    }
  }
  return std::clamp(0.5 * s.value(), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Sample ensembles

/// Process values indexed by (path, observation time), row-major.
struct SampleEnsemble {
  std::size_t paths = 0;
  std::vector<double> times;
  std::vector<std::int64_t> values;
  std::uint64_t seed = 0;
  std::string meta;

  std::int64_t value(std::size_t path, std::size_t time_index) const {
    return values[path * times.size() + time_index];
  }

  std::vector<std::int64_t> column(std::size_t time_index) const {
    std::vector<std::int64_t> col(paths);
    for (std::size_t p = 0; p < paths; ++p) col[p] = value(p, time_index);
    return col;
  }

  void validate() const {
    detail::require(values.size() == paths * times.size(),
                    "SampleEnsemble: matrix dimensions inconsistent");
    for (std::size_t i = 1; i < times.size(); ++i)
      detail::require(times[i] > times[i - 1], "SampleEnsemble: times must be strictly increasing");
  }
};

inline PmfTable empirical_pmf(const SampleEnsemble& ens, std::size_t time_index) {
  ens.validate();
  detail::require(time_index < ens.times.size(), "empirical_pmf: time index out of range");
  const auto col = ens.column(time_index);
  return empirical_pmf(std::span<const std::int64_t>(col));
}

struct CorrEstimate {
  double corr = 0.0;
  double std_error = 0.0;
};

/// Pearson correlation with a delete-one jackknife standard error.
inline CorrEstimate corr_estimate(std::span<const double> x, std::span<const double> y) {
  detail::require(x.size() == y.size(), "corr_estimate: column lengths differ");
  const std::size_t n = x.size();
  detail::require(n >= 1000, "corr_estimate: need at least 1000 paths");
  CompensatedSum sx, sy;
  for (std::size_t i = 0; i < n; ++i) {
    sx.add(x[i]);
    sy.add(y[i]);
  }
  const double mx = sx.value() / static_cast<double>(n);
  const double my = sy.value() / static_cast<double>(n);
  // Centered sums; the jackknife below removes one path at a time from them.
  CompensatedSum a, b, sxx, syy, sxy;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    a.add(dx);
    b.add(dy);
    sxx.add(dx * dx);
    syy.add(dy * dy);
    sxy.add(dx * dy);
  }
  const double Sxx = sxx.value(), Syy = syy.value(), Sxy = sxy.value();
  if (Sxx <= 0.0 || Syy <= 0.0) throw DegenerateColumn("corr_estimate: zero-variance column");
  const double r = Sxy / std::sqrt(Sxx * Syy);

  const double A = a.value(), B = b.value();
  const double m = static_cast<double>(n - 1);
  std::vector<double> loo(n);
  RunningMoments jk;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    const double ai = A - dx, bi = B - dy;
    const double cxx = (Sxx - dx * dx) - ai * ai / m;
    const double cyy = (Syy - dy * dy) - bi * bi / m;
    const double cxy = (Sxy - dx * dy) - ai * bi / m;
    loo[i] = (cxx > 0.0 && cyy > 0.0) ? cxy / std::sqrt(cxx * cyy) : r;
    jk.add(loo[i]);
  }
  CompensatedSum dev;
  for (double v : loo) dev.add((v - jk.mean()) * (v - jk.mean()));
  const double se = std::sqrt(m / static_cast<double>(n) * dev.value());
  return {r, se};
}

inline CorrEstimate corr_estimate(const SampleEnsemble& ens, std::size_t i, std::size_t j) {
  ens.validate();
  detail::require(i < ens.times.size() && j < ens.times.size(), "corr_estimate: index out of range");
  detail::require(i <= j, "corr_estimate: need i <= j");
  detail::require(ens.paths >= 1000, "corr_estimate: need at least 1000 paths");
  std::vector<double> x(ens.paths), y(ens.paths);
  for (std::size_t p = 0; p < ens.paths; ++p) {
    x[p] = static_cast<double>(ens.value(p, i));
    y[p] = static_cast<double>(ens.value(p, j));
  }
  if (i == j) {
    const auto c = corr_estimate(std::span<const double>(x), std::span<const double>(x));
    (void)c;  // still rejects degenerate columns
    return {1.0, 0.0};
  }
  return corr_estimate(std::span<const double>(x), std::span<const double>(y));
}

// ---------------------------------------------------------------------------
// Power-law fitting

/// Corr(X(s), X(t)) ~ constant * t^exponent for large t.
struct CorrAsymptote {
  double constant;
  double exponent;
};

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr = 0.0;
  double r_squared = 0.0;
};

/// Least squares fit of log(corr) against log(t); the slope estimates -gamma.
inline FitResult lrd_fit(std::span<const std::pair<double, double>> corr_values) {
  const std::size_t n = corr_values.size();
  detail::require(n >= 5, "lrd_fit: need at least 5 points");
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [t, c] = corr_values[i];
    if (!(c > 0.0)) throw DomainError("lrd_fit: correlations must be positive");
    detail::require(t > 0.0, "lrd_fit: times must be positive");
    if (i > 0) detail::require(t > corr_values[i - 1].first, "lrd_fit: times must increase");
    x[i] = std::log(t);
    y[i] = std::log(c);
  }
  CompensatedSum sx, sy;
  for (std::size_t i = 0; i < n; ++i) {
    sx.add(x[i]);
    sy.add(y[i]);
  }
  const double mx = sx.value() / static_cast<double>(n);
  const double my = sy.value() / static_cast<double>(n);
  CompensatedSum sxx, sxy, syy;
  for (std::size_t i = 0; i < n; ++i) {
    sxx.add((x[i] - mx) * (x[i] - mx));
    sxy.add((x[i] - mx) * (y[i] - my));
    syy.add((y[i] - my) * (y[i] - my));
  }
  FitResult fit;
  fit.slope = sxy.value() / sxx.value();
  fit.intercept = my - fit.slope * mx;
  CompensatedSum sse;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (fit.intercept + fit.slope * x[i]);
    sse.add(e * e);
  }
  fit.stderr = std::sqrt(std::max(0.0, sse.value()) / static_cast<double>(n - 2) / sxx.value());
  fit.r_squared = syy.value() > 0.0 ? std::clamp(1.0 - sse.value() / syy.value(), 0.0, 1.0) : 1.0;
  return fit;
}

// ---------------------------------------------------------------------------
// Finite differences

/// Fornberg's weights for the derivative of given order at x0 from `nodes`.
inline std::vector<double> fornberg_weights(double x0, std::span<const double> nodes, int order) {
  const int n = static_cast<int>(nodes.size()) - 1;
  detail::require(order >= 0 && order <= n, "fornberg_weights: need more nodes than the order");
  std::vector<std::vector<double>> c(order + 1, std::vector<double>(n + 1, 0.0));
  double c1 = 1.0;
  double c4 = nodes[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    const int mn = std::min(i, order);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c[order];
}

/// Derivative of `order` at x0 from the symmetric stencil x0 + i h, |i| <= half_width.
template <class F>
double fd_derivative(F&& f, double x0, int order, double h, int half_width) {
  std::vector<double> nodes;
  for (int i = -half_width; i <= half_width; ++i) nodes.push_back(x0 + i * h);
  const auto w = fornberg_weights(x0, nodes, order);
  CompensatedSum s;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (w[i] != 0.0) s.add(w[i] * f(nodes[i]));
  return s.value();
}

template <class F>
double central_first(F&& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

template <class F>
double central_second(F&& f, double x, double h) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

// ---------------------------------------------------------------------------
// Caputo derivative, L1 scheme

/// L1 approximation of the Caputo derivative of order alpha at the last node
/// of a uniform grid. Error is O(h^{2-alpha}) for smooth f.
inline double caputo_l1(std::span<const double> times, std::span<const double> values,
                        double alpha) {
  detail::require(alpha > 0.0 && alpha < 1.0, "caputo_l1: need 0 < alpha < 1");
  detail::require(times.size() == values.size(), "caputo_l1: size mismatch");
  detail::require(times.size() >= 100, "caputo_l1: need at least 100 grid points");
  const std::size_t N = times.size() - 1;
  const double h = (times[N] - times[0]) / static_cast<double>(N);
  detail::require(h > 0.0, "caputo_l1: grid must increase");
  for (std::size_t i = 1; i <= N; ++i)
    detail::require(std::abs((times[i] - times[i - 1]) - h) <= 1e-9 * h,
                    "caputo_l1: grid must be uniform");
  CompensatedSum s;
  for (std::size_t j = 0; j < N; ++j) {
    const double jd = static_cast<double>(j);
    const double b = std::pow(jd + 1.0, 1.0 - alpha) - std::pow(jd, 1.0 - alpha);
    s.add(b * (values[N - j] - values[N - j - 1]));
  }
  return s.value() / (std::tgamma(2.0 - alpha) * std::pow(h, alpha));
}

// ---------------------------------------------------------------------------
// Quadrature

struct QuadOptions {
  double tol = 1e-10;     // relative tolerance on the summed refinement error
  int max_levels = 20;    // bisection depth limit per panel
  int initial_panels = 8;
};

/// Globally adaptive 15-point Gauss-Legendre on [a, b]. A panel's error is
/// the difference between its one-panel and two-half-panel estimates; the
/// worst panel is bisected until the summed error drops below tol*|I|.
template <class F>
double quad_interval(F&& f, double a, double b, const QuadOptions& opt = {}) {
  using Rule = boost::math::quadrature::gauss<double, 15>;
  if (a == b) return 0.0;
  detail::require(a < b, "quad_interval: need a < b");
  struct Panel {
    double a, b, whole, left, right;
    int level;
    double err() const { return std::abs(left + right - whole); }
    bool operator<(const Panel& o) const { return err() < o.err(); }
  };
  auto make = [&](double lo, double hi, int level, double whole) {
    const double mid = 0.5 * (lo + hi);
    return Panel{lo, hi, whole, Rule::integrate(f, lo, mid), Rule::integrate(f, mid, hi), level};
  };
  std::priority_queue<Panel> heap;
  const double w = (b - a) / opt.initial_panels;
  for (int i = 0; i < opt.initial_panels; ++i) {
    const double lo = a + i * w;
    const double hi = (i + 1 == opt.initial_panels) ? b : a + (i + 1) * w;
    heap.push(make(lo, hi, 0, Rule::integrate(f, lo, hi)));
  }
  auto totals = [&]() {
    CompensatedSum val, err;
    auto copy = heap;
    while (!copy.empty()) {
      val.add(copy.top().left + copy.top().right);
      err.add(copy.top().err());
      copy.pop();
    }
    return std::pair{val.value(), err.value()};
  };
  // Track totals incrementally; recompute exactly when the loop finishes.
  double value = 0.0, error = 0.0;
  std::tie(value, error) = totals();
  while (error > opt.tol * std::abs(value) && error > 1e-300) {
    Panel p = heap.top();
    heap.pop();
    if (p.level >= opt.max_levels)
      throw NonConvergence("quad_interval: no convergence after " +
                           std::to_string(opt.max_levels) + " refinement levels");
    const double mid = 0.5 * (p.a + p.b);
    Panel l = make(p.a, mid, p.level + 1, p.left);
    Panel r = make(mid, p.b, p.level + 1, p.right);
    value += (l.left + l.right + r.left + r.right) - (p.left + p.right);
    error += (l.err() + r.err()) - p.err();
    heap.push(l);
    heap.push(r);
    if (error <= opt.tol * std::abs(value)) std::tie(value, error) = totals();
  }
  return totals().first;
}

/// Integral over [0, inf) through u = scale * v / (1 - v).
template <class F>
double quad_halfline(F&& f, const QuadOptions& opt = {}, double scale = 1.0) {
  detail::require(scale > 0.0, "quad_halfline: scale must be positive");
  auto g = [&](double v) {
    if (v >= 1.0) return 0.0;
    const double one_minus = 1.0 - v;
    const double u = scale * v / one_minus;
    if (!std::isfinite(u)) return 0.0;
    const double val = f(u);
    return val == 0.0 ? 0.0 : val * scale / (one_minus * one_minus);
  };
  return quad_interval(g, 0.0, 1.0, opt);
}

inline QuadOptions quad_tol(double tol) {
  QuadOptions o;
  o.tol = tol;
  return o;
}

}  // namespace countproc

#endif  // COUNTPROC_STATS_HPP
