#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "countproc/skellam.hpp"

using namespace countproc;

namespace {

const SkellamRates kUnit({1.0}, {1.0});
const SkellamRates kOneHalf({1.0}, {0.5});
const SkellamRates kTwoJump({1.0, 1.0}, {0.5, 0.5});

MixingOptions quadrature() {
  MixingOptions o;
  o.method = MixingMethod::Quadrature;
  return o;
}

PmfTable gsp_table(const SkellamRates& r, double t, int N) {
  std::vector<double> v;
  for (int n = -N; n <= N; ++n) v.push_back(gsp_pmf(r, n, t));
  return PmfTable::from_values(-N, v);
}

PmfTable oracle_table(const SkellamRates& r, double t, int N) {
  std::vector<double> v;
  for (int n = -N; n <= N; ++n) v.push_back(gsp_pmf_oracle(r, n, t).value);
  return PmfTable::from_values(-N, v);
}

}  // namespace

TEST(SkellamRatesTest, DerivedConstantsAndValidation) {
  const SkellamRates r({1.0, 2.0}, {0.5, 0.5});
  EXPECT_DOUBLE_EQ(r.m2(), 11.5);
  EXPECT_DOUBLE_EQ(r.m1(), 5.0 - 1.5);
  EXPECT_DOUBLE_EQ(r.Lambda(), 3.0);
  EXPECT_DOUBLE_EQ(r.LambdaBar(), 1.0);
  EXPECT_THROW(SkellamRates({1.0, 2.0}, {1.0}), DomainError);
  EXPECT_THROW(SkellamRates({1.0}, {-1.0}), DomainError);
}

TEST(GspPmf, Examples) {
  EXPECT_NEAR(gsp_pmf(kUnit, 0, 1.0), std::exp(-2.0) * 2.2795853023360673, 1e-15);
  EXPECT_NEAR(gsp_pmf(kUnit, 0, 1.0), 0.3085083, 1e-7);
  EXPECT_NEAR(gsp_pmf(kOneHalf, 2, 1.0), 0.13136095290162964, 1e-14);
  EXPECT_NEAR(gsp_pmf(kOneHalf, -1, 2.0), 0.1192317192431485, 1e-14);
  for (int n = 1; n <= 15; ++n) EXPECT_DOUBLE_EQ(gsp_pmf(kUnit, n, 1.7), gsp_pmf(kUnit, -n, 1.7));
}

TEST(GspPmf, MatchesConvolutionOracleAtUnitJumps) {
  double worst = 0.0;
  for (double L : {0.5, 1.0, 2.0})
    for (double Lb : {0.5, 1.0, 2.0})
      for (double t : {0.5, 1.0, 2.0}) {
        const SkellamRates r({L}, {Lb});
        for (int n = -20; n <= 20; ++n) {
          const auto o = gsp_pmf_oracle(r, n, t);
          EXPECT_FALSE(o.truncation_warning);
          worst = std::max(worst, std::abs(gsp_pmf(r, n, t) - o.value));
        }
      }
  EXPECT_LT(worst, 1e-10);
}

TEST(GspPmf, BesselFormDiffersFromProcessLawForLargerJumps) {
  // with k = 2 the closed form has variance (Lambda + LambdaBar) t = 3, the
  // process has m2 t = 7.5; the oracle and the sampler agree with each other
  const double t = 1.0;
  const auto bessel = gsp_table(kTwoJump, t, 40);
  const auto oracle = oracle_table(kTwoJump, t, 40);
  EXPECT_GT(tv_distance(bessel, oracle), 0.1);
  std::vector<std::int64_t> d(200000);
  for (std::size_t p = 0; p < d.size(); ++p) {
    RngStream rng(31, p);
    d[p] = sample_gsp(kTwoJump, t, rng);
  }
  EXPECT_LT(tv_distance(empirical_pmf(d), oracle), 1e-2);
  EXPECT_GT(tv_distance(empirical_pmf(d), bessel), 0.1);
  // variance of the oracle law is m2 t
  double m = 0.0, v = 0.0;
  for (const auto& [n, p] : oracle.prob) m += n * p;
  for (const auto& [n, p] : oracle.prob) v += (n - m) * (n - m) * p;
  EXPECT_NEAR(m, kTwoJump.m1() * t, 1e-9);
  EXPECT_NEAR(v, kTwoJump.m2() * t, 1e-8);
}

TEST(GspPmfOracle, TailAndNormalization) {
  const auto mv = gsp_moments(kOneHalf, 1.0, 1.0);
  const int far = static_cast<int>(std::ceil(std::abs(mv.mean) + 12.0 * std::sqrt(mv.var))) + 1;
  EXPECT_LT(gsp_pmf_oracle(kOneHalf, far, 1.0).value, 1e-12);
  EXPECT_LT(gsp_pmf_oracle(kOneHalf, -far, 1.0).value, 1e-12);
  EXPECT_GE(oracle_table(kOneHalf, 1.0, far).total(), 1.0 - 1e-10);
  EXPECT_GE(oracle_table(kTwoJump, 1.0, 60).total(), 1.0 - 1e-10);
  EXPECT_TRUE(gsp_pmf_oracle(kOneHalf, 0, 1.0, 2).truncation_warning);
}

TEST(GspPmf, Normalization) {
  for (const auto& r : {kUnit, kOneHalf, kTwoJump, SkellamRates({2.0}, {0.3})})
    for (double t : {0.5, 1.0, 4.0}) {
      const auto mv = gsp_moments(r, t, t);
      const int N = static_cast<int>(std::ceil(std::abs(mv.mean) + 12.0 * std::sqrt(r.m2() * t)));
      EXPECT_GE(gsp_table(r, t, N).total(), 1.0 - 1e-8);
    }
}

TEST(GspPmf, TiltIdentity) {
  const SkellamRates r({2.0, 0.5}, {0.3, 0.4});
  const double tilt = std::log(r.Lambda() / r.LambdaBar());
  for (int n = 1; n <= 25; ++n)
    EXPECT_NEAR(gsp_log_pmf(r, n, 1.3) - gsp_log_pmf(r, -n, 1.3), n * tilt, 1e-11 * n);
}

TEST(GspTransforms, PgfCfAndLevy) {
  EXPECT_DOUBLE_EQ(gsp_pgf(kTwoJump, 1.0, 2.0), 1.0);
  EXPECT_THROW(gsp_pgf(kTwoJump, 0.0, 1.0), DomainError);
  EXPECT_THROW(gsp_pgf(kTwoJump, 0.01, 1.0), DomainError);
  EXPECT_THROW(gsp_pgf(kTwoJump, 1.01, 1.0), DomainError);
  EXPECT_NEAR(std::abs(gsp_cf(kTwoJump, 0.0, 1.0)), 1.0, 1e-15);
  for (double xi = 0.1; xi < 6.2; xi += 0.3) EXPECT_LT(std::abs(gsp_cf(kTwoJump, xi, 1.0)), 1.0);
  const auto w = gsp_levy_weights(SkellamRates({1.0, 2.0}, {0.5, 0.25}));
  EXPECT_EQ(w.size(), 4u);
  EXPECT_EQ(w.at(2), 2.0);
  EXPECT_EQ(w.at(-2), 0.25);
  EXPECT_EQ(w.count(0), 0u);
}

TEST(GspTransforms, PgfSeriesAtUnitJumps) {
  CompensatedSum s;
  for (int n = -80; n <= 80; ++n) s.add(std::pow(0.7, n) * gsp_pmf(kOneHalf, n, 1.0));
  EXPECT_NEAR(s.value(), gsp_pgf(kOneHalf, 0.7, 1.0), 1e-9);
}

TEST(GspTransforms, PgfSeriesFromOracleForLargerJumps) {
  CompensatedSum s;
  for (int n = -60; n <= 60; ++n) s.add(std::pow(0.7, n) * gsp_pmf_oracle(kTwoJump, n, 1.0).value);
  EXPECT_NEAR(s.value(), gsp_pgf(kTwoJump, 0.7, 1.0), 1e-9);
}

TEST(GspMoments, Examples) {
  const SkellamRates sym({1.0, 1.0}, {1.0, 1.0});
  for (double t : {0.5, 3.0}) EXPECT_EQ(gsp_moments(sym, t, t).mean, 0.0);
  const auto m = gsp_moments(SkellamRates({1.0, 2.0}, {0.5, 0.5}), 1.0, 2.0);
  EXPECT_DOUBLE_EQ(m.var, 23.0);
  EXPECT_DOUBLE_EQ(m.cov, 11.5);
  EXPECT_GT(m.var - m.mean, 0.0);
}

TEST(GspMoments, CorrelationIsSqrtRatio) {
  for (double s : {0.5, 2.0, 5.0})
    for (double t : {5.0, 50.0, 500.0}) {
      const auto st = gsp_moments(kTwoJump, s, t);
      const auto ss = gsp_moments(kTwoJump, s, s);
      EXPECT_NEAR(st.cov / std::sqrt(ss.var * st.var), std::sqrt(s / t), 1e-15);
    }
}

TEST(GspMoments, MonteCarloMeanAndVariance) {
  const double t = 2.0;
  const auto m = gsp_moments(kTwoJump, t, t);
  RunningMoments mean, sq;
  for (std::size_t p = 0; p < 1000000; ++p) {
    RngStream rng(41, p);
    const double x = static_cast<double>(sample_gsp(kTwoJump, t, rng));
    mean.add(x);
    sq.add((x - m.mean) * (x - m.mean));
  }
  EXPECT_LT(std::abs(mean.mean() - m.mean), 3.0 * mean.std_error());
  EXPECT_LT(std::abs(sq.mean() - m.var), 3.0 * sq.std_error());
}

TEST(GspMoments, EnsembleCorrelation) {
  const auto ens = sample_gfsp_ensemble(kTwoJump, 1.0, {1.0, 4.0}, 40000, 5);
  const auto c = corr_estimate(ens, 0, 1);
  EXPECT_LT(std::abs(c.corr - 0.5), 3.0 * c.std_error);
}

TEST(GspOde, ResidualAndOrder) {
  EXPECT_LT(gsp_ode_residual(kUnit, 0, 1.0, 1e-4), 1e-6);
  for (int n = -6; n <= 6; ++n) EXPECT_LT(gsp_ode_residual(kOneHalf, n, 2.0, 1e-4), 1e-6) << n;
  const double r1 = gsp_ode_residual(kUnit, 0, 1.0, 1e-3);
  const double r2 = gsp_ode_residual(kUnit, 0, 1.0, 5e-4);
  EXPECT_NEAR(r1 / r2, 4.0, 0.4);
  EXPECT_THROW(gsp_ode_residual(kUnit, 0, 1.0, 1e-2), DomainError);
}

TEST(GfspPmf, UnitIndexAndFrozenValues) {
  EXPECT_EQ(gfsp_pmf(kOneHalf, 1.0, 2, 1.0).value, gsp_pmf(kOneHalf, 2, 1.0));
  EXPECT_NEAR(gfsp_pmf(kOneHalf, 0.5, 0, 1.0, quadrature()).value, 0.42370988566465317, 1e-10);
  EXPECT_NEAR(gfsp_pmf(kOneHalf, 0.5, 1, 1.0, quadrature()).value, 0.22947164704294707, 1e-10);
  EXPECT_NEAR(gfsp_pmf(kOneHalf, 0.5, -2, 1.0, quadrature()).value, 0.027975568270750788, 1e-11);
}

TEST(GfspPmf, SymmetricRatesStaySymmetric) {
  const auto e = gfsp_pmf_range(kUnit, 0.5, -6, 6, 1.5, quadrature());
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(e[i].value, e[12 - i].value, 1e-15);
}

TEST(GfspPmf, QuadratureAgreesWithMonteCarlo) {
  MixingOptions mc;
  mc.method = MixingMethod::MonteCarlo;
  mc.seed = 50;
  const auto q = gfsp_pmf(kUnit, 0.5, 0, 1.0, quadrature());
  const auto e = gfsp_pmf(kUnit, 0.5, 0, 1.0, mc);
  EXPECT_LT(std::abs(q.value - e.value), 3.0 * *e.std_error);
}

TEST(GfspPmf, InitialCondition) {
  EXPECT_NEAR(gfsp_pmf(kUnit, 0.5, 0, 1e-6, quadrature()).value, 1.0, 1e-2);
  EXPECT_LT(gfsp_pmf(kUnit, 0.5, 1, 1e-6, quadrature()).value, 1e-2);
  EXPECT_LT(gfsp_pmf(kUnit, 0.5, -3, 1e-6, quadrature()).value, 1e-6);
}

TEST(GfspPgf, Examples) {
  EXPECT_DOUBLE_EQ(gfsp_pgf(kTwoJump, 0.5, 1.0, 1.0), 1.0);
  for (double u : {0.2, 0.7, 0.95})
    EXPECT_NEAR(gfsp_pgf(kTwoJump, 1.0, u, 1.3) / gsp_pgf(kTwoJump, u, 1.3), 1.0, 1e-13);
  EXPECT_THROW(gfsp_pgf(kTwoJump, 0.5, 0.0, 1.0), DomainError);
}

TEST(GfspPgf, SeriesOfQuadraturePmf) {
  const SkellamRates r({1.5}, {1.0});
  const auto e = gfsp_pmf_range(r, 0.5, -80, 80, 1.0, quadrature());
  CompensatedSum s;
  for (int n = -80; n <= 80; ++n) s.add(std::pow(0.7, n) * e[n + 80].value);
  EXPECT_NEAR(s.value(), gfsp_pgf(r, 0.5, 0.7, 1.0), 1e-6);
}

TEST(GfspFactorialMoment, FirstAndSecond) {
  for (double a : {0.3, 0.7, 1.0}) {
    const auto m = gfsp_moments(kTwoJump, a, 2.0, 2.0);
    EXPECT_NEAR(gfsp_factorial_moment(kTwoJump, a, 1, 2.0),
                kTwoJump.m1() * std::pow(2.0, a) / std::tgamma(a + 1.0), 1e-12);
    EXPECT_NEAR(gfsp_factorial_moment(kTwoJump, a, 2, 2.0), m.var + m.mean * m.mean - m.mean, 1e-9);
  }
  // classical Skellam: E S(S-1) = (l - m)^2 t^2 + (l + m) t - (l - m) t
  EXPECT_NEAR(gfsp_factorial_moment(kOneHalf, 1.0, 2, 1.0), 0.25 + 1.5 - 0.5, 1e-13);
}

TEST(GfspFactorialMoment, MatchesPgfDerivatives) {
  const double t = 1.0;
  for (double a : {0.5, 0.8}) {
    auto pgf = [&](double u) { return mittag_leffler(a, 1.0, 1.0, gsp_zeta(kTwoJump, u) * std::pow(t, a)); };
    for (int r = 1; r <= 4; ++r) {
      const double fd = fd_derivative(pgf, 1.0, r, 0.02, 7);
      const double fm = gfsp_factorial_moment(kTwoJump, a, r, t);
      EXPECT_NEAR(fm / fd, 1.0, 1e-6) << a << " " << r;
    }
  }
}

TEST(GfspMoments, ReductionAndOverdispersion) {
  const auto g = gsp_moments(kTwoJump, 1.0, 3.0);
  const auto f = gfsp_moments(kTwoJump, 1.0, 1.0, 3.0);
  EXPECT_NEAR(f.mean, g.mean, 1e-12);
  EXPECT_NEAR(f.var, g.var, 1e-12);
  EXPECT_NEAR(f.cov, g.cov, 1e-12);
  for (double a : {0.2, 0.5, 0.8})
    for (double t : {0.5, 1.0, 10.0, 100.0})
      for (const auto& r : {kTwoJump, kOneHalf, SkellamRates({0.1, 0.1}, {2.0, 0.5})}) {
        const auto m = gfsp_moments(r, a, t, t);
        EXPECT_GT(m.var - m.mean, 0.0);
      }
  EXPECT_THROW(gfsp_moments(kTwoJump, 0.5, 3.0, 1.0), DomainError);
}

TEST(GfspMoments, FrozenCorrelations) {
  EXPECT_NEAR(gfsp_corr(kTwoJump, 0.7, 5.0, 1e4), 0.011945389617556594, 1e-13);
  EXPECT_NEAR(gfsp_corr(kTwoJump, 0.7, 5.0, 1e6), 0.00048540577816273377, 1e-14);
}

TEST(GfspMoments, CorrelationAsymptote) {
  const auto a = gfsp_corr_asymptote(kTwoJump, 0.7, 5.0);
  EXPECT_EQ(a.exponent, -0.7);
  auto ratio = [&](double t) { return gfsp_corr(kTwoJump, 0.7, 5.0, t) / (a.constant * std::pow(t, a.exponent)); };
  EXPECT_NEAR(ratio(1e4), 0.97502, 1e-4);
  EXPECT_NEAR(ratio(1e6), 1.0, 0.02);
  double prev = 0.0;
  for (double t = 1e3; t <= 1e9; t *= 10.0) {
    const double d = std::abs(1.0 - ratio(t));
    if (prev > 0.0) {
      EXPECT_LT(d, prev);
    }
    prev = d;
  }
  EXPECT_THROW(gfsp_corr_asymptote(kUnit, 0.7, 5.0), DomainError);
}

TEST(SampleGsp, EmpiricalPmf) {
  std::vector<std::int64_t> d(1000000);
  RunningMoments sym;
  for (std::size_t p = 0; p < d.size(); ++p) {
    RngStream rng(60, p);
    d[p] = sample_gsp(kOneHalf, 1.0, rng);
    sym.add(static_cast<double>(sample_gsp(kUnit, 1.0, rng)));
  }
  EXPECT_LT(tv_distance(empirical_pmf(d), gsp_table(kOneHalf, 1.0, 30)), 5e-3);
  EXPECT_LT(std::abs(sym.mean()), 3.0 * sym.std_error());
}

TEST(SampleGfsp, EmpiricalPmfMatchesMixing) {
  std::vector<std::int64_t> d(1000000);
  for (std::size_t p = 0; p < d.size(); ++p) {
    RngStream rng(61, p);
    d[p] = sample_gfsp(kOneHalf, 0.5, 1.0, rng);
  }
  const auto e = gfsp_pmf_range(kOneHalf, 0.5, -40, 40, 1.0, quadrature());
  std::vector<double> v;
  for (const auto& x : e) v.push_back(x.value);
  EXPECT_LT(tv_distance(empirical_pmf(d), PmfTable::from_values(-40, v)), 1e-2);
}

TEST(GfspFde, CaputoResidual) {
  const auto r = gfsp_fde_residual(kUnit, 0.5, 0, 1.0);
  EXPECT_LT(r.relative, 1e-3);
  for (const auto& x : gfsp_fde_residuals(kOneHalf, 0.5, -2, 2, 1.0)) EXPECT_LT(x.relative, 1e-3);
}

TEST(GfspFde, UnitIndexLimitSatisfiesOde) {
  auto q = [](std::int64_t n, double t) { return gfsp_pmf(kOneHalf, 1.0, n, t).value; };
  for (int n = -3; n <= 3; ++n) {
    const double dq = central_first([&](double t) { return q(n, t); }, 1.0, 1e-4);
    const double rhs = kOneHalf.Lambda() * (q(n - 1, 1.0) - q(n, 1.0)) -
                       kOneHalf.LambdaBar() * (q(n, 1.0) - q(n + 1, 1.0));
    EXPECT_LT(std::abs(dq - rhs), 1e-6);
  }
}
