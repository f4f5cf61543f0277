#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "countproc/gcp.hpp"
#include "countproc/specfun.hpp"

using namespace countproc;

namespace {
const RateVector kOneOne({1.0, 1.0});
}

TEST(Compositions, HandEnumeration) {
  const auto c = enumerate_compositions(2, 3);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].x, (std::vector<std::int64_t>{3, 0}));
  EXPECT_EQ(c[1].x, (std::vector<std::int64_t>{1, 1}));
  EXPECT_EQ(c[0].s_k, 3);
  EXPECT_EQ(c[1].s_k, 2);
}

TEST(Compositions, EdgeCases) {
  const auto zero = enumerate_compositions(4, 0);
  ASSERT_EQ(zero.size(), 1u);
  EXPECT_EQ(zero[0].x, (std::vector<std::int64_t>(4, 0)));
  const auto one = enumerate_compositions(1, 7);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].x, (std::vector<std::int64_t>{7}));
  EXPECT_THROW(enumerate_compositions(2, -1), DomainError);
}

TEST(Compositions, WeightedSumsAndCounts) {
  for (int k = 1; k <= 5; ++k)
    for (int n = 0; n <= 25; ++n) {
      const auto c = enumerate_compositions(k, n);
      EXPECT_EQ(static_cast<double>(c.size()), count_compositions(k, n));
      for (const auto& x : c) {
        EXPECT_EQ(x.weighted_sum(), n);
        std::int64_t s = 0;
        for (auto v : x.x) s += v;
        EXPECT_EQ(s, x.s_k);
      }
    }
  // partitions of 10 into parts at most 3
  EXPECT_EQ(count_compositions(3, 10), 14.0);
}

TEST(GcpPmf, Examples) {
  EXPECT_NEAR(gcp_pmf(RateVector({1.0}), 2, 1.0), std::exp(-1.0) / 2.0, 1e-15);
  EXPECT_NEAR(gcp_pmf(kOneOne, 2, 1.0), 1.5 * std::exp(-2.0), 1e-15);
  const RateVector r({0.4, 1.1, 0.2});
  EXPECT_NEAR(gcp_pmf(r, 0, 2.5), std::exp(-r.Lambda() * 2.5), 1e-15);
  EXPECT_THROW(gcp_pmf(r, -1, 1.0), DomainError);
}

TEST(GcpPmf, PoissonReduction) {
  const RateVector r({2.3});
  for (int n = 0; n <= 30; ++n)
    EXPECT_NEAR(gcp_pmf(r, n, 1.7), std::exp(n * std::log(2.3 * 1.7) - 2.3 * 1.7 - std::lgamma(n + 1.0)),
                1e-14);
}

TEST(GcpPmf, Normalization) {
  for (const auto& r : {kOneOne, RateVector({0.5, 0.3, 0.2}), RateVector::uniform(5, 0.7)})
    for (double t : {2.0, 4.0}) {
      const auto mv = gcp_moments(r, t);
      const auto N = static_cast<int>(std::ceil(mv.mean + 12.0 * std::sqrt(mv.var)));
      CompensatedSum s;
      for (int n = 0; n <= N; ++n) {
        const double p = gcp_pmf(r, n, t);
        EXPECT_GT(p, 0.0);
        s.add(p);
      }
      EXPECT_GE(s.value(), 1.0 - 1e-10) << "k=" << r.k() << " t=" << t;
      EXPECT_LE(s.value(), 1.0 + 1e-12);
    }
}

TEST(GcpPmf, SkewedShortTimeTail) {
  // mean + 12 sd stops at n = 17 for t = 1/2 and leaves about 8e-9 of mass
  const RateVector r({0.5, 0.3, 0.2});
  for (double t : {0.5, 1.0}) {
    CompensatedSum s;
    for (int n = 0; n <= 40; ++n) s.add(gcp_pmf(r, n, t));
    EXPECT_GE(s.value(), 1.0 - 1e-13) << t;
  }
}

TEST(GcpPgf, ExamplesAndDuality) {
  EXPECT_DOUBLE_EQ(gcp_pgf(kOneOne, 1.0, 1.0), 1.0);
  EXPECT_NEAR(gcp_pgf(kOneOne, 0.0, 1.0), gcp_pmf(kOneOne, 0, 1.0), 1e-15);
  for (double u : {0.3, 0.5, 0.9}) {
    CompensatedSum s;
    for (int n = 0; n <= 60; ++n) s.add(std::pow(u, n) * gcp_pmf(kOneOne, n, 1.0));
    EXPECT_NEAR(s.value(), gcp_pgf(kOneOne, u, 1.0), 1e-10) << u;
  }
  EXPECT_THROW(gcp_pgf(kOneOne, 1.5, 1.0), DomainError);
}

TEST(GcpCf, MatchesPgfOnUnitCircle) {
  const RateVector r({0.5, 0.3, 0.2});
  EXPECT_NEAR(std::abs(gcp_cf(r, 0.0, 2.0) - 1.0), 0.0, 1e-15);
  // E e^{i xi M} from the pmf
  std::complex<double> s = 0.0;
  for (int n = 0; n <= 80; ++n) s += std::polar(gcp_pmf(r, n, 2.0), 0.8 * n);
  EXPECT_NEAR(std::abs(s - gcp_cf(r, 0.8, 2.0)), 0.0, 1e-12);
}

TEST(GcpMoments, ArithmeticAndPolyaPreset) {
  const RateVector r({1.0, 2.0});
  EXPECT_DOUBLE_EQ(r.r1(), 5.0);
  EXPECT_DOUBLE_EQ(gcp_moments(r, 2.0).mean, 10.0);
  EXPECT_DOUBLE_EQ(gcp_moments(r, 2.0).var, 18.0);
  const auto pa = RateVector::polya_aeppli(4, 2.0, 0.5);
  EXPECT_NEAR(pa.Lambda(), 2.0, 1e-15);
  EXPECT_EQ(RateVector::uniform(3, 0.4).k(), 3);
  EXPECT_THROW(RateVector({1.0, 0.0}), DomainError);
  EXPECT_THROW(RateVector(std::vector<double>{}), DomainError);
}

TEST(GfcpMoments, UnitIndexReducesToGcp) {
  const RateVector r({0.5, 0.3, 0.2});
  const auto m = gfcp_moments(r, 1.0, 1.0, 2.0);
  EXPECT_NEAR(m.mean, r.r1() * 2.0, 1e-12);
  EXPECT_NEAR(m.var, r.r2() * 2.0, 1e-12);
  EXPECT_NEAR(m.cov, r.r2() * 1.0, 1e-12);
  EXPECT_THROW(gfcp_moments(r, 0.5, 2.0, 1.0), DomainError);
}

TEST(GfcpMoments, CovarianceAtEqualTimesMatchesMonteCarlo) {
  const auto m = gfcp_moments(kOneOne, 0.6, 1.0, 1.0);
  EXPECT_NEAR(m.cov, m.var, 1e-12 * m.var);
  RunningMoments acc;
  for (std::size_t p = 0; p < 100000; ++p) {
    RngStream rng(21, p);
    acc.add(static_cast<double>(sample_gfcp(kOneOne, 0.6, 1.0, rng)));
  }
  EXPECT_NEAR(acc.variance() / m.var, 1.0, 0.02);
  EXPECT_NEAR(acc.mean() / m.mean, 1.0, 0.02);
}

TEST(SampleGcp, MeanAndPmf) {
  const RateVector r({0.5, 0.3, 0.2});
  std::vector<std::int64_t> d(1000000);
  RunningMoments acc;
  for (std::size_t p = 0; p < d.size(); ++p) {
    RngStream rng(4, p);
    d[p] = sample_gcp(r, 2.0, rng);
    acc.add(static_cast<double>(d[p]));
  }
  EXPECT_NEAR(acc.mean(), 3.4, 0.02);
  std::vector<double> exact;
  for (int n = 0; n <= 40; ++n) exact.push_back(gcp_pmf(r, n, 2.0));
  EXPECT_LT(tv_distance(empirical_pmf(d), PmfTable::from_values(0, exact)), 5e-3);
}

TEST(SampleGcp, PathIsCountingProcess) {
  const RateVector r({0.5, 0.3, 0.2});
  RngStream rng(6, 0);
  const auto path = sample_gcp_path(r, 50.0, rng);
  ASSERT_FALSE(path.times.empty());
  for (std::size_t i = 0; i < path.times.size(); ++i) {
    EXPECT_GE(path.sizes[i], 1);
    EXPECT_LE(path.sizes[i], 3);
    if (i > 0) {
      EXPECT_GT(path.times[i], path.times[i - 1]);
    }
    EXPECT_LE(path.times[i], 50.0);
  }
  std::int64_t prev = 0;
  for (double t = 0.0; t <= 50.0; t += 0.5) {
    const auto v = path.value_at(t);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(SampleGcp, PathMarginalMatchesPmf) {
  std::vector<std::int64_t> d(200000);
  for (std::size_t p = 0; p < d.size(); ++p) {
    RngStream rng(7, p);
    d[p] = sample_gcp_path(kOneOne, 1.0, rng).value_at(1.0);
  }
  std::vector<double> exact;
  for (int n = 0; n <= 30; ++n) exact.push_back(gcp_pmf(kOneOne, n, 1.0));
  EXPECT_LT(tv_distance(empirical_pmf(d), PmfTable::from_values(0, exact)), 1e-2);
}

TEST(GcpLln, ConcentratesAtR1) {
  const RateVector r({1.0, 2.0});
  // Chebyshev: P(|M/t - 5| >= 0.05) <= r2 / (t 0.05^2) = 0.036
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RngStream rng(seed, 0);
    inside += std::abs(gcp_lln_check(r, 1e4, rng) - 5.0) < 0.05;
  }
  EXPECT_GE(inside, 17);
  RngStream rng(1, 0);
  EXPECT_NEAR(gcp_lln_check(RateVector({3.0}), 1e4, rng), 3.0, 0.1);
  EXPECT_THROW(gcp_lln_check(r, 10.0, rng), DomainError);
}

TEST(GfcpPmf, UnitIndexIsGcp) {
  const auto e = gfcp_pmf(kOneOne, 1.0, 3, 1.5);
  EXPECT_TRUE(e.exact());
  EXPECT_EQ(e.value, gcp_pmf(kOneOne, 3, 1.5));
}

TEST(GfcpPmf, HalfIndexZeroStateIsMittagLeffler) {
  MixingOptions q;
  q.method = MixingMethod::Quadrature;
  const auto e = gfcp_pmf(RateVector({1.0}), 0.5, 0, 1.0, q);
  EXPECT_NEAR(e.value, 0.427583576155807, 1e-9);
  EXPECT_NEAR(e.value, mittag_leffler(0.5, 1, 1, -1.0), 1e-9);
  // fractional Poisson zero state at another time
  EXPECT_NEAR(gfcp_pmf(RateVector({2.0}), 0.5, 0, 3.0, q).value,
              mittag_leffler(0.5, 1, 1, -2.0 * std::sqrt(3.0)), 1e-9);
}

TEST(GfcpPmf, QuadratureAgreesWithMonteCarlo) {
  MixingOptions q, mc;
  q.method = MixingMethod::Quadrature;
  mc.method = MixingMethod::MonteCarlo;
  mc.seed = 12;
  const auto exact = gfcp_pmf_range(kOneOne, 0.5, 0, 8, 1.0, q);
  const auto est = gfcp_pmf_range(kOneOne, 0.5, 0, 8, 1.0, mc);
  for (std::size_t n = 0; n < exact.size(); ++n) {
    ASSERT_TRUE(est[n].std_error.has_value());
    EXPECT_LT(std::abs(exact[n].value - est[n].value), 3.0 * *est[n].std_error + 1e-12) << n;
  }
}

TEST(GfcpPmf, QuadratureRejectsUnsupportedIndex) {
  MixingOptions q;
  q.method = MixingMethod::Quadrature;
  EXPECT_THROW(gfcp_pmf(kOneOne, 0.7, 1, 1.0, q), StabilityError);
  // Auto falls back to Monte Carlo
  MixingOptions a;
  a.paths = 20000;
  EXPECT_FALSE(gfcp_pmf(kOneOne, 0.7, 1, 1.0, a).exact());
}

TEST(GfcpPmf, NormalizationAtHalfIndex) {
  MixingOptions q;
  q.method = MixingMethod::Quadrature;
  const auto e = gfcp_pmf_range(kOneOne, 0.5, 0, 80, 1.0, q);
  CompensatedSum s;
  for (const auto& v : e) {
    EXPECT_GT(v.value, 0.0);
    s.add(v.value);
  }
  EXPECT_NEAR(s.value(), 1.0, 1e-9);
}

TEST(GoverningSystem, OdeResidual) {
  const RateVector r({0.5, 0.3, 0.2});
  for (int n = 0; n <= 10; ++n)
    for (double t : {0.5, 1.0, 3.0}) EXPECT_LT(gcp_ode_residual(r, n, t), 1e-6) << n << " " << t;
}

TEST(GoverningSystem, OdeResidualDetectsWrongRates) {
  // pmf of a different process does not satisfy the system
  const RateVector r({0.5, 0.3});
  auto p = [](std::int64_t n, double t) { return gcp_pmf(RateVector({0.5, 0.4}), n, t); };
  const double dp = central_first([&](double t) { return p(2, t); }, 1.0, 1e-4);
  const double rhs = -r.Lambda() * p(2, 1.0) + r[1] * p(1, 1.0) + r[2] * p(0, 1.0);
  EXPECT_GT(std::abs(dp - rhs), 1e-3);
}

TEST(GoverningSystem, CaputoResidualAtHalfIndex) {
  const auto res = gfcp_fde_residuals(kOneOne, 0.5, 3, 1.0);
  ASSERT_EQ(res.size(), 4u);
  for (const auto& r : res) EXPECT_LT(r.relative, 1e-3);
}

TEST(SampleGfcp, EnsembleRespectsOrdering) {
  FirstPassageConfig cfg;
  cfg.grid_step = 1e-2;
  const auto ens = sample_gfcp_ensemble(kOneOne, 0.7, {0.5, 1.0, 2.0}, 500, 3, cfg, 2);
  for (std::size_t p = 0; p < ens.paths; ++p) {
    EXPECT_GE(ens.value(p, 0), 0);
    EXPECT_LE(ens.value(p, 0), ens.value(p, 1));
    EXPECT_LE(ens.value(p, 1), ens.value(p, 2));
  }
  const auto again = sample_gfcp_ensemble(kOneOne, 0.7, {0.5, 1.0, 2.0}, 500, 3, cfg, 1);
  EXPECT_EQ(ens.values, again.values);
}
