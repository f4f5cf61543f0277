#include <atomic>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "countproc/parallel.hpp"
#include "countproc/rng.hpp"

using namespace countproc;

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  RngStream a(5, 1), b(5, 1), c(5, 2), d(6, 1);
  const auto x = a(), y = b(), z = c(), w = d();
  EXPECT_EQ(x, y);
  EXPECT_NE(x, z);
  EXPECT_NE(x, w);
}

TEST(Rng, UniformInOpenUnitInterval) {
  RngStream r(1, 0);
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
  EXPECT_EQ(r.poisson(0.0), 0);
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(10007);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i].fetch_add(1); });
  for (const auto& h : hits) ASSERT_EQ(h.load(), 1);
}

TEST(ParallelFor, RethrowsSmallestFailingIndex) {
  try {
    parallel_for(1000, 4, [](std::size_t i) {
      if (i == 700 || i == 10) throw std::runtime_error("fail " + std::to_string(i));
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "fail 10");
  }
}

TEST(McMeans, IdenticalAcrossThreadCounts) {
  auto run = [](int threads) {
    return mc_means(20000, 77, 2, threads, [](RngStream& rng, std::size_t, std::span<double> o) {
      o[0] = rng.normal();
      o[1] = rng.exponential();
    });
  };
  const auto a = run(1), b = run(3), c = run(8);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(a[i].value, b[i].value);
    EXPECT_EQ(a[i].value, c[i].value);
    EXPECT_EQ(*a[i].std_error, *c[i].std_error);
  }
  EXPECT_NEAR(a[1].value, 1.0, 5.0 * *a[1].std_error);
}

TEST(DefaultThreads, OverrideAndReset) {
  set_default_threads(3);
  EXPECT_EQ(default_threads(), 3);
  set_default_threads(0);
  EXPECT_GE(default_threads(), 1);
}
