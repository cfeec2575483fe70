#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "openset/error.hpp"
#include "openset/rng.hpp"
#include "openset/stats.hpp"

using namespace openset;
using Big = boost::multiprecision::cpp_bin_float_50;

namespace {

double oracle_quantile(double p) {
  return static_cast<double>(boost::math::quantile(boost::math::normal_distribution<Big>(), Big(p)));
}

}  // namespace

TEST(NormalQuantile, DenseGridAgainstHighPrecision) {
  std::vector<double> grid;
  for (int i = 1; i < 2000; ++i) grid.push_back(i / 2000.0);
  for (int e = -300; e <= -3; e += 3) {
    grid.push_back(std::pow(10.0, e));
    grid.push_back(1.0 - std::pow(10.0, std::max(e, -15)));
  }
  double worst = 0;
  for (double p : grid) {
    const double err = std::fabs(normal_quantile(p) - oracle_quantile(p));
    worst = std::max(worst, err);
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(NormalQuantile, UpperTailPreservesPrecision) {
  for (double q : {1e-3, 1e-6, 1e-10, 1e-20, 1e-100}) {
    EXPECT_NEAR(normal_quantile_upper(q), -oracle_quantile(q), 1e-9 * std::max(1.0, std::fabs(oracle_quantile(q))));
  }
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-14);
}

TEST(NormalQuantile, DomainErrors) {
  for (double p : {0.0, 1.0, -0.1, 1.5, std::nan("")}) {
    try {
      normal_quantile(p);
      ADD_FAILURE() << p;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::DomainError);
    }
  }
}

TEST(NormalCdf, InvertsQuantileAndTail) {
  for (double p : {1e-12, 1e-5, 0.01, 0.3, 0.5, 0.77, 0.999}) {
    EXPECT_NEAR(normal_cdf(normal_quantile(p)), p, 1e-14 + 1e-12 * p);
  }
  EXPECT_NEAR(normal_sf(10.0), 7.61985302416047e-24, 1e-36);
}

TEST(Descriptive, MeanStddevCi) {
  const std::vector<double> xs{2, 4, 4, 4, 5, 5, 7, 9};
  EXPECT_DOUBLE_EQ(mean(xs), 5.0);
  EXPECT_NEAR(sample_stddev(xs), std::sqrt(32.0 / 7.0), 1e-15);
  EXPECT_NEAR(ci_half_width(xs, kZ95), kZ95 * std::sqrt(32.0 / 7.0) / std::sqrt(8.0), 1e-15);
  EXPECT_TRUE(std::isnan(sample_stddev(std::vector<double>{1.0})));
  EXPECT_NEAR(kZ99, 2.5758293035489004, 0);
}

TEST(Welch, MatchesReferenceValues) {
  // Reference p-values from an independent statistics package.
  EXPECT_NEAR(welch_t_test(std::vector<double>{1, 2, 3, 4, 5}, std::vector<double>{2, 4, 6, 8, 10, 12}),
              0.04928433820673049, 1e-10);
  EXPECT_NEAR(welch_t_test(std::vector<double>{0.1, 0.4, 0.35, 0.8, 0.9, 0.05, 0.3},
                           std::vector<double>{0.2, 0.25, 0.5, 0.6}),
              0.867702500306252, 1e-10);
  EXPECT_THROW(welch_t_test(std::vector<double>{1}, std::vector<double>{1, 2}), Error);
  EXPECT_THROW(welch_t_test(std::vector<double>{1, 1}, std::vector<double>{2, 2}), Error);
}

// Under the null, p-values are uniform: Kolmogorov-Smirnov distance from
// U(0,1) stays below the 0.1% critical value.
TEST(Welch, NullCalibration) {
  Rng rng(17);
  std::vector<double> ps;
  for (int t = 0; t < 2000; ++t) {
    std::vector<double> a(8), b(13);
    for (double& x : a) x = rng.normal(1.0, 1.0);
    for (double& x : b) x = rng.normal(1.0, 3.0);
    ps.push_back(welch_t_test(a, b));
  }
  std::sort(ps.begin(), ps.end());
  double d = 0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    d = std::max({d, (i + 1.0) / ps.size() - ps[i], ps[i] - double(i) / ps.size()});
  }
  EXPECT_LT(d, 1.95 / std::sqrt(double(ps.size())));
}

TEST(Correlation, PearsonAndSlope) {
  const std::vector<double> x{1, 2, 3, 4, 5, 6}, y{2, 1, 4, 3, 7, 5};
  EXPECT_NEAR(pearson(x, y), 0.7917946548886297, 1e-14);
  EXPECT_NEAR(regression_slope(x, y), 0.9142857142857145, 1e-14);
  std::vector<double> lin(6);
  std::transform(x.begin(), x.end(), lin.begin(), [](double v) { return 3 * v - 1; });
  EXPECT_NEAR(pearson(x, lin), 1.0, 1e-15);
  try {
    pearson(x, std::vector<double>(6, 2.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateVariance);
  }
}

TEST(Spearman, ExactPermutationOracle) {
  const std::vector<double> v{1, 3, 2, 5, 4, 6};
  const SpearmanTrend t = spearman_trend(v);
  EXPECT_TRUE(t.exact);
  EXPECT_NEAR(t.rho, 0.8857142857142858, 1e-14);
  // Oracle: count permutations of 0..5 with sum of squared rank differences
  // no larger than the observed one.
  std::vector<int> perm(6);
  std::iota(perm.begin(), perm.end(), 0);
  const int observed = 0 + 1 + 1 + 1 + 1 + 0;
  int hits = 0, total = 0;
  do {
    int d2 = 0;
    for (int i = 0; i < 6; ++i) d2 += (perm[i] - i) * (perm[i] - i);
    hits += d2 <= observed;
    ++total;
  } while (std::next_permutation(perm.begin(), perm.end()));
  EXPECT_NEAR(t.p_value, double(hits) / total, 1e-15);
}

TEST(Spearman, PerfectTrendOfFive) {
  const SpearmanTrend t = spearman_trend(std::vector<double>{0.1, 0.2, 0.4, 0.8, 0.9});
  EXPECT_EQ(t.rho, 1.0);
  EXPECT_NEAR(t.p_value, 1.0 / 120.0, 1e-15);
  EXPECT_THROW(spearman_trend(std::vector<double>{1, 2}), Error);
}

TEST(Spearman, LargeSampleUsesApproximation) {
  std::vector<double> v(30);
  std::iota(v.begin(), v.end(), 0.0);
  const SpearmanTrend t = spearman_trend(v);
  EXPECT_FALSE(t.exact);
  EXPECT_LT(t.p_value, 1e-10);
  std::reverse(v.begin(), v.end());
  EXPECT_GT(spearman_trend(v).p_value, 0.999);
}
