#pragma once

#include <span>

namespace openset {

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal upper tail 1 - Phi(x), accurate in the far tail.
double normal_sf(double x);

/// Inverse standard normal CDF (Wichura's AS 241, ~1e-16 relative error).
/// Throws DomainError unless 0 < p < 1.
double normal_quantile(double p);

/// Inverse of the upper tail: returns x with 1 - Phi(x) = q. Keeps precision
/// when q is tiny, where normal_quantile(1 - q) would lose it.
double normal_quantile_upper(double q);

/// Arithmetic mean; NaN for an empty sample.
double mean(std::span<const double> xs);

/// Unbiased (n - 1) sample standard deviation; NaN for fewer than 2 points.
double sample_stddev(std::span<const double> xs);

/// z * s / sqrt(n). Zero for n = 1.
double ci_half_width(std::span<const double> xs, double z);

inline constexpr double kZ95 = 1.959963984540054;
inline constexpr double kZ99 = 2.5758293035489004;

/// Two-sided Welch t-test p-value with Welch-Satterthwaite degrees of freedom.
/// Throws DegenerateSample if a sample has fewer than 2 points or both have
/// zero variance.
double welch_t_test(std::span<const double> a, std::span<const double> b);

/// Pearson correlation. Throws DegenerateVariance on a constant input and
/// InvalidConfig on length mismatch.
double pearson(std::span<const double> x, std::span<const double> y);

/// Least-squares slope of y on x. Throws DegenerateVariance on constant x.
double regression_slope(std::span<const double> x, std::span<const double> y);

struct SpearmanTrend {
  double rho = 0.0;
  /// One-sided p-value for an increasing trend against index order.
  double p_value = 1.0;
  bool exact = false;
};

/// Spearman rank correlation of values against their position (average ranks
/// for ties). Exact permutation p-value for n <= 9, Student-t approximation
/// above. Throws DegenerateSample for n < 3.
SpearmanTrend spearman_trend(std::span<const double> values);

}  // namespace openset
