#include "openset/theory.hpp"

#include <cmath>
#include <string>

#include "openset/error.hpp"
#include "openset/stats.hpp"

namespace openset {

namespace {

void estimate(std::span<const double> xs, const char* name, bool allow_zero, double& mu, double& sigma) {
  if (xs.size() < 2) {
    throw Error(ErrorCode::DegenerateSample,
                std::string(name) + " has " + std::to_string(xs.size()) + " values, need at least 2");
  }
  mu = mean(xs);
  sigma = sample_stddev(xs);
  if (sigma == 0.0 && !allow_zero) throw Error(ErrorCode::DegenerateSample, std::string(name) + " has zero spread");
}

ConditionSides compare(double lhs, double rhs) {
  ConditionSides c;
  c.lhs = lhs;
  c.rhs = rhs;
  c.gap = rhs - lhs;
  c.at_boundary = std::fabs(c.gap) <= kBoundaryBand;
  c.improves = !c.at_boundary && lhs < rhs;
  return c;
}

// Both conditions share one shape; only the quantile differs.
ConditionSides condition(const ScoreStats& s, double quantile) {
  const double fused_spread = std::sqrt(s.sigma1 * s.sigma1 + s.sigma3 * s.sigma3);
  const double lhs =
      (s.mu2 + s.mu4 + quantile * std::hypot(s.sigma2, s.sigma4) - (s.mu1 + s.mu3)) / fused_spread;
  const double rhs = (s.mu2 + quantile * s.sigma2 - s.mu1) / s.sigma1;
  return compare(lhs, rhs);
}

}  // namespace

void validate_stats(const ScoreStats& s) {
  for (double v : {s.mu1, s.mu2, s.mu3, s.mu4, s.sigma1, s.sigma2, s.sigma3, s.sigma4}) {
    if (!std::isfinite(v)) throw Error(ErrorCode::DomainError, "score statistics must be finite");
  }
  if (s.sigma2 < 0.0 || s.sigma3 < 0.0 || s.sigma4 < 0.0 || s.sigma1 < 0.0) {
    throw Error(ErrorCode::DomainError, "standard deviations must be non-negative");
  }
  if (s.sigma1 == 0.0) throw Error(ErrorCode::ZeroSigma, "sigma1 must be positive");
}

ScoreStats estimate_stats(const ScorePartition& p, std::size_t r1, std::size_t r2, bool allow_zero_sigma) {
  ScoreStats s;
  estimate(p.genuine, "genuine scores", allow_zero_sigma, s.mu1, s.sigma1);
  estimate(p.imposter, "imposter scores", allow_zero_sigma, s.mu2, s.sigma2);
  estimate(p.mated_knn, "mated k-NN scores", allow_zero_sigma, s.mu3, s.sigma3);
  estimate(p.nonmated_knn, "non-mated k-NN scores", allow_zero_sigma, s.mu4, s.sigma4);
  s.n1 = p.genuine.size();
  s.n2 = p.nonmated_maxima.size();
  s.n3 = p.imposter.size();
  s.m = p.subjects;
  s.r1 = r1;
  s.r2 = r2;
  return s;
}

double gumbel_delta(std::size_t r1, std::size_t n2) {
  if (!(r1 > 0 && r1 < n2)) {
    throw Error(ErrorCode::DomainError, "need 0 < r1 < N2, got r1 = " + std::to_string(r1) +
                                            ", N2 = " + std::to_string(n2));
  }
  const double rate = static_cast<double>(r1) / static_cast<double>(n2);
  // log1p keeps precision for small rates.
  return -std::log(-std::log1p(-rate));
}

double verification_quantile(std::size_t n3, std::size_t r2) {
  const double n = static_cast<double>(n3);
  const double r = static_cast<double>(r2);
  const double arg = (n - r - kBlomAlpha) / (n - 2.0 * kBlomAlpha + 1.0);
  if (!(arg > 0.0 && arg < 1.0) || r2 >= n3) {
    throw Error(ErrorCode::DomainError, "quantile argument outside (0, 1) for N3 = " + std::to_string(n3) +
                                            ", r2 = " + std::to_string(r2));
  }
  // 1 - arg in closed form, to keep precision near 1.
  const double upper = (r + 1.0 - kBlomAlpha) / (n - 2.0 * kBlomAlpha + 1.0);
  return normal_quantile_upper(upper);
}

ConditionSides open_set_condition(const ScoreStats& stats) {
  validate_stats(stats);
  return condition(stats, gumbel_delta(stats.r1, stats.n2));
}

ConditionSides verification_condition(const ScoreStats& stats) {
  validate_stats(stats);
  return condition(stats, verification_quantile(stats.n3, stats.r2));
}

double expected_open_set_threshold(const ScoreStats& s, bool with_fusion) {
  const double delta = gumbel_delta(s.r1, s.n2);
  return with_fusion ? s.mu2 + s.mu4 + delta * std::hypot(s.sigma2, s.sigma4) : s.mu2 + delta * s.sigma2;
}

double expected_verification_threshold(const ScoreStats& s, bool with_fusion) {
  const double q = verification_quantile(s.n3, s.r2);
  return with_fusion ? s.mu2 + s.mu4 + q * std::hypot(s.sigma2, s.sigma4) : s.mu2 + q * s.sigma2;
}

double expected_fnir(const ScoreStats& s, bool with_fusion) {
  validate_stats(s);
  const ConditionSides c = condition(s, gumbel_delta(s.r1, s.n2));
  // P(genuine < threshold) under each Gaussian model.
  return normal_cdf(with_fusion ? c.lhs : c.rhs);
}

double mu3_star(const ScoreStats& s) {
  validate_stats(s);
  const double delta = gumbel_delta(s.r1, s.n2);
  const double rhs = (s.mu2 + delta * s.sigma2 - s.mu1) / s.sigma1;
  return s.mu2 + s.mu4 + delta * std::hypot(s.sigma2, s.sigma4) - s.mu1 -
         std::sqrt(s.sigma1 * s.sigma1 + s.sigma3 * s.sigma3) * rhs;
}

TheoremVerdict predict(const ScoreStats& stats) {
  TheoremVerdict v;
  v.stats = stats;
  v.open_set = open_set_condition(stats);
  v.verification = verification_condition(stats);
  v.delta = gumbel_delta(stats.r1, stats.n2);
  v.verification_q = verification_quantile(stats.n3, stats.r2);
  v.expected_fnir_without = expected_fnir(stats, false);
  v.expected_fnir_with = expected_fnir(stats, true);
  v.open_set_threshold_without = expected_open_set_threshold(stats, false);
  v.open_set_threshold_with = expected_open_set_threshold(stats, true);
  v.verification_threshold_without = expected_verification_threshold(stats, false);
  v.verification_threshold_with = expected_verification_threshold(stats, true);
  v.mu3_star = mu3_star(stats);
  return v;
}

}  // namespace openset
