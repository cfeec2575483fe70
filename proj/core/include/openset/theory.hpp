#pragma once

#include <cstddef>

#include "openset/metrics.hpp"
#include "openset/score_stats.hpp"

namespace openset {

/// Order-statistic offset constant used in the expected verification
/// threshold (Blom's plotting position).
inline constexpr double kBlomAlpha = 3.14159265358979323846 / 8.0;

/// Half-width of the band around lhs == rhs reported as a boundary case.
inline constexpr double kBoundaryBand = 1e-12;

/// Estimates the Gaussian summary from a partition of UNFUSED scores whose
/// k-NN lists hold the fusion increments. Unbiased (n - 1) deviations.
/// Throws DegenerateSample for a population with fewer than 2 values, or
/// with zero spread unless allow_zero_sigma.
ScoreStats estimate_stats(const ScorePartition& unfused, std::size_t r1, std::size_t r2,
                          bool allow_zero_sigma = false);

/// -ln(-ln(1 - r1/N2)). Throws DomainError unless 0 < r1 < N2.
double gumbel_delta(std::size_t r1, std::size_t n2);

/// Phi^-1((N3 - r2 - a) / (N3 - 2a + 1)) with a = pi/8. Throws DomainError
/// when the argument leaves (0, 1).
double verification_quantile(std::size_t n3, std::size_t r2);

struct ConditionSides {
  double lhs = 0.0;
  double rhs = 0.0;
  /// lhs < rhs, and not within the boundary band.
  bool improves = false;
  bool at_boundary = false;
  /// rhs - lhs.
  double gap = 0.0;
};

/// Open-set condition: fusion lowers the expected FNIR at the expected
/// FPIR threshold iff lhs < rhs.
ConditionSides open_set_condition(const ScoreStats& stats);

/// Verification counterpart at the expected FAR threshold.
ConditionSides verification_condition(const ScoreStats& stats);

/// Expected FNIR at the expected open-set threshold, with or without fusion.
double expected_fnir(const ScoreStats& stats, bool with_fusion);

/// mu2 + delta*sigma2, or mu2 + mu4 + delta*sqrt(sigma2^2 + sigma4^2) with fusion.
double expected_open_set_threshold(const ScoreStats& stats, bool with_fusion);

/// Same shape with the verification quantile in place of delta.
double expected_verification_threshold(const ScoreStats& stats, bool with_fusion);

/// The mated k-NN mean at which the open-set condition holds with equality.
/// stats.mu3 is ignored.
double mu3_star(const ScoreStats& stats);

struct TheoremVerdict {
  ScoreStats stats;
  ConditionSides open_set;
  ConditionSides verification;
  double delta = 0.0;
  double verification_q = 0.0;
  double expected_fnir_without = 0.0;
  double expected_fnir_with = 0.0;
  double open_set_threshold_without = 0.0;
  double open_set_threshold_with = 0.0;
  double verification_threshold_without = 0.0;
  double verification_threshold_with = 0.0;
  double mu3_star = 0.0;
};

TheoremVerdict predict(const ScoreStats& stats);

/// Validates the counts and sigmas used by the conditions.
void validate_stats(const ScoreStats& stats);

}  // namespace openset
