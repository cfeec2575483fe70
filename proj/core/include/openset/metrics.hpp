#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "openset/embedding.hpp"
#include "openset/fusion.hpp"
#include "openset/score_stats.hpp"

namespace openset {

/// Column of each probe's true subject, nullopt for non-mated probes. Throws
/// UnknownTruthSubject.
std::vector<std::optional<std::size_t>> truth_columns(const ProbeSet& probes, const Gallery& gallery);

/// Score populations of one matrix, split by probe type.
struct ScorePartition {
  /// Score at the true subject of each mated probe.
  std::vector<double> genuine;
  /// Whether each mated probe's true subject ranks first (same order as genuine).
  std::vector<std::uint8_t> rank1_correct;
  /// Every non-genuine entry of every row.
  std::vector<double> imposter;
  /// Row maximum of each non-mated probe.
  std::vector<double> nonmated_maxima;
  /// Per-probe increment, split by probe type.
  std::vector<double> mated_knn;
  std::vector<double> nonmated_knn;
  std::size_t subjects = 0;
};

ScorePartition partition_scores(const Matrix& scores, std::span<const double> increments,
                                std::span<const std::optional<std::size_t>> truth);
ScorePartition partition_scores(const FusedScores& fused, std::span<const std::optional<std::size_t>> truth);

/// 1-based rank of column col in row; ties are broken by column order.
std::size_t rank_of(std::span<const double> row, std::size_t col);

struct ThresholdResult {
  double value = 0.0;      // FNIR or TAR at the threshold
  double threshold = 0.0;
  bool achievable = true;  // false when target < 1 / population size
  double realized_rate = 0.0;  // empirical FPIR or FAR at the threshold
};

/// Largest threshold-from-order-statistics whose realized exceedance rate
/// (fraction of values >= threshold) does not exceed target. When no
/// non-trivial threshold satisfies that, returns one just above the maximum
/// and flags achievable = false.
ThresholdResult rate_threshold(std::span<const double> negatives, double target);

/// FNIR at the FPIR target. A mated probe fails when its genuine score is
/// below the threshold or, unless threshold_only, it is not ranked first.
/// rank1_correct may be empty (treated as all correct).
ThresholdResult fnir_at_fpir(std::span<const double> genuine, std::span<const double> nonmated_maxima,
                             std::span<const std::uint8_t> rank1_correct, double target,
                             bool threshold_only = false);

/// TAR at the FAR target over the imposter population.
ThresholdResult tar_at_far(std::span<const double> genuine, std::span<const double> imposter, double target);

/// Fraction of mated probes whose truth ranks within each requested rank.
std::vector<double> rank_accuracy(const Matrix& scores, std::span<const std::optional<std::size_t>> truth,
                                  std::span<const int> ranks);

struct EvalProtocol {
  std::vector<double> fpir_targets{0.001, 0.01, 0.05};
  std::vector<double> far_targets{0.001, 0.01};
  std::vector<int> ranks{1, 20};
  int runs = 50;
  /// Fraction of gallery subjects turned non-mated per run; 0 keeps the
  /// probe file's own truth labels.
  double nonmated_fraction = 0.2;
  std::uint64_t seed = 0;
  bool threshold_only = false;
  /// Rates used to derive r1 and r2 for the score-statistics summary.
  double stats_fpir = 0.01;
  double stats_far = 0.001;

  /// Throws InvalidConfig.
  void validate() const;
};

struct TargetMetric {
  double target = 0.0;
  double mean = 0.0;
  double ci95 = 0.0;
  double threshold = 0.0;  // mean over runs
  bool achievable = true;  // achievable in every run
  std::vector<double> per_run;
};

struct RankMetric {
  int rank = 1;
  double mean = 0.0;
  double ci95 = 0.0;
  std::vector<double> per_run;
};

struct MetricReport {
  std::string mode;
  int runs = 0;
  std::vector<TargetMetric> fnir_at_fpir;
  std::vector<TargetMetric> tar_at_far;
  std::vector<RankMetric> rank_accuracy;
  /// Estimated from the first run's unfused scores and k-NN increments, when
  /// every population has at least two values.
  std::optional<ScoreStats> stats;
};

/// Metrics of one scored matrix.
struct RunMetrics {
  std::vector<ThresholdResult> fnir;
  std::vector<ThresholdResult> tar;
  std::vector<double> rank_accuracy;
};

RunMetrics evaluate_run(const FusedScores& fused, std::span<const std::optional<std::size_t>> truth,
                        const EvalProtocol& protocol);

/// Folds per-run metrics into a report (mean and 95% CI per target).
MetricReport aggregate_runs(const std::vector<RunMetrics>& runs, const EvalProtocol& protocol, std::string mode);

using Scorer = std::function<FusedScores(const Gallery&, const ProbeSet&)>;

/// Repeated mated/non-mated splits. Run r draws its non-mated subjects from
/// a stream seeded by (protocol.seed, r), removes them from the gallery,
/// relabels their probes non-mated, scores, and evaluates. Throws
/// InsufficientSubjects when the fraction selects no subject.
MetricReport split_runs(const Gallery& gallery, const ProbeSet& probes, const EvalProtocol& protocol,
                        const Scorer& scorer, std::string mode = "");

/// Subjects chosen as non-mated for a given run.
std::vector<std::string> nonmated_subjects(const Gallery& gallery, double fraction, std::uint64_t seed, int run);

}  // namespace openset
