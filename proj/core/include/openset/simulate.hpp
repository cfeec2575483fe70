#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "openset/embedding.hpp"
#include "openset/score_stats.hpp"

namespace openset {

/// Where the k-NN increment lands in score-matrix simulation.
enum class FusionSite {
  /// Mated rows: on the genuine entry. Non-mated rows: on the maximum.
  TheoremFaithful,
  /// On the row argmax, as the selective fusion rule does.
  AlgorithmFaithful,
};

enum class RowSampling {
  /// Draw every entry of every row. Needed for TAR@FAR.
  Full,
  /// Draw only the genuine score and the row maximum of the imposters, the
  /// latter by inverting the CDF of the maximum of n Gaussians. Exact for all
  /// open-set metrics at a fraction of the cost; TAR is not produced.
  RowMaxima,
};

struct ScoreSimConfig {
  double mu1 = 0.5, sigma1 = 0.1;   // genuine
  double mu2 = 0.0, sigma2 = 0.1;   // imposter
  double mu3 = 0.15, sigma3 = 0.05; // mated k-NN
  double mu4 = 0.1, sigma4 = 0.05;  // non-mated k-NN
  std::size_t n_mated = 1000;
  std::size_t n_nonmated = 1000;
  std::size_t n_subjects = 100;
  FusionSite site = FusionSite::TheoremFaithful;
  RowSampling sampling = RowSampling::RowMaxima;
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  double fpir_target = 0.01;
  double far_target = 0.001;
  bool threshold_only = false;

  /// Throws InvalidConfig.
  void validate() const;
  /// Parameters as a ScoreStats with counts and r1/r2 from the targets.
  ScoreStats as_stats() const;
};

struct TrialOutcome {
  double fnir_without = 0.0;
  double fnir_with = 0.0;
  /// NaN under RowSampling::RowMaxima.
  double tar_without = 0.0;
  double tar_with = 0.0;
};

/// One trial drawn from the given stream seed.
TrialOutcome simulate_score_trial(const ScoreSimConfig& config, std::uint64_t stream_seed);

/// config.trials trials; trial t uses stream derive_seed(config.seed, 0, t).
std::vector<TrialOutcome> simulate_score_matrices(const ScoreSimConfig& config);

struct FeatureSimConfig {
  std::size_t n_classes = 50;
  std::size_t samples_per_class = 10;
  double sigma = 0.05;
  double nonmated_fraction = 0.2;
  int k = 1;
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  double fpir_target = 0.01;
  double far_target = 0.001;
  bool threshold_only = false;

  /// Throws InvalidConfig.
  void validate() const;
};

/// Anchor of class i: (cos(2 pi i / N), sin(2 pi i / N)).
std::array<double, 2> class_anchor(std::size_t i, std::size_t n_classes);

/// Two-dimensional Gaussian classes around the unit-circle anchors.
/// floor(fraction * N) classes, chosen uniformly, are non-mated and have no
/// gallery media. Samples are normalized after drawing. Deterministic in
/// (config.seed, trial).
std::pair<Gallery, ProbeSet> generate_feature_dataset(const FeatureSimConfig& config, std::size_t trial);

/// Same, drawn from an explicit stream seed.
std::pair<Gallery, ProbeSet> generate_feature_dataset_from(const FeatureSimConfig& config, std::uint64_t stream_seed);

enum class SweepParam { K, Sigma, Mu3 };

std::string to_string(SweepParam p);
/// Accepts "k", "sigma", "mu3". Throws InvalidConfig.
SweepParam parse_sweep_param(const std::string& name);

struct SweepPoint {
  double value = 0.0;
  double fnir_mean = 0.0;       // with fusion
  double fnir_ci99 = 0.0;
  double fnir_baseline = 0.0;   // without fusion
  double fnir_baseline_ci99 = 0.0;
  double delta_mean = 0.0;      // mean paired (with - without)
  double delta_ci99 = 0.0;
  double tar = 0.0;
  double tar_baseline = 0.0;
  /// rhs - lhs of the open-set condition at this point.
  double gap = 0.0;
};

struct SweepResult {
  SweepParam param = SweepParam::Mu3;
  std::vector<SweepPoint> points;
};

/// Grid point p, trial t draw from stream derive_seed(base.seed, p, t).
/// A one-point grid reproduces the corresponding simulate run. Throws
/// InvalidConfig for an empty or non-increasing grid or a parameter the
/// simulator does not have (only Mu3 for score matrices; K and Sigma for
/// features).
SweepResult sweep(SweepParam param, std::span<const double> grid, const ScoreSimConfig& base);
SweepResult sweep(SweepParam param, std::span<const double> grid, const FeatureSimConfig& base);

/// Feature simulation at the base configuration (a one-point sweep).
SweepResult simulate_features(const FeatureSimConfig& config);
/// Score-matrix simulation at the base configuration (a one-point Mu3 sweep).
SweepResult simulate_scores(const ScoreSimConfig& config);

struct GapCorrelation {
  double pearson_r = 0.0;
  double slope = 0.0;
  std::size_t points = 0;
};

/// Pearson correlation and least-squares slope of FNIR improvement
/// (baseline - fused) on the gap, over every point of every sweep. Throws
/// DegenerateSample below 3 points, DegenerateVariance for constant inputs.
GapCorrelation gap_improvement_correlation(std::span<const SweepResult> sweeps);

/// Interpolated locations where delta_mean changes sign along the grid.
std::vector<double> sign_changes(const SweepResult& result);

}  // namespace openset
