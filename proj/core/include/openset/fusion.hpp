#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "openset/embedding.hpp"
#include "openset/scores.hpp"

namespace openset {

enum class FusionKind {
  LocalScore,  // add the k-NN score to the row-maximum columns
  NaiveMean,   // average every column with the k-NN score
  None,        // per-subject scores unchanged
  MaxPool,     // per-subject max of media cosines
  MinPool,     // per-subject min of media cosines
  MeanPool,    // per-subject mean of media cosines
  AddConst,    // add a constant to the row-maximum columns
  DoubleMax,   // double the row-maximum columns
  AvgTopK,     // add the mean of the 1st..k-th nearest neighbors to the row-maximum columns
};

struct FusionMode {
  FusionKind kind = FusionKind::LocalScore;
  int k = 1;
  double constant = 1.0;

  static FusionMode local_score(int k) { return {FusionKind::LocalScore, k, 0.0}; }
  static FusionMode naive_mean(int k) { return {FusionKind::NaiveMean, k, 0.0}; }
  static FusionMode none() { return {FusionKind::None, 1, 0.0}; }
  static FusionMode max_pool() { return {FusionKind::MaxPool, 1, 0.0}; }
  static FusionMode min_pool() { return {FusionKind::MinPool, 1, 0.0}; }
  static FusionMode mean_pool() { return {FusionKind::MeanPool, 1, 0.0}; }
  static FusionMode add_const(double c) { return {FusionKind::AddConst, 1, c}; }
  static FusionMode double_max() { return {FusionKind::DoubleMax, 1, 0.0}; }
  static FusionMode avg_topk(int k) { return {FusionKind::AvgTopK, k, 0.0}; }

  bool uses_knn() const noexcept {
    return kind == FusionKind::LocalScore || kind == FusionKind::NaiveMean || kind == FusionKind::AvgTopK;
  }
  /// Throws InvalidConfig on k < 1 or a non-finite constant.
  void validate() const;
  std::string name() const;
};

/// Parses "local", "naive", "none", "max", "min", "mean", "addconst",
/// "double", "avgtopk". Throws InvalidConfig.
FusionKind parse_fusion_kind(const std::string& name);

struct FusionOptions {
  /// k larger than the candidate count selects the smallest value instead of
  /// throwing KTooLarge.
  bool clamp_k = false;
  /// Take the k-NN among the argmax subject's own media instead of over the
  /// whole gallery.
  bool per_subject_knn = false;
  CenterMode center = CenterMode::Mean;
};

/// k-th largest value of the row (k = 1 is the maximum).
double knn_score(std::span<const double> media_row, int k, bool clamp_k = false);

/// Mean of the k largest values of the row.
double mean_top_k(std::span<const double> media_row, int k, bool clamp_k = false);

struct FusedRow {
  std::vector<double> scores;
  /// Columns that received the increment (all columns tied at the row max).
  std::vector<std::uint8_t> incremented;
  /// Amount added to each incremented column.
  double increment = 0.0;
};

/// Adds knn to every column equal to the row maximum; other columns are
/// copied bit-for-bit. Throws NonFinite on non-finite input.
FusedRow local_score(std::span<const double> subject_row, double knn);

/// Every column becomes (s + knn) / 2.
std::vector<double> naive_mean_fusion(std::span<const double> subject_row, double knn);

/// Max/min/mean of each subject's media cosines. owners maps media columns
/// to subject indices (see Gallery::media_owners).
std::vector<double> pool_scores(std::span<const double> media_row, std::span<const std::size_t> owners,
                                std::size_t subject_count, FusionKind mode);
std::vector<double> pool_scores(std::span<const double> media_row, const Gallery& gallery, FusionKind mode);

/// AddConst, DoubleMax and AvgTopK variants. Throws KTooLarge for AvgTopK.
FusedRow variant_fusion(std::span<const double> subject_row, std::span<const double> media_row,
                        const FusionMode& mode, bool clamp_k = false);

/// Verification against one claimed subject: mean media cosine plus the
/// k-th largest cosine among that subject's media.
double one_to_one_score(const Embedding& probe, std::span<const Embedding> subject_media, int k,
                        bool clamp_k = false);

/// Result of fusing a probes x subjects matrix.
struct FusedScores {
  /// Per-subject scores before fusion (mean-vector form, or pooled for pool modes).
  Matrix base;
  Matrix scores;
  /// rows x cols, 1 where the increment was applied.
  std::vector<std::uint8_t> mask;
  /// Per-row amount added to the masked columns (0 for modes without one).
  std::vector<double> increment;
  /// Per-row k-NN score where the mode computes one, else NaN.
  std::vector<double> knn;

  std::size_t rows() const noexcept { return scores.rows(); }
  std::size_t cols() const noexcept { return scores.cols(); }
  bool incremented(std::size_t r, std::size_t c) const noexcept { return mask[r * scores.cols() + c] != 0; }
};

/// Fuses precomputed matrices: base is probes x subjects, media is
/// probes x media with owners mapping media columns to subjects.
FusedScores fuse_matrices(const Matrix& base, const Matrix& media, std::span<const std::size_t> owners,
                          const FusionMode& mode, const FusionOptions& options = {});

/// Scores every probe against the gallery under the given mode. Row errors
/// are rethrown with the probe id in the message.
FusedScores score_matrix(const ProbeSet& probes, const Gallery& gallery, const FusionMode& mode,
                         const FusionOptions& options = {});

}  // namespace openset
