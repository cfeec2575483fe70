#include "openset/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "openset/error.hpp"
#include "openset/parallel.hpp"

namespace openset {

namespace {

void require_finite(std::span<const double> row) {
  for (double x : row) {
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFinite, "score row has a non-finite entry");
  }
}

std::size_t effective_k(std::size_t count, int k, bool clamp_k) {
  if (k < 1) throw Error(ErrorCode::InvalidConfig, "k must be >= 1, got " + std::to_string(k));
  if (count == 0) throw Error(ErrorCode::KTooLarge, "no candidates for k-NN");
  if (static_cast<std::size_t>(k) > count) {
    if (!clamp_k) {
      throw Error(ErrorCode::KTooLarge, "k = " + std::to_string(k) + " exceeds " + std::to_string(count) + " media");
    }
    return count;
  }
  return static_cast<std::size_t>(k);
}

double row_max(std::span<const double> row) { return *std::max_element(row.begin(), row.end()); }

}  // namespace

void FusionMode::validate() const {
  if (k < 1) throw Error(ErrorCode::InvalidConfig, "k must be >= 1, got " + std::to_string(k));
  if (kind == FusionKind::AddConst && !std::isfinite(constant)) {
    throw Error(ErrorCode::InvalidConfig, "additive constant must be finite");
  }
}

std::string FusionMode::name() const {
  switch (kind) {
    case FusionKind::LocalScore: return "local";
    case FusionKind::NaiveMean: return "naive";
    case FusionKind::None: return "none";
    case FusionKind::MaxPool: return "max";
    case FusionKind::MinPool: return "min";
    case FusionKind::MeanPool: return "mean";
    case FusionKind::AddConst: return "addconst";
    case FusionKind::DoubleMax: return "double";
    case FusionKind::AvgTopK: return "avgtopk";
  }
  return "unknown";
}

FusionKind parse_fusion_kind(const std::string& name) {
  static const std::pair<const char*, FusionKind> table[] = {
      {"local", FusionKind::LocalScore}, {"naive", FusionKind::NaiveMean}, {"none", FusionKind::None},
      {"max", FusionKind::MaxPool},      {"min", FusionKind::MinPool},     {"mean", FusionKind::MeanPool},
      {"addconst", FusionKind::AddConst}, {"double", FusionKind::DoubleMax}, {"avgtopk", FusionKind::AvgTopK},
  };
  for (const auto& [key, kind] : table) {
    if (name == key) return kind;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown fusion mode '" + name + "'");
}

double knn_score(std::span<const double> media_row, int k, bool clamp_k) {
  const std::size_t kk = effective_k(media_row.size(), k, clamp_k);
  std::vector<double> tmp(media_row.begin(), media_row.end());
  auto nth = tmp.begin() + static_cast<std::ptrdiff_t>(kk - 1);
  std::nth_element(tmp.begin(), nth, tmp.end(), std::greater<>());
  return *nth;
}

double mean_top_k(std::span<const double> media_row, int k, bool clamp_k) {
  const std::size_t kk = effective_k(media_row.size(), k, clamp_k);
  std::vector<double> tmp(media_row.begin(), media_row.end());
  std::partial_sort(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(kk), tmp.end(), std::greater<>());
  double sum = 0.0;
  for (std::size_t i = 0; i < kk; ++i) sum += tmp[i];
  return sum / static_cast<double>(kk);
}

FusedRow local_score(std::span<const double> subject_row, double knn) {
  if (subject_row.empty()) throw Error(ErrorCode::InvalidConfig, "empty score row");
  require_finite(subject_row);
  if (!std::isfinite(knn)) throw Error(ErrorCode::NonFinite, "k-NN score is not finite");
  FusedRow out;
  out.scores.assign(subject_row.begin(), subject_row.end());
  out.incremented.assign(subject_row.size(), 0);
  out.increment = knn;
  const double top = row_max(subject_row);
  for (std::size_t j = 0; j < subject_row.size(); ++j) {
    if (subject_row[j] == top) {
      out.scores[j] += knn;
      out.incremented[j] = 1;
    }
  }
  return out;
}

std::vector<double> naive_mean_fusion(std::span<const double> subject_row, double knn) {
  std::vector<double> out(subject_row.size());
  std::transform(subject_row.begin(), subject_row.end(), out.begin(), [knn](double s) { return (s + knn) / 2.0; });
  return out;
}

std::vector<double> pool_scores(std::span<const double> media_row, std::span<const std::size_t> owners,
                                std::size_t subject_count, FusionKind mode) {
  if (media_row.size() != owners.size()) {
    throw Error(ErrorCode::DimensionMismatch, "media row has " + std::to_string(media_row.size()) +
                                                  " columns, gallery has " + std::to_string(owners.size()) + " media");
  }
  std::vector<double> acc(subject_count, 0.0);
  std::vector<std::size_t> count(subject_count, 0);
  for (std::size_t c = 0; c < media_row.size(); ++c) {
    const std::size_t s = owners[c];
    const double v = media_row[c];
    if (count[s] == 0) {
      acc[s] = v;
    } else {
      switch (mode) {
        case FusionKind::MaxPool: acc[s] = std::max(acc[s], v); break;
        case FusionKind::MinPool: acc[s] = std::min(acc[s], v); break;
        case FusionKind::MeanPool: acc[s] += v; break;
        default: throw Error(ErrorCode::InvalidConfig, "pool_scores needs a pooling mode");
      }
    }
    ++count[s];
  }
  if (mode == FusionKind::MeanPool) {
    for (std::size_t s = 0; s < subject_count; ++s) acc[s] /= static_cast<double>(count[s]);
  } else if (mode != FusionKind::MaxPool && mode != FusionKind::MinPool) {
    throw Error(ErrorCode::InvalidConfig, "pool_scores needs a pooling mode");
  }
  return acc;
}

std::vector<double> pool_scores(std::span<const double> media_row, const Gallery& gallery, FusionKind mode) {
  const auto owners = gallery.media_owners();
  return pool_scores(media_row, owners, gallery.subject_count(), mode);
}

FusedRow variant_fusion(std::span<const double> subject_row, std::span<const double> media_row,
                        const FusionMode& mode, bool clamp_k) {
  switch (mode.kind) {
    case FusionKind::AddConst: return local_score(subject_row, mode.constant);
    case FusionKind::AvgTopK: return local_score(subject_row, mean_top_k(media_row, mode.k, clamp_k));
    case FusionKind::DoubleMax: {
      if (subject_row.empty()) throw Error(ErrorCode::InvalidConfig, "empty score row");
      require_finite(subject_row);
      // v -> 2v is an increment of v on the max columns.
      return local_score(subject_row, row_max(subject_row));
    }
    default: throw Error(ErrorCode::InvalidConfig, "variant_fusion needs addconst, double or avgtopk");
  }
}

double one_to_one_score(const Embedding& probe, std::span<const Embedding> subject_media, int k, bool clamp_k) {
  if (subject_media.empty()) throw Error(ErrorCode::InvalidConfig, "claimed subject has no media");
  std::vector<double> cos;
  cos.reserve(subject_media.size());
  for (const auto& e : subject_media) cos.push_back(cosine(probe.vector, e.vector));
  const double mean = std::accumulate(cos.begin(), cos.end(), 0.0) / static_cast<double>(cos.size());
  return mean + knn_score(cos, k, clamp_k);
}

namespace {

// Fuses one row. base_row is the per-subject row before fusion.
void fuse_row(std::span<const double> base_row, std::span<const double> media_row,
              std::span<const std::size_t> owners, const FusionMode& mode, const FusionOptions& options,
              std::span<double> out, std::span<std::uint8_t> mask, double& increment, double& knn_out) {
  knn_out = std::numeric_limits<double>::quiet_NaN();
  increment = 0.0;
  std::fill(mask.begin(), mask.end(), 0);

  auto knn_for = [&](std::size_t subject_col) {
    if (!options.per_subject_knn) return knn_score(media_row, mode.k, options.clamp_k);
    std::vector<double> own;
    for (std::size_t c = 0; c < owners.size(); ++c) {
      if (owners[c] == subject_col) own.push_back(media_row[c]);
    }
    return knn_score(own, mode.k, options.clamp_k);
  };

  switch (mode.kind) {
    case FusionKind::None:
    case FusionKind::MaxPool:
    case FusionKind::MinPool:
    case FusionKind::MeanPool:
      require_finite(base_row);
      std::copy(base_row.begin(), base_row.end(), out.begin());
      return;
    case FusionKind::NaiveMean: {
      require_finite(base_row);
      const std::size_t top =
          static_cast<std::size_t>(std::max_element(base_row.begin(), base_row.end()) - base_row.begin());
      knn_out = knn_for(top);
      const auto fused = naive_mean_fusion(base_row, knn_out);
      std::copy(fused.begin(), fused.end(), out.begin());
      std::fill(mask.begin(), mask.end(), 1);
      increment = knn_out;
      return;
    }
    case FusionKind::LocalScore: {
      require_finite(base_row);
      const double top = row_max(base_row);
      std::copy(base_row.begin(), base_row.end(), out.begin());
      bool first = true;
      for (std::size_t j = 0; j < base_row.size(); ++j) {
        if (base_row[j] != top) continue;
        const double knn = (first || options.per_subject_knn) ? knn_for(j) : knn_out;
        if (first) {
          knn_out = knn;
          increment = knn;
          first = false;
        }
        out[j] += knn;
        mask[j] = 1;
      }
      return;
    }
    case FusionKind::AddConst:
    case FusionKind::DoubleMax:
    case FusionKind::AvgTopK: {
      const FusedRow row = variant_fusion(base_row, media_row, mode, options.clamp_k);
      std::copy(row.scores.begin(), row.scores.end(), out.begin());
      std::copy(row.incremented.begin(), row.incremented.end(), mask.begin());
      increment = row.increment;
      if (mode.kind == FusionKind::AvgTopK) knn_out = row.increment;
      return;
    }
  }
}

bool is_pool(FusionKind kind) {
  return kind == FusionKind::MaxPool || kind == FusionKind::MinPool || kind == FusionKind::MeanPool;
}

bool needs_media(FusionKind kind) { return is_pool(kind) || kind == FusionKind::LocalScore ||
                                           kind == FusionKind::NaiveMean || kind == FusionKind::AvgTopK; }

FusedScores allocate(const Matrix& base) {
  FusedScores f;
  f.base = base;
  f.scores = Matrix(base.rows(), base.cols());
  f.mask.assign(base.rows() * base.cols(), 0);
  f.increment.assign(base.rows(), 0.0);
  f.knn.assign(base.rows(), std::numeric_limits<double>::quiet_NaN());
  return f;
}

void fuse_all(FusedScores& f, const Matrix& media, std::span<const std::size_t> owners, const FusionMode& mode,
              const FusionOptions& options, const std::function<std::string(std::size_t)>& row_name) {
  const std::size_t cols = f.base.cols();
  parallel_for(f.base.rows(), [&](std::size_t r) {
    try {
      std::span<const double> media_row;
      if (media.rows() != 0) media_row = media.row(r);
      fuse_row(f.base.row(r), media_row, owners, mode, options, f.scores.row(r),
               std::span<std::uint8_t>(f.mask.data() + r * cols, cols), f.increment[r], f.knn[r]);
    } catch (const Error& e) {
      throw Error(e.code(), row_name(r) + ": " + e.detail());
    }
  });
}

}  // namespace

FusedScores fuse_matrices(const Matrix& base, const Matrix& media, std::span<const std::size_t> owners,
                          const FusionMode& mode, const FusionOptions& options) {
  mode.validate();
  if (needs_media(mode.kind) && media.rows() != base.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "per-media matrix has " + std::to_string(media.rows()) +
                                                  " rows, per-subject matrix has " + std::to_string(base.rows()));
  }
  if (media.rows() != 0 && media.cols() != owners.size()) {
    throw Error(ErrorCode::DimensionMismatch, "media owner map does not match per-media columns");
  }
  Matrix start = base;
  if (is_pool(mode.kind)) {
    start = Matrix(media.rows(), base.cols());
    for (std::size_t r = 0; r < media.rows(); ++r) {
      const auto pooled = pool_scores(media.row(r), owners, base.cols(), mode.kind);
      std::copy(pooled.begin(), pooled.end(), start.row(r).begin());
    }
  }
  FusedScores f = allocate(start);
  fuse_all(f, media, owners, mode, options, [](std::size_t r) { return "row " + std::to_string(r); });
  return f;
}

FusedScores score_matrix(const ProbeSet& probes, const Gallery& gallery, const FusionMode& mode,
                         const FusionOptions& options) {
  mode.validate();
  if (!probes.empty() && !gallery.empty() && probes.dimension() != gallery.dimension()) {
    throw Error(ErrorCode::DimensionMismatch, "probe dimension " + std::to_string(probes.dimension()) +
                                                  " vs gallery dimension " + std::to_string(gallery.dimension()));
  }
  const auto owners = gallery.media_owners();
  Matrix media;
  if (needs_media(mode.kind)) media = per_media_matrix(probes, gallery);

  Matrix base;
  if (is_pool(mode.kind)) {
    base = Matrix(probes.size(), gallery.subject_count());
    for (std::size_t r = 0; r < probes.size(); ++r) {
      const auto pooled = pool_scores(media.row(r), owners, gallery.subject_count(), mode.kind);
      std::copy(pooled.begin(), pooled.end(), base.row(r).begin());
    }
  } else {
    base = per_subject_matrix(probes, gallery, options.center);
  }
  FusedScores f = allocate(base);
  fuse_all(f, media, owners, mode, options,
           [&](std::size_t r) { return "probe '" + probes[r].probe_id + "'"; });
  return f;
}

}  // namespace openset
