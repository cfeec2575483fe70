#pragma once

#include <vector>

#include "openset/embedding.hpp"

namespace openset {

/// How a subject's media are collapsed into the single vector used for
/// per-subject scoring.
enum class CenterMode {
  /// Inner product with the plain mean of the unit media vectors.
  Mean,
  /// The mean is re-normalized to unit length first.
  RenormalizedMean,
};

/// One score per gallery subject: <q, (1/m_i) sum_j g_i^j> with unit q and g.
std::vector<double> per_subject_scores(const Embedding& probe, const Gallery& gallery,
                                       CenterMode center = CenterMode::Mean);

/// One cosine per gallery medium, in canonical (subject, media) order.
std::vector<double> per_media_scores(const Embedding& probe, const Gallery& gallery);

/// Average of the per-media cosines of each subject.
std::vector<double> mean_sample_scores(const Embedding& probe, const Gallery& gallery);

/// Precomputed subject centers, reused across probes.
class SubjectCenters {
 public:
  SubjectCenters(const Gallery& gallery, CenterMode center);
  std::vector<double> scores(const Embedding& probe) const;

 private:
  std::vector<std::vector<double>> centers_;
  std::size_t dimension_;
};

/// Probes x subjects matrix of per_subject_scores rows.
Matrix per_subject_matrix(const ProbeSet& probes, const Gallery& gallery, CenterMode center = CenterMode::Mean);

/// Probes x media matrix of per_media_scores rows.
Matrix per_media_matrix(const ProbeSet& probes, const Gallery& gallery);

}  // namespace openset
