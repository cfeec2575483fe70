#include "openset/scores.hpp"

#include <algorithm>
#include <cmath>

#include "openset/error.hpp"
#include "openset/parallel.hpp"

namespace openset {

namespace {

void check_probe(const Embedding& probe, const Gallery& gallery) {
  if (!gallery.empty() && probe.dimension() != gallery.dimension()) {
    throw Error(ErrorCode::DimensionMismatch, "probe dimension " + std::to_string(probe.dimension()) +
                                                  " vs gallery dimension " + std::to_string(gallery.dimension()));
  }
}

std::vector<double> subject_center(const Subject& s, CenterMode mode) {
  std::vector<double> c(s.media.front().vector.size(), 0.0);
  for (const auto& e : s.media) {
    for (std::size_t d = 0; d < c.size(); ++d) c[d] += e.vector[d];
  }
  const double inv = 1.0 / static_cast<double>(s.media.size());
  for (double& x : c) x *= inv;
  if (mode == CenterMode::RenormalizedMean) c = normalize(c);
  return c;
}

}  // namespace

SubjectCenters::SubjectCenters(const Gallery& gallery, CenterMode center) : dimension_(gallery.dimension()) {
  centers_.reserve(gallery.subject_count());
  for (const auto& s : gallery.subjects()) centers_.push_back(subject_center(s, center));
}

std::vector<double> SubjectCenters::scores(const Embedding& probe) const {
  if (!centers_.empty() && probe.dimension() != dimension_) {
    throw Error(ErrorCode::DimensionMismatch, "probe dimension " + std::to_string(probe.dimension()) +
                                                  " vs gallery dimension " + std::to_string(dimension_));
  }
  std::vector<double> out;
  out.reserve(centers_.size());
  // The plain mean has norm <= 1, so the inner product already lies in [-1, 1]
  // up to rounding.
  for (const auto& c : centers_) out.push_back(std::clamp(dot(probe.vector, c), -1.0, 1.0));
  return out;
}

std::vector<double> per_subject_scores(const Embedding& probe, const Gallery& gallery, CenterMode center) {
  check_probe(probe, gallery);
  return SubjectCenters(gallery, center).scores(probe);
}

std::vector<double> per_media_scores(const Embedding& probe, const Gallery& gallery) {
  check_probe(probe, gallery);
  std::vector<double> out;
  out.reserve(gallery.total_media());
  for (const auto& s : gallery.subjects()) {
    for (const auto& e : s.media) out.push_back(cosine(probe.vector, e.vector));
  }
  return out;
}

std::vector<double> mean_sample_scores(const Embedding& probe, const Gallery& gallery) {
  check_probe(probe, gallery);
  std::vector<double> out;
  out.reserve(gallery.subject_count());
  for (const auto& s : gallery.subjects()) {
    double sum = 0.0;
    for (const auto& e : s.media) sum += cosine(probe.vector, e.vector);
    out.push_back(sum / static_cast<double>(s.media.size()));
  }
  return out;
}

Matrix per_subject_matrix(const ProbeSet& probes, const Gallery& gallery, CenterMode center) {
  const SubjectCenters centers(gallery, center);
  Matrix m(probes.size(), gallery.subject_count());
  parallel_for(probes.size(), [&](std::size_t p) {
    const auto row = centers.scores(probes[p].embedding);
    std::copy(row.begin(), row.end(), m.row(p).begin());
  });
  return m;
}

Matrix per_media_matrix(const ProbeSet& probes, const Gallery& gallery) {
  Matrix m(probes.size(), gallery.total_media());
  parallel_for(probes.size(), [&](std::size_t p) {
    const auto row = per_media_scores(probes[p].embedding, gallery);
    std::copy(row.begin(), row.end(), m.row(p).begin());
  });
  return m;
}

}  // namespace openset
