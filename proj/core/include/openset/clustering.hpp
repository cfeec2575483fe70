#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "openset/embedding.hpp"

namespace openset {

struct ClusterConfig {
  /// Prototypes per subject; nullopt keeps every medium (C = infinity).
  std::optional<std::size_t> clusters_per_subject;
  int max_iterations = 100;
  /// Stop once the summed centroid movement falls below this.
  double convergence_tol = 1e-6;
  std::uint64_t seed = 0;

  static ClusterConfig unlimited() { return {}; }
  static ClusterConfig with(std::size_t c, std::uint64_t seed = 0) {
    ClusterConfig cfg;
    cfg.clusters_per_subject = c;
    cfg.seed = seed;
    return cfg;
  }
  /// Throws InvalidConfig on C = 0 or max_iterations < 1.
  void validate() const;
};

struct KMeansResult {
  /// Arithmetic means of the assigned points (not re-normalized).
  std::vector<std::vector<double>> centroids;
  /// Point index -> centroid index.
  std::vector<std::size_t> assignments;
  int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding from a seeded stream. When
/// C >= points.size() every point is its own centroid, in input order. An
/// emptied cluster takes the point farthest from its centroid.
KMeansResult kmeans(const std::vector<std::vector<double>>& points, std::size_t clusters,
                    const ClusterConfig& config);

struct SubjectProvenance {
  std::size_t original_media = 0;
  std::vector<std::size_t> cluster_sizes;
  std::vector<std::vector<double>> raw_means;
};

struct CompactGallery {
  /// Unit-normalized prototypes, media ids `cluster<k>`. Subjects that were
  /// not reduced (C >= m_i) keep their original media verbatim.
  Gallery gallery;
  std::vector<SubjectProvenance> provenance;
  std::size_t original_media = 0;

  /// Compact media count / original media count.
  double compression_ratio() const {
    return original_media == 0 ? 1.0
                               : static_cast<double>(gallery.total_media()) / static_cast<double>(original_media);
  }
};

/// Clusters each subject's media independently. Per-subject seeds are derived
/// from (config.seed, subject id).
CompactGallery cluster_gallery(const Gallery& gallery, const ClusterConfig& config);

}  // namespace openset
