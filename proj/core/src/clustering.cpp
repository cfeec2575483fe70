#include "openset/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "openset/error.hpp"
#include "openset/parallel.hpp"
#include "openset/rng.hpp"

namespace openset {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::vector<std::vector<double>> seed_centroids(const std::vector<std::vector<double>>& points, std::size_t k,
                                                Rng& rng) {
  const std::size_t n = points.size();
  std::vector<std::vector<double>> centroids;
  centroids.reserve(k);
  centroids.push_back(points[rng.below(n)]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(points[i], centroids[0]);

  while (centroids.size() < k) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double run = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        run += d2[i];
        if (run > target) {
          pick = i;
          break;
        }
      }
    } else {
      // All remaining points coincide with a centroid.
      pick = rng.below(n);
    }
    centroids.push_back(points[pick]);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(points[i], centroids.back()));
  }
  return centroids;
}

}  // namespace

void ClusterConfig::validate() const {
  if (clusters_per_subject && *clusters_per_subject == 0) {
    throw Error(ErrorCode::InvalidConfig, "clusters per subject must be >= 1");
  }
  if (max_iterations < 1) throw Error(ErrorCode::InvalidConfig, "max_iterations must be >= 1");
  if (!(convergence_tol >= 0.0)) throw Error(ErrorCode::InvalidConfig, "convergence_tol must be >= 0");
}

KMeansResult kmeans(const std::vector<std::vector<double>>& points, std::size_t clusters,
                    const ClusterConfig& config) {
  if (points.empty()) throw Error(ErrorCode::InvalidConfig, "k-means needs at least one point");
  if (clusters == 0) throw Error(ErrorCode::InvalidConfig, "k-means needs C >= 1");
  const std::size_t n = points.size();
  const std::size_t dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) throw Error(ErrorCode::DimensionMismatch, "k-means points differ in dimension");
  }

  KMeansResult result;
  if (clusters >= n) {
    result.centroids = points;
    result.assignments.resize(n);
    for (std::size_t i = 0; i < n; ++i) result.assignments[i] = i;
    return result;
  }

  Rng rng(config.seed);
  auto centroids = seed_centroids(points, clusters, rng);
  std::vector<std::size_t> assign(n, 0);

  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    result.iterations = iter;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < clusters; ++c) {
        const double d = sq_dist(points[i], centroids[c]);
        if (d < best) {
          best = d;
          assign[i] = c;
        }
      }
    }

    // Refill empty clusters with the point farthest from its centroid.
    std::vector<std::size_t> counts(clusters, 0);
    for (std::size_t a : assign) ++counts[a];
    for (std::size_t c = 0; c < clusters; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[assign[i]] <= 1) continue;
        const double d = sq_dist(points[i], centroids[assign[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      --counts[assign[far]];
      assign[far] = c;
      counts[c] = 1;
    }

    std::vector<std::vector<double>> next(clusters, std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < dim; ++d) next[assign[i]][d] += points[i][d];
    }
    double movement = 0.0;
    for (std::size_t c = 0; c < clusters; ++c) {
      for (double& x : next[c]) x /= static_cast<double>(counts[c]);
      movement += std::sqrt(sq_dist(next[c], centroids[c]));
    }
    centroids = std::move(next);
    if (movement <= config.convergence_tol) break;
  }

  // Final assignment must agree with the returned centroids, and each
  // centroid must be the exact mean of its members.
  std::vector<std::size_t> counts(clusters, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < clusters; ++c) {
      const double d = sq_dist(points[i], centroids[c]);
      if (d < best) {
        best = d;
        assign[i] = c;
      }
    }
    ++counts[assign[i]];
  }
  if (std::find(counts.begin(), counts.end(), std::size_t{0}) == counts.end()) {
    std::vector<std::vector<double>> means(clusters, std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < dim; ++d) means[assign[i]][d] += points[i][d];
    }
    for (std::size_t c = 0; c < clusters; ++c) {
      for (double& x : means[c]) x /= static_cast<double>(counts[c]);
    }
    centroids = std::move(means);
  }

  result.centroids = std::move(centroids);
  result.assignments = std::move(assign);
  return result;
}

CompactGallery cluster_gallery(const Gallery& gallery, const ClusterConfig& config) {
  config.validate();
  CompactGallery out;
  out.original_media = gallery.total_media();
  const auto subjects = gallery.subjects();
  std::vector<Subject> compact(subjects.size());
  out.provenance.resize(subjects.size());

  parallel_for(subjects.size(), [&](std::size_t i) {
    const Subject& s = subjects[i];
    SubjectProvenance& prov = out.provenance[i];
    prov.original_media = s.media.size();
    if (!config.clusters_per_subject || *config.clusters_per_subject >= s.media.size()) {
      compact[i] = s;
      prov.cluster_sizes.assign(s.media.size(), 1);
      for (const auto& e : s.media) prov.raw_means.push_back(e.vector);
      return;
    }
    std::vector<std::vector<double>> points;
    points.reserve(s.media.size());
    for (const auto& e : s.media) points.push_back(e.vector);
    ClusterConfig sub = config;
    sub.seed = derive_seed(config.seed, hash_string(s.id));
    const auto km = kmeans(points, *config.clusters_per_subject, sub);

    compact[i].id = s.id;
    prov.cluster_sizes.assign(km.centroids.size(), 0);
    for (std::size_t a : km.assignments) ++prov.cluster_sizes[a];
    for (std::size_t c = 0; c < km.centroids.size(); ++c) {
      compact[i].media.push_back(Embedding{s.id, "cluster" + std::to_string(c), normalize(km.centroids[c])});
    }
    prov.raw_means = km.centroids;
  });

  for (auto& s : compact) out.gallery.add_subject(std::move(s));
  return out;
}

}  // namespace openset
