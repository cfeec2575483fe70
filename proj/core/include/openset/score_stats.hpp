#pragma once

#include <cstddef>

namespace openset {

/// Gaussian summary of the four score populations plus the counts used by
/// the fusion-benefit conditions.
struct ScoreStats {
  double mu1 = 0.0, sigma1 = 0.0;  // genuine per-subject scores
  double mu2 = 0.0, sigma2 = 0.0;  // imposter scores
  double mu3 = 0.0, sigma3 = 0.0;  // k-NN scores of mated probes
  double mu4 = 0.0, sigma4 = 0.0;  // k-NN scores of non-mated probes
  std::size_t n1 = 0;  // mated probes
  std::size_t n2 = 0;  // non-mated probes
  std::size_t n3 = 0;  // imposter scores
  std::size_t m = 0;   // gallery subjects; carried along, not used by the conditions
  std::size_t r1 = 0;  // tolerated non-mated maxima above threshold
  std::size_t r2 = 0;  // tolerated imposter scores above threshold

  friend bool operator==(const ScoreStats&, const ScoreStats&) = default;
};

}  // namespace openset
