#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "openset/error.hpp"
#include "openset/fusion.hpp"
#include "openset/metrics.hpp"
#include "openset/rng.hpp"
#include "openset/scores.hpp"
#include "toy_example.hpp"

using namespace openset;

namespace {

Gallery small_gallery() {
  Gallery g;
  const double a1[] = {1, 0, 0}, a2[] = {0.8, 0.6, 0}, b1[] = {0, 1, 0}, b2[] = {0, 0.6, 0.8};
  g.add_media(Embedding::from_raw("A", "a1", a1));
  g.add_media(Embedding::from_raw("A", "a2", a2));
  g.add_media(Embedding::from_raw("B", "b1", b1));
  g.add_media(Embedding::from_raw("B", "b2", b2));
  return g;
}

Probe probe(const std::string& id, std::vector<double> v, std::optional<std::string> truth) {
  return Probe{id, Embedding::from_raw("x", id, v), std::move(truth)};
}

}  // namespace

TEST(Toy, LocalScoreLiftsEveryGenuineAboveNonMatedMax) {
  const FusedScores f = fuse_matrices(toy::per_subject(), toy::per_media(), toy::owners(), FusionMode::local_score(1));
  const double nonmated_max = *std::max_element(f.scores.row(3).begin(), f.scores.row(3).end());
  EXPECT_EQ(nonmated_max, 0.8 + 0.6);
  EXPECT_NEAR(nonmated_max, 1.4, 1e-12);
  const auto truth = toy::truth();
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_GT(f.scores(r, *truth[r]), nonmated_max) << "probe " << r;
  }
  EXPECT_EQ(f.scores(0, 0), 0.7 + 0.95);
  EXPECT_EQ(f.knn[0], 0.95);
}

TEST(Toy, WithoutFusionOnlyOneGenuineBeatsNonMatedMax) {
  const Matrix s = toy::per_subject();
  const auto truth = toy::truth();
  const double nonmated_max = std::max(s(3, 0), s(3, 1));
  int above = 0;
  for (std::size_t r = 0; r < 3; ++r) above += s(r, *truth[r]) > nonmated_max;
  EXPECT_EQ(above, 1);
}

TEST(Toy, NaiveMeanCollidesWhereLocalScoreDoesNot) {
  const FusedScores naive =
      fuse_matrices(toy::per_subject(), toy::per_media(), toy::owners(), FusionMode::naive_mean(1));
  EXPECT_EQ(naive.scores(2, 0), (0.70 + 0.85) / 2);
  EXPECT_EQ(naive.scores(1, 1), (0.90 + 0.65) / 2);
  // In hundredths the two means are identical (70 + 85 == 90 + 65). In binary
  // 0.70 + 0.85 is a rounding tie and lands one ulp below 0.90 + 0.65.
  static_assert(70 + 85 == 90 + 65);
  EXPECT_LE(std::fabs(naive.scores(2, 0) - naive.scores(1, 1)), std::numeric_limits<double>::epsilon() * 0.775);
  EXPECT_NEAR(naive.scores(2, 0), 0.775, 1e-15);

  const FusedScores local =
      fuse_matrices(toy::per_subject(), toy::per_media(), toy::owners(), FusionMode::local_score(1));
  EXPECT_EQ(local.scores(2, 0), 0.70);
  EXPECT_FALSE(local.incremented(2, 0));
  EXPECT_TRUE(local.incremented(2, 1));
}

TEST(Knn, KthLargest) {
  const std::vector<double> row{0.3, 0.9, 0.1, 0.7, 0.9};
  EXPECT_EQ(knn_score(row, 1), 0.9);
  EXPECT_EQ(knn_score(row, 2), 0.9);
  EXPECT_EQ(knn_score(row, 3), 0.7);
  EXPECT_EQ(knn_score(row, 5), 0.1);
}

TEST(Knn, TooLargeUnlessClamped) {
  const std::vector<double> row{0.3, 0.9};
  try {
    knn_score(row, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::KTooLarge);
  }
  EXPECT_EQ(knn_score(row, 3, true), 0.3);
}

TEST(Knn, NonPositiveKRejected) {
  const std::vector<double> row{0.3};
  EXPECT_THROW(knn_score(row, 0), Error);
  EXPECT_THROW(FusionMode::local_score(0).validate(), Error);
}

TEST(LocalScore, TiesAllReceiveIncrement) {
  const std::vector<double> row{0.5, 0.8, 0.8, 0.1};
  const FusedRow f = local_score(row, 0.25);
  EXPECT_EQ(f.scores, (std::vector<double>{0.5, 1.05, 1.05, 0.1}));
  EXPECT_EQ(f.incremented, (std::vector<std::uint8_t>{0, 1, 1, 0}));
}

TEST(LocalScore, SingleSubjectGalleryAlwaysIncremented) {
  const std::vector<double> row{-0.2};
  EXPECT_EQ(local_score(row, 0.4).scores[0], -0.2 + 0.4);
}

TEST(LocalScore, RejectsNonFinite) {
  const std::vector<double> row{0.5, std::nan("")};
  EXPECT_THROW(local_score(row, 0.1), Error);
}

TEST(Variants, AddConstDoubleMaxAvgTopK) {
  const std::vector<double> subj{0.2, 0.6};
  const std::vector<double> media{0.9, 0.1, 0.7, 0.5};
  const FusedRow add = variant_fusion(subj, media, FusionMode::add_const(0.3));
  EXPECT_EQ(add.scores, (std::vector<double>{0.2, 0.6 + 0.3}));
  const FusedRow dbl = variant_fusion(subj, media, FusionMode::double_max());
  EXPECT_EQ(dbl.scores, (std::vector<double>{0.2, 1.2}));
  const FusedRow avg = variant_fusion(subj, media, FusionMode::avg_topk(2));
  EXPECT_DOUBLE_EQ(avg.scores[1], 0.6 + (0.9 + 0.7) / 2);
  EXPECT_EQ(avg.scores[0], 0.2);
}

TEST(Pooling, MaxMinMeanPerSubject) {
  const std::vector<double> media{0.9, 0.1, 0.7, 0.5, 0.3};
  const std::vector<std::size_t> owners{0, 0, 1, 1, 1};
  EXPECT_EQ(pool_scores(media, owners, 2, FusionKind::MaxPool), (std::vector<double>{0.9, 0.7}));
  EXPECT_EQ(pool_scores(media, owners, 2, FusionKind::MinPool), (std::vector<double>{0.1, 0.3}));
  const auto mean = pool_scores(media, owners, 2, FusionKind::MeanPool);
  EXPECT_DOUBLE_EQ(mean[0], 0.5);
  EXPECT_DOUBLE_EQ(mean[1], 0.5);
}

TEST(Pooling, MeanPoolEqualsPerSubjectScore) {
  const Gallery g = small_gallery();
  ProbeSet ps;
  ps.add(probe("p", {0.3, 0.5, 0.2}, "A"));
  const FusedScores pooled = score_matrix(ps, g, FusionMode::mean_pool());
  const FusedScores plain = score_matrix(ps, g, FusionMode::none());
  for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(pooled.scores(0, c), plain.scores(0, c), 1e-15);
}

TEST(OneToOne, MeanPlusKthNeighbourOfClaimedSubject) {
  const Gallery g = small_gallery();
  const Embedding q = Embedding::from_raw("x", "q", std::vector<double>{0.6, 0.8, 0});
  const auto& a = g.subject(0).media;
  const double c1 = q.vector[0];                       // cos with (1,0,0)
  const double c2 = 0.8 * q.vector[0] + 0.6 * q.vector[1];  // cos with (0.8,0.6,0)
  EXPECT_NEAR(one_to_one_score(q, a, 1), (c1 + c2) / 2 + std::max(c1, c2), 1e-15);
  EXPECT_NEAR(one_to_one_score(q, a, 2), (c1 + c2) / 2 + std::min(c1, c2), 1e-15);
  EXPECT_THROW(one_to_one_score(q, a, 3), Error);
}

TEST(ScoreMatrix, KnnIsGlobalOverAllMedia) {
  const Gallery g = small_gallery();
  ProbeSet ps;
  ps.add(probe("p", {0.9, 0.1, 0.4}, "A"));
  const auto media = per_media_scores(ps[0].embedding, g);
  const FusedScores f = score_matrix(ps, g, FusionMode::local_score(2));
  std::vector<double> sorted = media;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  EXPECT_EQ(f.knn[0], sorted[1]);
}

TEST(ScoreMatrix, PerSubjectKnnUsesOwnMedia) {
  const Gallery g = small_gallery();
  ProbeSet ps;
  ps.add(probe("p", {0.1, 0.9, 0.2}, "B"));
  FusionOptions opt;
  opt.per_subject_knn = true;
  const FusedScores f = score_matrix(ps, g, FusionMode::local_score(2), opt);
  const auto media = per_media_scores(ps[0].embedding, g);
  EXPECT_EQ(f.knn[0], std::min(media[2], media[3]));
}

TEST(ScoreMatrix, MatchesMatrixLevelFusion) {
  const Gallery g = small_gallery();
  ProbeSet ps;
  ps.add(probe("p1", {0.9, 0.1, 0.4}, "A"));
  ps.add(probe("p2", {0.1, 0.9, 0.3}, std::nullopt));
  const Matrix base = per_subject_matrix(ps, g);
  const Matrix media = per_media_matrix(ps, g);
  for (const FusionMode mode : {FusionMode::local_score(1), FusionMode::local_score(3), FusionMode::naive_mean(2),
                                FusionMode::none(), FusionMode::max_pool(), FusionMode::add_const(0.5),
                                FusionMode::double_max(), FusionMode::avg_topk(2)}) {
    const FusedScores a = score_matrix(ps, g, mode);
    const FusedScores b = fuse_matrices(base, media, g.media_owners(), mode);
    EXPECT_EQ(a.scores, b.scores) << mode.name();
    EXPECT_EQ(a.mask, b.mask) << mode.name();
  }
}

TEST(ScoreMatrix, KTooLargeNamesProbe) {
  const Gallery g = small_gallery();
  ProbeSet ps;
  ps.add(probe("p1", {0.9, 0.1, 0.4}, "A"));
  try {
    score_matrix(ps, g, FusionMode::local_score(5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::KTooLarge);
    EXPECT_NE(std::string(e.what()).find("p1"), std::string::npos);
  }
  EXPECT_NO_THROW(score_matrix(ps, g, FusionMode::local_score(5), FusionOptions{.clamp_k = true}));
}

TEST(FusionNames, RoundTrip) {
  for (auto kind : {FusionKind::LocalScore, FusionKind::NaiveMean, FusionKind::None, FusionKind::MaxPool,
                    FusionKind::MinPool, FusionKind::MeanPool, FusionKind::AddConst, FusionKind::DoubleMax,
                    FusionKind::AvgTopK}) {
    FusionMode m{kind, 1, 1.0};
    EXPECT_EQ(parse_fusion_kind(m.name()), kind);
  }
  EXPECT_THROW(parse_fusion_kind("bogus"), Error);
}

// Non-negative increments on the row maximum never change which column ranks
// first, the relative order of the other columns, or rank-k accuracy.
TEST(RankPreservation, RandomRowsAllK) {
  Rng rng(2024);
  std::size_t violations = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t cols = 2 + rng.below(12);
    std::vector<double> row(cols);
    for (double& v : row) v = std::round(rng.uniform() * 20) / 20;  // coarse grid makes ties common
    const double knn = rng.uniform() * 2;
    const FusedRow f = local_score(row, knn);
    const std::size_t truth = rng.below(cols);
    for (std::size_t k = 1; k <= cols; ++k) {
      const bool before = rank_of(row, truth) <= k;
      const bool after = rank_of(f.scores, truth) <= k;
      violations += before != after;
    }
    for (std::size_t i = 0; i < cols; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        if (row[i] > row[j] && !(f.scores[i] > f.scores[j])) ++violations;
      }
    }
  }
  EXPECT_EQ(violations, 0u);
}
