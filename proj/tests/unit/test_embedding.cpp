#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "openset/embedding.hpp"
#include "openset/error.hpp"
#include "openset/rng.hpp"

using namespace openset;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

}  // namespace

TEST(Normalize, UnitNormAndDirection) {
  Rng rng(1);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> v(1 + rng.below(64));
    for (double& x : v) x = rng.normal() * std::pow(10.0, rng.uniform() * 8 - 4);
    const auto u = normalize(v);
    double norm = 0, scale = 0;
    for (std::size_t i = 0; i < v.size(); ++i) norm += u[i] * u[i];
    EXPECT_NEAR(std::sqrt(norm), 1.0, 1e-12);
    for (double x : v) scale += x * x;
    scale = std::sqrt(scale);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(u[i] * scale, v[i], 1e-12 * scale);
  }
}

TEST(Normalize, Errors) {
  EXPECT_EQ(code_of([] { normalize(std::vector<double>{0, 0, 0}); }), ErrorCode::ZeroNorm);
  EXPECT_EQ(code_of([] { normalize(std::vector<double>{1e-13, 0}); }), ErrorCode::ZeroNorm);
  EXPECT_EQ(code_of([] { normalize(std::vector<double>{1, std::nan("")}); }), ErrorCode::NonFinite);
  EXPECT_EQ(code_of([] { normalize(std::vector<double>{std::numeric_limits<double>::infinity()}); }),
            ErrorCode::NonFinite);
}

TEST(Cosine, ClampedAndChecked) {
  const std::vector<double> a{1, 0}, b{0, 1};
  EXPECT_EQ(cosine(a, a), 1.0);
  EXPECT_EQ(cosine(a, b), 0.0);
  const std::vector<double> over{1.0000000000000002, 0};
  EXPECT_EQ(cosine(over, a), 1.0);
  EXPECT_EQ(code_of([&] { cosine(a, std::vector<double>{1, 0, 0}); }), ErrorCode::DimensionMismatch);
}

TEST(GalleryTest, CanonicalOrderAndOwners) {
  Gallery g;
  const double x[] = {1, 0}, y[] = {0, 1};
  g.add_media(Embedding::from_raw("B", "b1", x));
  g.add_media(Embedding::from_raw("A", "a1", y));
  g.add_media(Embedding::from_raw("B", "b2", y));
  EXPECT_EQ(g.subject_count(), 2u);
  EXPECT_EQ(g.subject(0).id, "B");
  EXPECT_EQ(g.total_media(), 3u);
  EXPECT_EQ(g.media_owners(), (std::vector<std::size_t>{0, 0, 1}));
  EXPECT_EQ(*g.find("A"), 1u);
  EXPECT_FALSE(g.find("C"));
}

TEST(GalleryTest, Errors) {
  Gallery g;
  const double x[] = {1, 0};
  const double z[] = {1, 0, 0};
  g.add_media(Embedding::from_raw("A", "a1", x));
  EXPECT_EQ(code_of([&] { g.add_media(Embedding::from_raw("A", "a1", x)); }), ErrorCode::DuplicateMediaId);
  EXPECT_EQ(code_of([&] { g.add_media(Embedding::from_raw("B", "b1", z)); }), ErrorCode::DimensionMismatch);
  EXPECT_EQ(code_of([&] { g.add_subject(Subject{"A", {Embedding::from_raw("A", "a9", x)}}); }),
            ErrorCode::DuplicateSubject);
}

TEST(GalleryTest, WithoutAndRestricted) {
  Gallery g;
  const double x[] = {1, 0};
  for (const char* s : {"A", "B", "C"}) g.add_media(Embedding::from_raw(s, std::string(s) + "1", x));
  const Gallery w = g.without({"B"});
  ASSERT_EQ(w.subject_count(), 2u);
  EXPECT_EQ(w.subject(0).id, "A");
  EXPECT_EQ(w.subject(1).id, "C");
  EXPECT_EQ(g.restricted_to(2).subject(0).id, "C");
}

TEST(ProbeSetTest, NonMatedRelabelAndValidation) {
  Gallery g;
  const double x[] = {1, 0};
  g.add_media(Embedding::from_raw("A", "a1", x));
  ProbeSet ps;
  ps.add(Probe{"p1", Embedding::from_raw("A", "p1", x), "A"});
  ps.add(Probe{"p2", Embedding::from_raw("Z", "p2", x), std::nullopt});
  EXPECT_NO_THROW(ps.validate_against(g));
  EXPECT_EQ(code_of([&] { ps.add(Probe{"p1", Embedding::from_raw("A", "p1", x), "A"}); }),
            ErrorCode::DuplicateProbeId);
  const ProbeSet relabelled = ps.with_nonmated({"A"});
  EXPECT_FALSE(relabelled[0].mated());
  ProbeSet bad;
  bad.add(Probe{"q", Embedding::from_raw("Q", "q", x), "Q"});
  EXPECT_EQ(code_of([&] { bad.validate_against(g); }), ErrorCode::UnknownTruthSubject);
}
