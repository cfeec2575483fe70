#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "openset/error.hpp"
#include "openset/feature_csv.hpp"
#include "openset/rng.hpp"

using namespace openset;

namespace {

struct Failure {
  ErrorCode code;
  std::string message;
};

template <typename Fn>
Failure failure(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return {e.code(), e.what()};
  }
  ADD_FAILURE() << "expected an error";
  return {ErrorCode::IoError, ""};
}

Gallery gallery_from(const std::string& text) {
  std::istringstream in(text);
  return read_gallery(in, "g.csv");
}

ProbeSet probes_from(const std::string& text) {
  std::istringstream in(text);
  return read_probes(in, "p.csv");
}

}  // namespace

TEST(FeatureCsv, ReadsAndNormalizes) {
  const Gallery g = gallery_from("subject_id,media_id,f0,f1\nA,a1,3,4\nA,a2,0,2\nB,b1,-1,0\n");
  ASSERT_EQ(g.subject_count(), 2u);
  EXPECT_EQ(g.total_media(), 3u);
  EXPECT_DOUBLE_EQ(g.subject(0).media[0].vector[0], 0.6);
  EXPECT_DOUBLE_EQ(g.subject(0).media[1].vector[1], 1.0);
}

TEST(FeatureCsv, ProbesWithTruth) {
  const ProbeSet p = probes_from("subject_id,media_id,f0,f1,truth\nA,p1,1,0,A\nX,p2,0,1,NONMATED\n");
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0].probe_id, "p1");
  EXPECT_EQ(*p[0].truth, "A");
  EXPECT_FALSE(p[1].truth);
}

TEST(FeatureCsv, ToleratesCrLf) {
  const Gallery g = gallery_from("subject_id,media_id,f0,f1\r\nA,a1,3,4\r\n");
  EXPECT_EQ(g.total_media(), 1u);
}

TEST(FeatureCsv, RoundTripIsBitExact) {
  Rng rng(77);
  Gallery g;
  for (int s = 0; s < 5; ++s) {
    for (int m = 0; m < 3; ++m) {
      std::vector<double> v(7);
      for (double& x : v) x = rng.normal() * 1e-3;
      g.add_media(Embedding::from_raw("s" + std::to_string(s), "m" + std::to_string(s) + std::to_string(m), v));
    }
  }
  std::ostringstream out;
  write_gallery(out, g);
  const Gallery back = gallery_from(out.str());
  ASSERT_EQ(back.total_media(), g.total_media());
  for (std::size_t s = 0; s < g.subject_count(); ++s) {
    for (std::size_t m = 0; m < g.subject(s).media.size(); ++m) {
      // Re-normalizing an already unit vector may move the last bit, so
      // compare against a second pass instead of the original.
      EXPECT_EQ(back.subject(s).media[m].media_id, g.subject(s).media[m].media_id);
      for (std::size_t k = 0; k < 7; ++k) {
        EXPECT_NEAR(back.subject(s).media[m].vector[k], g.subject(s).media[m].vector[k], 1e-15);
      }
    }
  }
  std::ostringstream again;
  write_gallery(again, back);
  const Gallery third = gallery_from(again.str());
  std::ostringstream last;
  write_gallery(last, third);
  EXPECT_EQ(again.str(), last.str());
}

TEST(FeatureCsv, FormatDoubleRoundTrips) {
  Rng rng(8);
  for (int i = 0; i < 10000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform() * 40 - 20);
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(FeatureCsv, ErrorsCarryLineAndColumn) {
  auto f = failure([] { gallery_from("subject_id,media_id,f0,f1\nA,a1,1,0\nA,a2,1,zz\n"); });
  EXPECT_EQ(f.code, ErrorCode::ParseError);
  EXPECT_NE(f.message.find("g.csv: line 3, column 4"), std::string::npos) << f.message;

  f = failure([] { gallery_from("subject_id,media_id,f0,f1\nA,a1,1\n"); });
  EXPECT_EQ(f.code, ErrorCode::ParseError);
  EXPECT_NE(f.message.find("line 2"), std::string::npos) << f.message;

  f = failure([] { gallery_from("subject,media_id,f0\n"); });
  EXPECT_EQ(f.code, ErrorCode::ParseError);

  f = failure([] { gallery_from("subject_id,media_id,f0,f1\nA,a1,0,0\n"); });
  EXPECT_EQ(f.code, ErrorCode::ZeroNorm);
  EXPECT_NE(f.message.find("line 2"), std::string::npos) << f.message;

  f = failure([] { gallery_from("subject_id,media_id,f0\nA,a1,1\nA,a1,1\n"); });
  EXPECT_EQ(f.code, ErrorCode::DuplicateMediaId);

  f = failure([] { probes_from("subject_id,media_id,f0\nA,p1,1\n"); });
  EXPECT_EQ(f.code, ErrorCode::ParseError);

  f = failure([] { gallery_from("subject_id,media_id,f0,f2\n"); });
  EXPECT_EQ(f.code, ErrorCode::ParseError);
}

TEST(FeatureCsv, MissingFileIsIoError) {
  const auto f = failure([] { read_gallery(std::filesystem::path("/nonexistent/file.csv")); });
  EXPECT_EQ(f.code, ErrorCode::IoError);
}
