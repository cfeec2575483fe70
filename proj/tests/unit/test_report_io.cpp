#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "openset/error.hpp"
#include "openset/report_io.hpp"

using namespace openset;

namespace {

ScoreStats sample_stats() {
  ScoreStats s;
  s.mu1 = 0.51;
  s.sigma1 = 0.1;
  s.mu2 = 0.02;
  s.sigma2 = 0.07;
  s.mu3 = 0.3;
  s.sigma3 = 0.04;
  s.mu4 = 0.2;
  s.sigma4 = 0.05;
  s.n1 = 900;
  s.n2 = 1000;
  s.n3 = 99000;
  s.m = 100;
  s.r1 = 10;
  s.r2 = 99;
  return s;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(StatsJson, RoundTripsExactly) {
  const ScoreStats s = sample_stats();
  EXPECT_EQ(stats_from_json(to_json(s)), s);
  // Accepts a verdict document and reads its nested stats.
  EXPECT_EQ(stats_from_json(to_json(predict(s))), s);
}

TEST(StatsJson, FixedKeyOrder) {
  const std::string j = to_json(sample_stats());
  std::size_t last = 0;
  for (const char* key : {"\"mu1\"", "\"sigma1\"", "\"mu2\"", "\"sigma2\"", "\"mu3\"", "\"sigma3\"", "\"mu4\"",
                          "\"sigma4\"", "\"n1\"", "\"n2\"", "\"n3\"", "\"m\"", "\"r1\"", "\"r2\""}) {
    const std::size_t at = j.find(key);
    ASSERT_NE(at, std::string::npos) << key;
    EXPECT_GT(at, last) << key;
    last = at;
  }
}

TEST(StatsJson, OptionalCountsAndErrors) {
  const ScoreStats s =
      stats_from_json(R"({"mu1":0.5,"sigma1":0.1,"mu2":0,"sigma2":0.1,"mu3":0.2,"sigma3":0,"mu4":0.1,"sigma4":0})");
  EXPECT_EQ(s.mu1, 0.5);
  EXPECT_EQ(s.n2, 0u);
  for (const char* bad : {"{", "[1,2]", R"({"mu1":0.5})", R"({"mu1":"x","sigma1":0.1,"mu2":0,"sigma2":0.1,"mu3":0,"sigma3":0,"mu4":0,"sigma4":0})",
                          R"({"mu1":0.5,"sigma1":0.1,"mu2":0,"sigma2":0.1,"mu3":0.2,"sigma3":0,"mu4":0.1,"sigma4":0,"n2":-3})"}) {
    try {
      stats_from_json(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ParseError) << bad;
    }
  }
}

TEST(VerdictJson, CarriesVerdictStrings) {
  ScoreStats s = sample_stats();
  s.mu3 = mu3_star(s);
  EXPECT_NE(to_json(predict(s)).find("\"AT_BOUNDARY\""), std::string::npos);
  s.mu3 += 0.1;
  EXPECT_NE(to_json(predict(s)).find("\"IMPROVES\""), std::string::npos);
  s.mu3 -= 0.3;
  EXPECT_NE(to_json(predict(s)).find("\"DOES_NOT_IMPROVE\""), std::string::npos);
}

TEST(ReportJson, NanBecomesNullAndOutputIsStable) {
  MetricReport r;
  r.mode = "local";
  r.runs = 1;
  TargetMetric t;
  t.target = 0.01;
  t.mean = std::nan("");
  t.per_run = {std::nan("")};
  r.fnir_at_fpir.push_back(t);
  const std::string j = to_json(r);
  EXPECT_NE(j.find("\"mean\": null"), std::string::npos) << j;
  EXPECT_NE(j.find("\"stats\": null"), std::string::npos) << j;
  EXPECT_EQ(j, to_json(r));
}

TEST(ReportCsv, HeaderAndRows) {
  MetricReport r;
  TargetMetric f;
  f.target = 0.01;
  f.mean = 0.25;
  f.ci95 = 0.01;
  f.threshold = 0.5;
  r.fnir_at_fpir.push_back(f);
  r.tar_at_far.push_back(f);
  RankMetric k;
  k.rank = 5;
  k.mean = 0.9;
  r.rank_accuracy.push_back(k);
  std::ostringstream out;
  write_report_csv(out, r);
  const auto l = lines(out.str());
  ASSERT_EQ(l.size(), 4u);
  EXPECT_EQ(l[0], "metric,target,value,ci95,threshold");
  EXPECT_EQ(l[1], "fnir_at_fpir,0.01,0.25,0.01,0.5");
  EXPECT_EQ(l[2], "tar_at_far,0.01,0.25,0.01,0.5");
  EXPECT_EQ(l[3], "rank_accuracy,5,0.9,0,");
}

TEST(SweepCsv, HeaderAndParamColumn) {
  SweepResult r;
  r.param = SweepParam::Sigma;
  SweepPoint p;
  p.value = 0.05;
  p.fnir_mean = 0.4;
  p.fnir_baseline = 0.5;
  p.tar = std::nan("");
  r.points.push_back(p);
  std::ostringstream out;
  write_sweep_csv(out, r);
  const auto l = lines(out.str());
  ASSERT_EQ(l.size(), 2u);
  EXPECT_EQ(l[0], "param,value,fnir_mean,fnir_ci99,fnir_baseline,tar,tar_baseline,gap");
  EXPECT_EQ(l[1].rfind("sigma,0.05,0.4,0,0.5,", 0), 0u) << l[1];
}

TEST(ScoreCsv, RoundTrip) {
  Gallery g;
  const double x[] = {1, 0};
  g.add_media(Embedding::from_raw("A", "a", x));
  g.add_media(Embedding::from_raw("B", "b", x));
  ProbeSet ps;
  ps.add(Probe{"p1", Embedding::from_raw("A", "p1", x), "A"});
  ps.add(Probe{"p2", Embedding::from_raw("A", "p2", x), std::nullopt});
  Matrix m(2, 2);
  m(0, 0) = 0.1 + 0.2;
  m(0, 1) = -1e-300;
  m(1, 0) = 1.0 / 3;
  m(1, 1) = 0.75;
  std::ostringstream out;
  write_score_csv(out, m, ps, g);
  std::istringstream in(out.str());
  const ScoreTable t = read_score_csv(in);
  EXPECT_EQ(t.probe_ids, (std::vector<std::string>{"p1", "p2"}));
  EXPECT_EQ(t.subject_ids, (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(t.scores, m);
  EXPECT_THROW(write_score_csv(out, Matrix(1, 2), ps, g), Error);
}

TEST(ScoreCsv, ErrorsNameTheLine) {
  std::istringstream in("probe_id,A,B\np1,0.1,0.2\np2,0.3\n");
  try {
    read_score_csv(in, "s.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("s.csv: line 3"), std::string::npos) << e.what();
  }
  std::istringstream bad_header("subject,A\n");
  EXPECT_THROW(read_score_csv(bad_header), Error);
  std::istringstream nan_cell("probe_id,A\np1,nan\n");
  EXPECT_THROW(read_score_csv(nan_cell), Error);
}

TEST(ParseGrid, Forms) {
  EXPECT_EQ(parse_grid("1:5"), (std::vector<double>{1, 2, 3, 4, 5}));
  EXPECT_EQ(parse_grid("0.1:0.2:0.05"), (std::vector<double>{0.1, 0.15, 0.2}));
  EXPECT_EQ(parse_grid("1,2,5,10"), (std::vector<double>{1, 2, 5, 10}));
  EXPECT_EQ(parse_grid("0.02:0.04:0.005").size(), 5u);
  EXPECT_EQ(parse_grid("0.02:0.04:0.005")[3], 0.035);
  EXPECT_EQ(parse_grid("3"), (std::vector<double>{3}));
}

TEST(ParseGrid, Errors) {
  for (const char* bad : {"", "1,,2", "2,1", "1,1", "a:b", "1:0", "0:1:0", "0:1:-1", "0:1:2:3", "0:1e7:1e-3", "1,nan",
                          "1,inf"}) {
    try {
      parse_grid(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ParseError) << bad;
    }
  }
}
