#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "openset/embedding.hpp"
#include "openset/metrics.hpp"
#include "openset/score_stats.hpp"
#include "openset/simulate.hpp"
#include "openset/theory.hpp"

namespace openset {

// JSON output uses a fixed key order and round-trip number formatting, so
// equal values always serialize to equal bytes. NaN is written as null.

std::string to_json(const ScoreStats& stats, int indent = 2);
std::string to_json(const TheoremVerdict& verdict, int indent = 2);
std::string to_json(const MetricReport& report, int indent = 2);
std::string to_json(const SweepResult& result, int indent = 2);

/// Parses the ScoreStats fields (mu1..sigma4 required; counts optional and
/// defaulting to 0). Throws ParseError.
ScoreStats stats_from_json(std::string_view text, const std::string& source = "<stats>");

/// Rows `metric,target,value,ci95,threshold`. Rank accuracy rows carry the
/// rank as target and an empty threshold.
void write_report_csv(std::ostream& out, const MetricReport& report);

/// Rows `param,value,fnir_mean,fnir_ci99,fnir_baseline,tar,tar_baseline,gap`.
void write_sweep_csv(std::ostream& out, const SweepResult& result);

/// Score matrix as `probe_id,<subject_1>,...,<subject_M>`.
void write_score_csv(std::ostream& out, const Matrix& scores, const ProbeSet& probes, const Gallery& gallery);

struct ScoreTable {
  std::vector<std::string> probe_ids;
  std::vector<std::string> subject_ids;
  Matrix scores;
};

/// Reads what write_score_csv writes. Throws ParseError with line numbers.
ScoreTable read_score_csv(std::istream& in, const std::string& source = "<scores>");

/// Grid syntax: `a:b:step`, `a:b` (step 1) or a comma list. The result must
/// be non-empty and strictly increasing. Throws ParseError.
std::vector<double> parse_grid(std::string_view text);

}  // namespace openset
