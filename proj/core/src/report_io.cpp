#include "openset/report_io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "openset/error.hpp"
#include "openset/feature_csv.hpp"

namespace openset {

namespace {

using ojson = nlohmann::ordered_json;

ojson number(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ojson numbers(const std::vector<double>& xs) {
  ojson arr = ojson::array();
  for (double x : xs) arr.push_back(number(x));
  return arr;
}

ojson stats_json(const ScoreStats& s) {
  ojson j;
  j["mu1"] = number(s.mu1);
  j["sigma1"] = number(s.sigma1);
  j["mu2"] = number(s.mu2);
  j["sigma2"] = number(s.sigma2);
  j["mu3"] = number(s.mu3);
  j["sigma3"] = number(s.sigma3);
  j["mu4"] = number(s.mu4);
  j["sigma4"] = number(s.sigma4);
  j["n1"] = s.n1;
  j["n2"] = s.n2;
  j["n3"] = s.n3;
  j["m"] = s.m;
  j["r1"] = s.r1;
  j["r2"] = s.r2;
  return j;
}

ojson condition_json(const ConditionSides& c) {
  ojson j;
  j["lhs"] = number(c.lhs);
  j["rhs"] = number(c.rhs);
  j["gap"] = number(c.gap);
  j["improves"] = c.improves;
  j["at_boundary"] = c.at_boundary;
  j["verdict"] = c.at_boundary ? "AT_BOUNDARY" : (c.improves ? "IMPROVES" : "DOES_NOT_IMPROVE");
  return j;
}

ojson target_json(const TargetMetric& t) {
  ojson j;
  j["target"] = t.target;
  j["mean"] = number(t.mean);
  j["ci95"] = number(t.ci95);
  j["threshold"] = number(t.threshold);
  j["achievable"] = t.achievable;
  j["per_run"] = numbers(t.per_run);
  return j;
}

std::string cell(double v) { return std::isfinite(v) ? format_double(v) : std::string(); }

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError, source + ": line " + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t at = line.find(sep, start);
    if (at == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, at - start));
    start = at + 1;
  }
}

std::optional<double> to_double(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

std::string to_json(const ScoreStats& stats, int indent) { return stats_json(stats).dump(indent); }

std::string to_json(const TheoremVerdict& v, int indent) {
  ojson j;
  j["stats"] = stats_json(v.stats);
  j["open_set"] = condition_json(v.open_set);
  j["verification"] = condition_json(v.verification);
  j["delta"] = number(v.delta);
  j["verification_q"] = number(v.verification_q);
  j["mu3_star"] = number(v.mu3_star);
  j["expected_fnir_without"] = number(v.expected_fnir_without);
  j["expected_fnir_with"] = number(v.expected_fnir_with);
  j["open_set_threshold_without"] = number(v.open_set_threshold_without);
  j["open_set_threshold_with"] = number(v.open_set_threshold_with);
  j["verification_threshold_without"] = number(v.verification_threshold_without);
  j["verification_threshold_with"] = number(v.verification_threshold_with);
  return j.dump(indent);
}

std::string to_json(const MetricReport& r, int indent) {
  ojson j;
  j["mode"] = r.mode;
  j["runs"] = r.runs;
  j["fnir_at_fpir"] = ojson::array();
  for (const auto& t : r.fnir_at_fpir) j["fnir_at_fpir"].push_back(target_json(t));
  j["tar_at_far"] = ojson::array();
  for (const auto& t : r.tar_at_far) j["tar_at_far"].push_back(target_json(t));
  j["rank_accuracy"] = ojson::array();
  for (const auto& k : r.rank_accuracy) {
    ojson e;
    e["rank"] = k.rank;
    e["mean"] = number(k.mean);
    e["ci95"] = number(k.ci95);
    e["per_run"] = numbers(k.per_run);
    j["rank_accuracy"].push_back(e);
  }
  j["stats"] = r.stats ? stats_json(*r.stats) : ojson(nullptr);
  return j.dump(indent);
}

std::string to_json(const SweepResult& r, int indent) {
  ojson j;
  j["param"] = to_string(r.param);
  j["points"] = ojson::array();
  for (const auto& p : r.points) {
    ojson e;
    e["value"] = number(p.value);
    e["fnir_mean"] = number(p.fnir_mean);
    e["fnir_ci99"] = number(p.fnir_ci99);
    e["fnir_baseline"] = number(p.fnir_baseline);
    e["fnir_baseline_ci99"] = number(p.fnir_baseline_ci99);
    e["delta_mean"] = number(p.delta_mean);
    e["delta_ci99"] = number(p.delta_ci99);
    e["tar"] = number(p.tar);
    e["tar_baseline"] = number(p.tar_baseline);
    e["gap"] = number(p.gap);
    j["points"].push_back(e);
  }
  return j.dump(indent);
}

ScoreStats stats_from_json(std::string_view text, const std::string& source) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, source + ": " + e.what());
  }
  // A verdict file nests its statistics.
  if (j.is_object() && j.contains("stats") && j["stats"].is_object()) j = j["stats"];
  if (!j.is_object()) throw Error(ErrorCode::ParseError, source + ": expected a JSON object");

  auto real = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_number()) {
      throw Error(ErrorCode::ParseError, source + ": missing or non-numeric field '" + key + "'");
    }
    return j[key].get<double>();
  };
  auto count = [&](const char* key) -> std::size_t {
    if (!j.contains(key)) return 0;
    if (!j[key].is_number_unsigned()) {
      throw Error(ErrorCode::ParseError, source + ": field '" + std::string(key) + "' must be a non-negative integer");
    }
    return j[key].get<std::size_t>();
  };
  ScoreStats s;
  s.mu1 = real("mu1");
  s.sigma1 = real("sigma1");
  s.mu2 = real("mu2");
  s.sigma2 = real("sigma2");
  s.mu3 = real("mu3");
  s.sigma3 = real("sigma3");
  s.mu4 = real("mu4");
  s.sigma4 = real("sigma4");
  s.n1 = count("n1");
  s.n2 = count("n2");
  s.n3 = count("n3");
  s.m = count("m");
  s.r1 = count("r1");
  s.r2 = count("r2");
  return s;
}

void write_report_csv(std::ostream& out, const MetricReport& r) {
  out << "metric,target,value,ci95,threshold\n";
  for (const auto& t : r.fnir_at_fpir) {
    out << "fnir_at_fpir," << format_double(t.target) << ',' << cell(t.mean) << ',' << cell(t.ci95) << ','
        << cell(t.threshold) << '\n';
  }
  for (const auto& t : r.tar_at_far) {
    out << "tar_at_far," << format_double(t.target) << ',' << cell(t.mean) << ',' << cell(t.ci95) << ','
        << cell(t.threshold) << '\n';
  }
  for (const auto& k : r.rank_accuracy) {
    out << "rank_accuracy," << k.rank << ',' << cell(k.mean) << ',' << cell(k.ci95) << ",\n";
  }
}

void write_sweep_csv(std::ostream& out, const SweepResult& r) {
  out << "param,value,fnir_mean,fnir_ci99,fnir_baseline,tar,tar_baseline,gap\n";
  const std::string name = to_string(r.param);
  for (const auto& p : r.points) {
    out << name << ',' << format_double(p.value) << ',' << cell(p.fnir_mean) << ',' << cell(p.fnir_ci99) << ','
        << cell(p.fnir_baseline) << ',' << cell(p.tar) << ',' << cell(p.tar_baseline) << ',' << cell(p.gap)
        << '\n';
  }
}

void write_score_csv(std::ostream& out, const Matrix& scores, const ProbeSet& probes, const Gallery& gallery) {
  if (scores.rows() != probes.size() || scores.cols() != gallery.subject_count()) {
    throw Error(ErrorCode::DimensionMismatch, "score matrix shape does not match probes x subjects");
  }
  out << "probe_id";
  for (const auto& s : gallery.subjects()) out << ',' << s.id;
  out << '\n';
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    out << probes[r].probe_id;
    for (double v : scores.row(r)) out << ',' << format_double(v);
    out << '\n';
  }
}

ScoreTable read_score_csv(std::istream& in, const std::string& source) {
  ScoreTable t;
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto cells = split(line, ',');
    if (line_no == 1) {
      if (cells.size() < 2 || cells[0] != "probe_id") fail(source, 1, "header must be probe_id,<subject ids>");
      for (std::size_t c = 1; c < cells.size(); ++c) t.subject_ids.emplace_back(cells[c]);
      continue;
    }
    if (line.empty()) continue;
    if (cells.size() != t.subject_ids.size() + 1) {
      fail(source, line_no, "expected " + std::to_string(t.subject_ids.size() + 1) + " cells, found " +
                                std::to_string(cells.size()));
    }
    t.probe_ids.emplace_back(cells[0]);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const auto v = to_double(cells[c]);
      if (!v || !std::isfinite(*v)) {
        fail(source, line_no, "column " + std::to_string(c + 1) + ": not a finite number: '" + std::string(cells[c]) + "'");
      }
      values.push_back(*v);
    }
  }
  if (line_no == 0) fail(source, 1, "empty file");
  t.scores = Matrix(t.probe_ids.size(), t.subject_ids.size());
  for (std::size_t i = 0; i < values.size(); ++i) t.scores(i / t.subject_ids.size(), i % t.subject_ids.size()) = values[i];
  return t;
}

std::vector<double> parse_grid(std::string_view text) {
  auto bad = [&](const std::string& why) -> Error {
    return Error(ErrorCode::ParseError, "grid '" + std::string(text) + "': " + why);
  };
  std::vector<double> grid;
  if (text.find(':') != std::string_view::npos) {
    const auto parts = split(text, ':');
    if (parts.size() > 3) throw bad("expected a:b or a:b:step");
    const auto a = to_double(parts[0]);
    const auto b = to_double(parts[1]);
    const auto step = parts.size() == 3 ? to_double(parts[2]) : std::optional<double>(1.0);
    if (!a || !b || !step || !std::isfinite(*a) || !std::isfinite(*b) || !std::isfinite(*step)) {
      throw bad("not a number");
    }
    if (!(*step > 0.0)) throw bad("step must be positive");
    if (*b < *a) throw bad("end is below start");
    const double span = (*b - *a) / *step;
    if (span > 1e6) throw bad("more than a million points");
    const auto count = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) {
      // Round away accumulated binary noise (0.1 + 0.05 -> 0.15, not 0.15000000000000002).
      char buf[32];
      const auto res = std::to_chars(buf, buf + sizeof buf, *a + static_cast<double>(i) * *step,
                                     std::chars_format::general, 12);
      grid.push_back(*to_double(std::string_view(buf, static_cast<std::size_t>(res.ptr - buf))));
    }
  } else {
    for (auto part : split(text, ',')) {
      const auto v = to_double(part);
      if (!v || !std::isfinite(*v)) throw bad("not a number: '" + std::string(part) + "'");
      grid.push_back(*v);
    }
  }
  if (grid.empty()) throw bad("empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw bad("values must be strictly increasing");
  }
  return grid;
}

}  // namespace openset
