#include "openset/feature_csv.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <vector>

#include "openset/error.hpp"

namespace openset {

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

[[noreturn]] void parse_error(const std::string& source, std::size_t line, std::size_t column, const std::string& what) {
  throw Error(ErrorCode::ParseError,
              source + ": line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what);
}

struct Layout {
  std::size_t dimension = 0;
  std::size_t feature_begin = 2;
  std::optional<std::size_t> truth_column;
  std::size_t columns = 0;
};

Layout parse_header(std::string_view header, const std::string& source, bool want_truth) {
  const auto cells = split(header);
  if (cells.size() < 3 || cells[0] != "subject_id" || cells[1] != "media_id") {
    parse_error(source, 1, 1, "header must start with subject_id,media_id,f0");
  }
  Layout layout;
  layout.columns = cells.size();
  for (std::size_t c = 2; c < cells.size(); ++c) {
    if (cells[c] == "truth") {
      if (layout.truth_column) parse_error(source, 1, c + 1, "duplicate truth column");
      layout.truth_column = c;
      continue;
    }
    const std::string expected = "f" + std::to_string(layout.dimension);
    if (cells[c] != expected) {
      parse_error(source, 1, c + 1, "expected '" + expected + "', found '" + std::string(cells[c]) + "'");
    }
    if (layout.truth_column) parse_error(source, 1, c + 1, "feature column after truth column");
    ++layout.dimension;
  }
  if (layout.dimension == 0) parse_error(source, 1, 3, "no feature columns");
  if (want_truth && !layout.truth_column) parse_error(source, 1, cells.size(), "probe file lacks a truth column");
  if (!want_truth && layout.truth_column) parse_error(source, 1, *layout.truth_column + 1, "gallery file has a truth column");
  return layout;
}

double parse_double(std::string_view cell, const std::string& source, std::size_t line, std::size_t column) {
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = cell.data() + cell.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || begin == end) {
    parse_error(source, line, column, "not a number: '" + std::string(cell) + "'");
  }
  return v;
}

template <typename Fn>
void for_each_row(std::istream& in, const std::string& source, bool want_truth, Fn&& fn) {
  std::string line;
  if (!std::getline(in, line)) parse_error(source, 1, 1, "empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const Layout layout = parse_header(line, source, want_truth);

  std::size_t lineno = 1;
  std::vector<double> raw(layout.dimension);
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != layout.columns) {
      parse_error(source, lineno, std::min(cells.size(), layout.columns) + 1,
                  "expected " + std::to_string(layout.columns) + " fields, found " + std::to_string(cells.size()));
    }
    if (cells[0].empty()) parse_error(source, lineno, 1, "empty subject_id");
    if (cells[1].empty()) parse_error(source, lineno, 2, "empty media_id");
    std::size_t f = 0;
    for (std::size_t c = 2; c < cells.size(); ++c) {
      if (layout.truth_column && c == *layout.truth_column) continue;
      raw[f++] = parse_double(cells[c], source, lineno, c + 1);
    }
    std::optional<std::string> truth;
    if (layout.truth_column) {
      const auto t = cells[*layout.truth_column];
      if (t.empty()) parse_error(source, lineno, *layout.truth_column + 1, "empty truth");
      if (t != kNonMated) truth = std::string(t);
    }
    try {
      fn(std::string(cells[0]), std::string(cells[1]), raw, std::move(truth));
    } catch (const Error& e) {
      throw Error(e.code(), source + ": line " + std::to_string(lineno) + ": " + e.detail());
    }
  }
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  return in;
}

void write_header(std::ostream& out, std::size_t dimension, bool truth) {
  out << "subject_id,media_id";
  for (std::size_t d = 0; d < dimension; ++d) out << ",f" << d;
  if (truth) out << ",truth";
  out << '\n';
}

void write_vector(std::ostream& out, const std::vector<double>& v) {
  for (double x : v) out << ',' << format_double(x);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

Gallery read_gallery(std::istream& in, const std::string& source) {
  Gallery g;
  for_each_row(in, source, false, [&](std::string subject, std::string media, const std::vector<double>& raw,
                                      std::optional<std::string>) {
    g.add_media(Embedding::from_raw(std::move(subject), std::move(media), raw));
  });
  return g;
}

Gallery read_gallery(const std::filesystem::path& path) {
  auto in = open(path);
  return read_gallery(in, path.string());
}

ProbeSet read_probes(std::istream& in, const std::string& source) {
  ProbeSet p;
  for_each_row(in, source, true, [&](std::string subject, std::string media, const std::vector<double>& raw,
                                     std::optional<std::string> truth) {
    std::string id = media;
    p.add(Probe{std::move(id), Embedding::from_raw(std::move(subject), std::move(media), raw), std::move(truth)});
  });
  return p;
}

ProbeSet read_probes(const std::filesystem::path& path) {
  auto in = open(path);
  return read_probes(in, path.string());
}

void write_gallery(std::ostream& out, const Gallery& gallery) {
  write_header(out, gallery.dimension(), false);
  for (const auto& s : gallery.subjects()) {
    for (const auto& e : s.media) {
      out << e.subject_id << ',' << e.media_id;
      write_vector(out, e.vector);
      out << '\n';
    }
  }
}

void write_probes(std::ostream& out, const ProbeSet& probes) {
  write_header(out, probes.dimension(), true);
  for (const auto& p : probes.probes()) {
    out << p.embedding.subject_id << ',' << p.probe_id;
    write_vector(out, p.embedding.vector);
    out << ',' << (p.truth ? *p.truth : std::string(kNonMated)) << '\n';
  }
}

}  // namespace openset
