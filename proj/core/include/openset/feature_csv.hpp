#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "openset/embedding.hpp"

namespace openset {

// Feature CSV, UTF-8 with LF line endings:
//
//   subject_id,media_id,f0,f1,...,f{d-1}[,truth]
//
// Probe files carry a `truth` column holding a gallery subject id or the
// literal NONMATED; the probe id is the media_id column. Vectors are
// normalized on ingestion. Numbers are written in shortest round-trip form.

Gallery read_gallery(std::istream& in, const std::string& source = "<stream>");
Gallery read_gallery(const std::filesystem::path& path);

ProbeSet read_probes(std::istream& in, const std::string& source = "<stream>");
ProbeSet read_probes(const std::filesystem::path& path);

void write_gallery(std::ostream& out, const Gallery& gallery);
void write_probes(std::ostream& out, const ProbeSet& probes);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace openset
