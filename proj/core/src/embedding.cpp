#include "openset/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "openset/error.hpp"

namespace openset {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroNorm: return "ZeroNorm";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DuplicateMediaId: return "DuplicateMediaId";
    case ErrorCode::DuplicateProbeId: return "DuplicateProbeId";
    case ErrorCode::DuplicateSubject: return "DuplicateSubject";
    case ErrorCode::UnknownTruthSubject: return "UnknownTruthSubject";
    case ErrorCode::TargetUnachievable: return "TargetUnachievable";
    case ErrorCode::InsufficientSubjects: return "InsufficientSubjects";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::ZeroSigma: return "ZeroSigma";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

std::vector<double> normalize(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorCode::DimensionMismatch, "vector has dimension 0");
  double sq = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFinite, "vector has a NaN or infinite entry");
    sq += x * x;
  }
  const double norm = std::sqrt(sq);
  if (!(norm >= 1e-12)) throw Error(ErrorCode::ZeroNorm, "vector norm below 1e-12");
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [norm](double x) { return x / norm; });
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "dimensions " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  return std::clamp(dot(a, b), -1.0, 1.0);
}

Embedding Embedding::from_raw(std::string subject_id, std::string media_id, std::span<const double> raw) {
  return Embedding{std::move(subject_id), std::move(media_id), normalize(raw)};
}

void Gallery::check_dimension(const Embedding& e) {
  if (e.vector.empty()) throw Error(ErrorCode::DimensionMismatch, "embedding has dimension 0");
  if (dimension_ == 0) {
    dimension_ = e.vector.size();
  } else if (e.vector.size() != dimension_) {
    throw Error(ErrorCode::DimensionMismatch, "medium '" + e.media_id + "' of subject '" + e.subject_id +
                                                  "' has dimension " + std::to_string(e.vector.size()) +
                                                  ", gallery has " + std::to_string(dimension_));
  }
}

void Gallery::add_subject(Subject subject) {
  if (index_.count(subject.id)) throw Error(ErrorCode::DuplicateSubject, "subject '" + subject.id + "'");
  if (subject.media.empty()) throw Error(ErrorCode::InvalidConfig, "subject '" + subject.id + "' has no media");
  std::unordered_set<std::string> seen;
  for (const auto& e : subject.media) {
    if (e.subject_id != subject.id) {
      throw Error(ErrorCode::InvalidConfig,
                  "medium '" + e.media_id + "' tagged '" + e.subject_id + "' inside subject '" + subject.id + "'");
    }
    if (!seen.insert(e.media_id).second) {
      throw Error(ErrorCode::DuplicateMediaId, "(" + subject.id + ", " + e.media_id + ")");
    }
    check_dimension(e);
  }
  total_media_ += subject.media.size();
  index_.emplace(subject.id, subjects_.size());
  subjects_.push_back(std::move(subject));
}

void Gallery::add_media(Embedding embedding) {
  auto it = index_.find(embedding.subject_id);
  if (it == index_.end()) {
    Subject s{embedding.subject_id, {}};
    s.media.push_back(std::move(embedding));
    add_subject(std::move(s));
    return;
  }
  auto& media = subjects_[it->second].media;
  for (const auto& e : media) {
    if (e.media_id == embedding.media_id) {
      throw Error(ErrorCode::DuplicateMediaId, "(" + embedding.subject_id + ", " + embedding.media_id + ")");
    }
  }
  check_dimension(embedding);
  media.push_back(std::move(embedding));
  ++total_media_;
}

std::optional<std::size_t> Gallery::find(const std::string& subject_id) const {
  auto it = index_.find(subject_id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::size_t> Gallery::media_owners() const {
  std::vector<std::size_t> owners;
  owners.reserve(total_media_);
  for (std::size_t i = 0; i < subjects_.size(); ++i) owners.insert(owners.end(), subjects_[i].media.size(), i);
  return owners;
}

Gallery Gallery::without(const std::vector<std::string>& subject_ids) const {
  std::unordered_set<std::string> drop(subject_ids.begin(), subject_ids.end());
  Gallery out;
  for (const auto& s : subjects_) {
    if (!drop.count(s.id)) out.add_subject(s);
  }
  return out;
}

Gallery Gallery::restricted_to(std::size_t i) const {
  Gallery out;
  out.add_subject(subjects_.at(i));
  return out;
}

void ProbeSet::add(Probe probe) {
  if (index_.count(probe.probe_id)) throw Error(ErrorCode::DuplicateProbeId, "probe '" + probe.probe_id + "'");
  const std::size_t d = probe.embedding.vector.size();
  if (d == 0) throw Error(ErrorCode::DimensionMismatch, "probe '" + probe.probe_id + "' has dimension 0");
  if (dimension_ == 0) {
    dimension_ = d;
  } else if (d != dimension_) {
    throw Error(ErrorCode::DimensionMismatch, "probe '" + probe.probe_id + "' has dimension " + std::to_string(d) +
                                                  ", expected " + std::to_string(dimension_));
  }
  index_.emplace(probe.probe_id, probes_.size());
  probes_.push_back(std::move(probe));
}

ProbeSet ProbeSet::with_nonmated(const std::vector<std::string>& subject_ids) const {
  std::unordered_set<std::string> flip(subject_ids.begin(), subject_ids.end());
  ProbeSet out;
  for (Probe p : probes_) {
    if (p.truth && flip.count(*p.truth)) p.truth.reset();
    out.add(std::move(p));
  }
  return out;
}

void ProbeSet::validate_against(const Gallery& gallery) const {
  for (const auto& p : probes_) {
    if (p.truth && !gallery.find(*p.truth)) {
      throw Error(ErrorCode::UnknownTruthSubject, "probe '" + p.probe_id + "' names unknown subject '" + *p.truth + "'");
    }
  }
}

}  // namespace openset
