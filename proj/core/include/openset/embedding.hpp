#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace openset {

/// Rejects any NaN/Inf entry (NonFinite) and vectors whose Euclidean norm is
/// below 1e-12 (ZeroNorm). Returns v / ||v||.
std::vector<double> normalize(std::span<const double> v);

/// Inner product of two unit vectors, clamped to [-1, 1] to absorb rounding
/// overshoot. Throws DimensionMismatch on unequal lengths.
double cosine(std::span<const double> a, std::span<const double> b);

/// Plain inner product without clamping. Throws DimensionMismatch.
double dot(std::span<const double> a, std::span<const double> b);

/// One normalized feature vector tagged with its subject and medium.
struct Embedding {
  std::string subject_id;
  std::string media_id;
  std::vector<double> vector;

  /// Builds an embedding from a raw vector, normalizing it.
  static Embedding from_raw(std::string subject_id, std::string media_id, std::span<const double> raw);

  std::size_t dimension() const noexcept { return vector.size(); }
};

struct Subject {
  std::string id;
  std::vector<Embedding> media;
};

/// Multi-sample gallery. Subject order is the insertion order and defines the
/// canonical column order of every score matrix; media are flattened in
/// (subject order, media order).
class Gallery {
 public:
  Gallery() = default;

  /// Appends a subject. Throws DuplicateSubject, DimensionMismatch, or
  /// DuplicateMediaId; media must be non-empty and carry this subject id.
  void add_subject(Subject subject);

  /// Appends one medium, creating the subject at the end if unseen.
  void add_media(Embedding embedding);

  std::span<const Subject> subjects() const noexcept { return subjects_; }
  const Subject& subject(std::size_t i) const { return subjects_.at(i); }
  std::size_t subject_count() const noexcept { return subjects_.size(); }
  std::size_t total_media() const noexcept { return total_media_; }
  std::size_t dimension() const noexcept { return dimension_; }
  bool empty() const noexcept { return subjects_.empty(); }

  std::optional<std::size_t> find(const std::string& subject_id) const;

  /// Column index -> owning subject index, in canonical media order.
  std::vector<std::size_t> media_owners() const;

  /// Copy without the listed subjects (order of the rest preserved).
  Gallery without(const std::vector<std::string>& subject_ids) const;

  /// Single-subject gallery containing subject i.
  Gallery restricted_to(std::size_t i) const;

 private:
  void check_dimension(const Embedding& e);

  std::vector<Subject> subjects_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t total_media_ = 0;
  std::size_t dimension_ = 0;
};

inline constexpr const char* kNonMated = "NONMATED";

struct Probe {
  std::string probe_id;
  Embedding embedding;
  /// Gallery subject id, or nullopt for a non-mated probe.
  std::optional<std::string> truth;

  bool mated() const noexcept { return truth.has_value(); }
};

class ProbeSet {
 public:
  ProbeSet() = default;

  /// Throws DuplicateProbeId or DimensionMismatch.
  void add(Probe probe);

  std::span<const Probe> probes() const noexcept { return probes_; }
  const Probe& operator[](std::size_t i) const { return probes_[i]; }
  std::size_t size() const noexcept { return probes_.size(); }
  bool empty() const noexcept { return probes_.empty(); }
  std::size_t dimension() const noexcept { return dimension_; }

  /// Copy where probes of the listed subjects become non-mated.
  ProbeSet with_nonmated(const std::vector<std::string>& subject_ids) const;

  /// Throws UnknownTruthSubject if a mated probe names a subject that is not
  /// in the gallery.
  void validate_against(const Gallery& gallery) const;

 private:
  std::vector<Probe> probes_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t dimension_ = 0;
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  const std::vector<double>& data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace openset
