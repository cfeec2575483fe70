#include "openset/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "openset/error.hpp"
#include "openset/parallel.hpp"
#include "openset/rng.hpp"
#include "openset/stats.hpp"
#include "openset/theory.hpp"

namespace openset {

std::vector<std::optional<std::size_t>> truth_columns(const ProbeSet& probes, const Gallery& gallery) {
  std::vector<std::optional<std::size_t>> out;
  out.reserve(probes.size());
  for (const auto& p : probes.probes()) {
    if (!p.truth) {
      out.emplace_back();
      continue;
    }
    const auto col = gallery.find(*p.truth);
    if (!col) {
      throw Error(ErrorCode::UnknownTruthSubject, "probe '" + p.probe_id + "' names unknown subject '" + *p.truth + "'");
    }
    out.emplace_back(*col);
  }
  return out;
}

std::size_t rank_of(std::span<const double> row, std::size_t col) {
  const double v = row[col];
  std::size_t rank = 1;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (row[j] > v || (row[j] == v && j < col)) ++rank;
  }
  return rank;
}

ScorePartition partition_scores(const Matrix& scores, std::span<const double> increments,
                                std::span<const std::optional<std::size_t>> truth) {
  if (truth.size() != scores.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "truth labels do not match score rows");
  }
  ScorePartition p;
  p.subjects = scores.cols();
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    const auto row = scores.row(r);
    const double inc = increments.empty() ? 0.0 : increments[r];
    if (truth[r]) {
      const std::size_t t = *truth[r];
      if (t >= scores.cols()) throw Error(ErrorCode::UnknownTruthSubject, "truth column out of range");
      p.genuine.push_back(row[t]);
      p.rank1_correct.push_back(rank_of(row, t) == 1 ? 1 : 0);
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j != t) p.imposter.push_back(row[j]);
      }
      p.mated_knn.push_back(inc);
    } else {
      if (row.empty()) continue;
      p.imposter.insert(p.imposter.end(), row.begin(), row.end());
      p.nonmated_maxima.push_back(*std::max_element(row.begin(), row.end()));
      p.nonmated_knn.push_back(inc);
    }
  }
  return p;
}

ScorePartition partition_scores(const FusedScores& fused, std::span<const std::optional<std::size_t>> truth) {
  return partition_scores(fused.scores, fused.increment, truth);
}

ThresholdResult rate_threshold(std::span<const double> negatives, double target) {
  if (negatives.empty()) throw Error(ErrorCode::TargetUnachievable, "no negative scores to set a threshold");
  if (!(target > 0.0 && target < 1.0)) throw Error(ErrorCode::InvalidConfig, "target must lie in (0, 1)");
  const std::size_t n = negatives.size();
  const auto allowed = static_cast<std::size_t>(std::floor(target * static_cast<double>(n) + 1e-9));

  std::vector<double> sorted(negatives.begin(), negatives.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());

  ThresholdResult out;
  if (allowed == 0) {
    out.achievable = false;
    out.threshold = std::nextafter(sorted.front(), std::numeric_limits<double>::infinity());
  } else {
    const std::size_t r = std::min(allowed, n);
    const double candidate = sorted[r - 1];
    // Values tied with the candidate beyond position r would push the
    // realized rate over the target; step just above them.
    const bool overflow = r < n && sorted[r] == candidate;
    out.threshold = overflow ? std::nextafter(candidate, std::numeric_limits<double>::infinity()) : candidate;
  }
  const auto exceed = static_cast<std::size_t>(
      std::count_if(sorted.begin(), sorted.end(), [&](double v) { return v >= out.threshold; }));
  out.realized_rate = static_cast<double>(exceed) / static_cast<double>(n);
  return out;
}

ThresholdResult fnir_at_fpir(std::span<const double> genuine, std::span<const double> nonmated_maxima,
                             std::span<const std::uint8_t> rank1_correct, double target, bool threshold_only) {
  if (!rank1_correct.empty() && rank1_correct.size() != genuine.size()) {
    throw Error(ErrorCode::DimensionMismatch, "rank-1 flags do not match genuine scores");
  }
  ThresholdResult out = rate_threshold(nonmated_maxima, target);
  if (genuine.empty()) {
    out.value = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  std::size_t fail = 0;
  for (std::size_t i = 0; i < genuine.size(); ++i) {
    const bool misidentified = !threshold_only && !rank1_correct.empty() && rank1_correct[i] == 0;
    if (genuine[i] < out.threshold || misidentified) ++fail;
  }
  out.value = static_cast<double>(fail) / static_cast<double>(genuine.size());
  return out;
}

ThresholdResult tar_at_far(std::span<const double> genuine, std::span<const double> imposter, double target) {
  ThresholdResult out = rate_threshold(imposter, target);
  if (genuine.empty()) {
    out.value = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const auto accepted = std::count_if(genuine.begin(), genuine.end(), [&](double g) { return g >= out.threshold; });
  out.value = static_cast<double>(accepted) / static_cast<double>(genuine.size());
  return out;
}

std::vector<double> rank_accuracy(const Matrix& scores, std::span<const std::optional<std::size_t>> truth,
                                  std::span<const int> ranks) {
  if (truth.size() != scores.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "truth labels do not match score rows");
  }
  std::vector<std::size_t> hits(ranks.size(), 0);
  std::size_t mated = 0;
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    if (!truth[r]) continue;
    ++mated;
    const std::size_t rank = rank_of(scores.row(r), *truth[r]);
    for (std::size_t i = 0; i < ranks.size(); ++i) {
      if (rank <= static_cast<std::size_t>(std::max(ranks[i], 0))) ++hits[i];
    }
  }
  std::vector<double> out(ranks.size(), std::numeric_limits<double>::quiet_NaN());
  if (mated == 0) return out;
  for (std::size_t i = 0; i < ranks.size(); ++i) out[i] = static_cast<double>(hits[i]) / static_cast<double>(mated);
  return out;
}

void EvalProtocol::validate() const {
  auto check_targets = [](const std::vector<double>& ts, const char* what) {
    for (double t : ts) {
      if (!(t > 0.0 && t < 1.0)) throw Error(ErrorCode::InvalidConfig, std::string(what) + " targets must lie in (0, 1)");
    }
  };
  check_targets(fpir_targets, "FPIR");
  check_targets(far_targets, "FAR");
  for (int r : ranks) {
    if (r < 1) throw Error(ErrorCode::InvalidConfig, "ranks must be >= 1");
  }
  if (runs < 1) throw Error(ErrorCode::InvalidConfig, "runs must be >= 1");
  if (!(nonmated_fraction >= 0.0 && nonmated_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "non-mated fraction must lie in [0, 1)");
  }
}

RunMetrics evaluate_run(const FusedScores& fused, std::span<const std::optional<std::size_t>> truth,
                        const EvalProtocol& protocol) {
  const ScorePartition p = partition_scores(fused, truth);
  RunMetrics m;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (double t : protocol.fpir_targets) {
    if (p.nonmated_maxima.empty()) {
      m.fnir.push_back({nan, nan, false, nan});
    } else {
      m.fnir.push_back(fnir_at_fpir(p.genuine, p.nonmated_maxima, p.rank1_correct, t, protocol.threshold_only));
    }
  }
  for (double t : protocol.far_targets) {
    if (p.imposter.empty()) {
      m.tar.push_back({nan, nan, false, nan});
    } else {
      m.tar.push_back(tar_at_far(p.genuine, p.imposter, t));
    }
  }
  m.rank_accuracy = rank_accuracy(fused.scores, truth, protocol.ranks);
  return m;
}

namespace {

// Mean and CI over runs, summed in sorted order so the result does not
// depend on run scheduling.
void summarize(std::vector<double> values, double& mean_out, double& ci_out) {
  if (std::any_of(values.begin(), values.end(), [](double v) { return std::isnan(v); })) {
    mean_out = ci_out = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  std::sort(values.begin(), values.end());
  mean_out = mean(values);
  ci_out = ci_half_width(values, kZ95);
}

}  // namespace

MetricReport aggregate_runs(const std::vector<RunMetrics>& runs, const EvalProtocol& protocol, std::string mode) {
  MetricReport rep;
  rep.mode = std::move(mode);
  rep.runs = static_cast<int>(runs.size());

  auto fold = [&](const std::vector<double>& targets, auto member) {
    std::vector<TargetMetric> out;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      TargetMetric tm;
      tm.target = targets[i];
      std::vector<double> thresholds;
      for (const auto& r : runs) {
        const ThresholdResult& tr = (r.*member)[i];
        tm.per_run.push_back(tr.value);
        thresholds.push_back(tr.threshold);
        tm.achievable = tm.achievable && tr.achievable;
      }
      double unused = 0.0;
      summarize(tm.per_run, tm.mean, tm.ci95);
      summarize(thresholds, tm.threshold, unused);
      out.push_back(std::move(tm));
    }
    return out;
  };
  rep.fnir_at_fpir = fold(protocol.fpir_targets, &RunMetrics::fnir);
  rep.tar_at_far = fold(protocol.far_targets, &RunMetrics::tar);

  for (std::size_t i = 0; i < protocol.ranks.size(); ++i) {
    RankMetric rm;
    rm.rank = protocol.ranks[i];
    for (const auto& r : runs) rm.per_run.push_back(r.rank_accuracy[i]);
    summarize(rm.per_run, rm.mean, rm.ci95);
    rep.rank_accuracy.push_back(std::move(rm));
  }
  return rep;
}

std::vector<std::string> nonmated_subjects(const Gallery& gallery, double fraction, std::uint64_t seed, int run) {
  const std::size_t count =
      static_cast<std::size_t>(std::floor(fraction * static_cast<double>(gallery.subject_count()) + 1e-9));
  std::vector<std::size_t> idx(gallery.subject_count());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(run)));
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(gallery.subject(idx[i]).id);
  return out;
}

MetricReport split_runs(const Gallery& gallery, const ProbeSet& probes, const EvalProtocol& protocol,
                        const Scorer& scorer, std::string mode) {
  protocol.validate();
  probes.validate_against(gallery);
  if (protocol.nonmated_fraction > 0.0 &&
      std::floor(protocol.nonmated_fraction * static_cast<double>(gallery.subject_count()) + 1e-9) < 1.0) {
    throw Error(ErrorCode::InsufficientSubjects,
                "non-mated fraction " + std::to_string(protocol.nonmated_fraction) + " of " +
                    std::to_string(gallery.subject_count()) + " subjects selects none");
  }

  const auto runs = static_cast<std::size_t>(protocol.runs);
  std::vector<RunMetrics> results(runs);
  std::optional<ScoreStats> stats;
  // Runs execute sequentially; each scorer call parallelizes over probes.
  for (std::size_t r = 0; r < runs; ++r) {
    Gallery g = gallery;
    ProbeSet p = probes;
    if (protocol.nonmated_fraction > 0.0) {
      const auto chosen = nonmated_subjects(gallery, protocol.nonmated_fraction, protocol.seed, static_cast<int>(r));
      g = gallery.without(chosen);
      p = probes.with_nonmated(chosen);
    }
    const FusedScores fused = scorer(g, p);
    const auto truth = truth_columns(p, g);
    results[r] = evaluate_run(fused, truth, protocol);
    if (r == 0) {
      const ScorePartition raw = partition_scores(fused.base, fused.increment, truth);
      const auto r1 = static_cast<std::size_t>(std::floor(protocol.stats_fpir * raw.nonmated_maxima.size() + 1e-9));
      const auto r2 = static_cast<std::size_t>(std::floor(protocol.stats_far * raw.imposter.size() + 1e-9));
      try {
        stats = estimate_stats(raw, std::max<std::size_t>(r1, 1), std::max<std::size_t>(r2, 1));
      } catch (const Error&) {
        stats.reset();
      }
    }
  }
  MetricReport rep = aggregate_runs(results, protocol, std::move(mode));
  rep.stats = stats;
  return rep;
}

}  // namespace openset
