#include "openset/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "openset/error.hpp"
#include "openset/fusion.hpp"
#include "openset/metrics.hpp"
#include "openset/parallel.hpp"
#include "openset/rng.hpp"
#include "openset/scores.hpp"
#include "openset/stats.hpp"
#include "openset/theory.hpp"

namespace openset {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t tolerated(double rate, std::size_t n) {
  return static_cast<std::size_t>(std::floor(rate * static_cast<double>(n) + 1e-9));
}

// Maximum of n iid N(mu, sigma) draws from a single uniform, via
// P(max <= x) = Phi(z)^n.
double sample_max(Rng& rng, std::size_t n, double mu, double sigma) {
  const double log_p = std::log(rng.uniform_open()) / static_cast<double>(n);
  const double p = std::exp(log_p);
  const double z = p < 0.5 ? normal_quantile(p) : normal_quantile_upper(-std::expm1(log_p));
  return mu + sigma * z;
}

// Welford accumulator, merged in a fixed order for reproducible sums.
struct Moments {
  double n = 0.0, mean = 0.0, m2 = 0.0;

  void add(double x) {
    n += 1.0;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  void add(std::span<const double> xs) {
    for (double x : xs) add(x);
  }
  void merge(const Moments& o) {
    if (o.n == 0.0) return;
    if (n == 0.0) {
      *this = o;
      return;
    }
    const double total = n + o.n;
    const double d = o.mean - mean;
    mean += d * o.n / total;
    m2 += o.m2 + d * d * n * o.n / total;
    n = total;
  }
  double stddev() const { return n < 2.0 ? kNaN : std::sqrt(m2 / (n - 1.0)); }
};

struct PopulationMoments {
  Moments genuine, imposter, mated_knn, nonmated_knn;
  std::size_t n1 = 0, n2 = 0, n3 = 0, m = 0;

  void merge(const PopulationMoments& o) {
    genuine.merge(o.genuine);
    imposter.merge(o.imposter);
    mated_knn.merge(o.mated_knn);
    nonmated_knn.merge(o.nonmated_knn);
    n1 = o.n1;
    n2 = o.n2;
    n3 = o.n3;
    m = o.m;
  }
};

double summed_mean(std::vector<double> xs) {
  if (xs.empty() || std::any_of(xs.begin(), xs.end(), [](double v) { return std::isnan(v); })) return kNaN;
  std::sort(xs.begin(), xs.end());
  return mean(xs);
}

double summed_ci99(std::vector<double> xs) {
  if (xs.empty() || std::any_of(xs.begin(), xs.end(), [](double v) { return std::isnan(v); })) return kNaN;
  std::sort(xs.begin(), xs.end());
  return ci_half_width(xs, kZ99);
}

void check_grid(std::span<const double> grid) {
  if (grid.empty()) throw Error(ErrorCode::InvalidConfig, "sweep grid is empty");
  for (double v : grid) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidConfig, "sweep grid has a non-finite value");
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw Error(ErrorCode::InvalidConfig, "sweep grid must be strictly increasing");
  }
}

SweepPoint reduce_point(double value, const std::vector<TrialOutcome>& trials) {
  SweepPoint pt;
  pt.value = value;
  std::vector<double> with, without, delta, tar, tar_base;
  for (const auto& t : trials) {
    with.push_back(t.fnir_with);
    without.push_back(t.fnir_without);
    delta.push_back(t.fnir_with - t.fnir_without);
    tar.push_back(t.tar_with);
    tar_base.push_back(t.tar_without);
  }
  pt.fnir_mean = summed_mean(with);
  pt.fnir_ci99 = summed_ci99(with);
  pt.fnir_baseline = summed_mean(without);
  pt.fnir_baseline_ci99 = summed_ci99(without);
  pt.delta_mean = summed_mean(delta);
  pt.delta_ci99 = summed_ci99(delta);
  pt.tar = summed_mean(tar);
  pt.tar_baseline = summed_mean(tar_base);
  return pt;
}

// ---------------------------------------------------------------------------
// Feature-level trial

struct FeatureTrial {
  TrialOutcome outcome;
  PopulationMoments moments;
};

FeatureTrial run_feature_trial(const FeatureSimConfig& config, std::uint64_t stream_seed) {
  const auto [gallery, probes] = generate_feature_dataset_from(config, stream_seed);
  const auto truth = truth_columns(probes, gallery);
  const auto owners = gallery.media_owners();
  const Matrix base = per_subject_matrix(probes, gallery);
  const Matrix media = per_media_matrix(probes, gallery);

  const FusedScores plain = fuse_matrices(base, Matrix(), owners, FusionMode::none());
  const FusedScores fused = fuse_matrices(base, media, owners, FusionMode::local_score(config.k));

  const ScorePartition before = partition_scores(plain, truth);
  const ScorePartition after = partition_scores(fused, truth);

  FeatureTrial out;
  out.outcome.fnir_without =
      fnir_at_fpir(before.genuine, before.nonmated_maxima, before.rank1_correct, config.fpir_target,
                   config.threshold_only).value;
  out.outcome.fnir_with = fnir_at_fpir(after.genuine, after.nonmated_maxima, after.rank1_correct,
                                       config.fpir_target, config.threshold_only).value;
  out.outcome.tar_without = tar_at_far(before.genuine, before.imposter, config.far_target).value;
  out.outcome.tar_with = tar_at_far(after.genuine, after.imposter, config.far_target).value;

  const ScorePartition raw = partition_scores(fused.base, fused.increment, truth);
  auto& m = out.moments;
  m.genuine.add(raw.genuine);
  m.imposter.add(raw.imposter);
  m.mated_knn.add(raw.mated_knn);
  m.nonmated_knn.add(raw.nonmated_knn);
  m.n1 = raw.genuine.size();
  m.n2 = raw.nonmated_maxima.size();
  m.n3 = raw.imposter.size();
  m.m = raw.subjects;
  return out;
}

double feature_gap(const PopulationMoments& pm, const FeatureSimConfig& config) {
  ScoreStats s;
  s.mu1 = pm.genuine.mean;
  s.sigma1 = pm.genuine.stddev();
  s.mu2 = pm.imposter.mean;
  s.sigma2 = pm.imposter.stddev();
  s.mu3 = pm.mated_knn.mean;
  s.sigma3 = pm.mated_knn.stddev();
  s.mu4 = pm.nonmated_knn.mean;
  s.sigma4 = pm.nonmated_knn.stddev();
  s.n1 = pm.n1;
  s.n2 = pm.n2;
  s.n3 = pm.n3;
  s.m = pm.m;
  s.r1 = tolerated(config.fpir_target, pm.n2);
  s.r2 = tolerated(config.far_target, pm.n3);
  try {
    return open_set_condition(s).gap;
  } catch (const Error&) {
    return kNaN;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Score-matrix simulation

void ScoreSimConfig::validate() const {
  for (double v : {mu1, mu2, mu3, mu4, sigma1, sigma2, sigma3, sigma4}) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidConfig, "distribution parameters must be finite");
  }
  if (sigma1 < 0 || sigma2 < 0 || sigma3 < 0 || sigma4 < 0) {
    throw Error(ErrorCode::InvalidConfig, "standard deviations must be >= 0");
  }
  if (n_mated < 1 || n_nonmated < 1 || n_subjects < 1 || trials < 1) {
    throw Error(ErrorCode::InvalidConfig, "counts must be >= 1");
  }
  if (!(fpir_target > 0 && fpir_target < 1) || !(far_target > 0 && far_target < 1)) {
    throw Error(ErrorCode::InvalidConfig, "targets must lie in (0, 1)");
  }
}

ScoreStats ScoreSimConfig::as_stats() const {
  ScoreStats s{mu1, sigma1, mu2, sigma2, mu3, sigma3, mu4, sigma4};
  s.n1 = n_mated;
  s.n2 = n_nonmated;
  s.n3 = n_mated * (n_subjects - 1) + n_nonmated * n_subjects;
  s.m = n_subjects;
  s.r1 = tolerated(fpir_target, s.n2);
  s.r2 = tolerated(far_target, s.n3);
  return s;
}

TrialOutcome simulate_score_trial(const ScoreSimConfig& c, std::uint64_t stream_seed) {
  Rng rng(stream_seed);
  const bool full = c.sampling == RowSampling::Full;
  const std::size_t m = c.n_subjects;
  const double neg_inf = -std::numeric_limits<double>::infinity();

  std::vector<double> gen_before, gen_after, max_before, max_after, imp_before, imp_after;
  std::vector<std::uint8_t> r1_before, r1_after;
  gen_before.reserve(c.n_mated);
  gen_after.reserve(c.n_mated);
  max_before.reserve(c.n_nonmated);
  max_after.reserve(c.n_nonmated);
  std::vector<double> row;

  for (std::size_t i = 0; i < c.n_mated; ++i) {
    const double g = rng.normal(c.mu1, c.sigma1);
    const double knn = rng.normal(c.mu3, c.sigma3);
    double top = neg_inf;
    if (full) {
      row.resize(m - 1);
      for (double& v : row) v = rng.normal(c.mu2, c.sigma2);
      if (!row.empty()) top = *std::max_element(row.begin(), row.end());
      imp_before.insert(imp_before.end(), row.begin(), row.end());
    } else if (m > 1) {
      top = sample_max(rng, m - 1, c.mu2, c.sigma2);
    }
    // The genuine column comes first, so it wins ties under canonical order.
    gen_before.push_back(g);
    r1_before.push_back(g >= top);

    if (c.site == FusionSite::TheoremFaithful || g >= top) {
      gen_after.push_back(g + knn);
      r1_after.push_back(g + knn >= top);
      if (full) imp_after.insert(imp_after.end(), row.begin(), row.end());
    } else {
      gen_after.push_back(g);
      r1_after.push_back(0);
      if (full) {
        for (double v : row) imp_after.push_back(v == top ? v + knn : v);
      }
    }
  }

  for (std::size_t i = 0; i < c.n_nonmated; ++i) {
    double top;
    if (full) {
      row.resize(m);
      for (double& v : row) v = rng.normal(c.mu2, c.sigma2);
      top = *std::max_element(row.begin(), row.end());
    } else {
      top = sample_max(rng, m, c.mu2, c.sigma2);
    }
    const double knn = rng.normal(c.mu4, c.sigma4);
    max_before.push_back(top);
    max_after.push_back(top + knn);
    if (full) {
      imp_before.insert(imp_before.end(), row.begin(), row.end());
      for (double v : row) imp_after.push_back(v == top ? v + knn : v);
    }
  }

  TrialOutcome out;
  out.fnir_without = fnir_at_fpir(gen_before, max_before, r1_before, c.fpir_target, c.threshold_only).value;
  out.fnir_with = fnir_at_fpir(gen_after, max_after, r1_after, c.fpir_target, c.threshold_only).value;
  if (full) {
    out.tar_without = tar_at_far(gen_before, imp_before, c.far_target).value;
    out.tar_with = tar_at_far(gen_after, imp_after, c.far_target).value;
  } else {
    out.tar_without = out.tar_with = kNaN;
  }
  return out;
}

std::vector<TrialOutcome> simulate_score_matrices(const ScoreSimConfig& config) {
  config.validate();
  std::vector<TrialOutcome> out(config.trials);
  parallel_for(config.trials, [&](std::size_t t) {
    out[t] = simulate_score_trial(config, derive_seed(config.seed, 0, t));
  });
  return out;
}

// ---------------------------------------------------------------------------
// Feature datasets

void FeatureSimConfig::validate() const {
  if (n_classes < 2) throw Error(ErrorCode::InvalidConfig, "need at least 2 classes");
  if (samples_per_class < 1) throw Error(ErrorCode::InvalidConfig, "need at least 1 sample per class");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw Error(ErrorCode::InvalidConfig, "sigma must be finite and >= 0");
  if (!(nonmated_fraction >= 0.0 && nonmated_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "non-mated fraction must lie in [0, 1)");
  }
  if (k < 1) throw Error(ErrorCode::InvalidConfig, "k must be >= 1");
  if (trials < 1) throw Error(ErrorCode::InvalidConfig, "trials must be >= 1");
  if (!(fpir_target > 0 && fpir_target < 1) || !(far_target > 0 && far_target < 1)) {
    throw Error(ErrorCode::InvalidConfig, "targets must lie in (0, 1)");
  }
}

std::array<double, 2> class_anchor(std::size_t i, std::size_t n_classes) {
  const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_classes);
  return {std::cos(angle), std::sin(angle)};
}

std::pair<Gallery, ProbeSet> generate_feature_dataset(const FeatureSimConfig& config, std::size_t trial) {
  return generate_feature_dataset_from(config, derive_seed(config.seed, 0, trial));
}

std::pair<Gallery, ProbeSet> generate_feature_dataset_from(const FeatureSimConfig& config, std::uint64_t stream_seed) {
  config.validate();
  Rng rng(stream_seed);
  const std::size_t n = config.n_classes;
  const auto nonmated_count =
      static_cast<std::size_t>(std::floor(config.nonmated_fraction * static_cast<double>(n) + 1e-9));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < nonmated_count; ++i) {
    std::swap(order[i], order[i + rng.below(n - i)]);
  }
  std::vector<std::uint8_t> nonmated(n, 0);
  for (std::size_t i = 0; i < nonmated_count; ++i) nonmated[order[i]] = 1;

  auto draw = [&](const std::array<double, 2>& anchor) {
    const double x = anchor[0] + config.sigma * rng.normal();
    const double y = anchor[1] + config.sigma * rng.normal();
    const double raw[2] = {x, y};
    return normalize(raw);
  };

  Gallery gallery;
  ProbeSet probes;
  for (std::size_t c = 0; c < n; ++c) {
    const auto anchor = class_anchor(c, n);
    const std::string id = "c" + std::to_string(c);
    if (!nonmated[c]) {
      Subject s{id, {}};
      for (std::size_t j = 0; j < config.samples_per_class; ++j) {
        s.media.push_back(Embedding{id, "g" + std::to_string(j), draw(anchor)});
      }
      gallery.add_subject(std::move(s));
    }
    for (std::size_t j = 0; j < config.samples_per_class; ++j) {
      const std::string pid = id + "_p" + std::to_string(j);
      std::optional<std::string> truth;
      if (!nonmated[c]) truth = id;
      probes.add(Probe{pid, Embedding{id, pid, draw(anchor)}, std::move(truth)});
    }
  }
  return {std::move(gallery), std::move(probes)};
}

// ---------------------------------------------------------------------------
// Sweeps

std::string to_string(SweepParam p) {
  switch (p) {
    case SweepParam::K: return "k";
    case SweepParam::Sigma: return "sigma";
    case SweepParam::Mu3: return "mu3";
  }
  return "unknown";
}

SweepParam parse_sweep_param(const std::string& name) {
  if (name == "k") return SweepParam::K;
  if (name == "sigma") return SweepParam::Sigma;
  if (name == "mu3") return SweepParam::Mu3;
  throw Error(ErrorCode::InvalidConfig, "unknown sweep parameter '" + name + "'");
}

SweepResult sweep(SweepParam param, std::span<const double> grid, const ScoreSimConfig& base) {
  if (param != SweepParam::Mu3) {
    throw Error(ErrorCode::InvalidConfig, "score-matrix simulation sweeps mu3 only");
  }
  check_grid(grid);
  base.validate();
  const std::size_t trials = base.trials;
  std::vector<TrialOutcome> outcomes(grid.size() * trials);
  parallel_for(outcomes.size(), [&](std::size_t idx) {
    const std::size_t p = idx / trials, t = idx % trials;
    ScoreSimConfig c = base;
    c.mu3 = grid[p];
    outcomes[idx] = simulate_score_trial(c, derive_seed(base.seed, p, t));
  });

  SweepResult result;
  result.param = param;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    std::vector<TrialOutcome> slice(outcomes.begin() + static_cast<std::ptrdiff_t>(p * trials),
                                    outcomes.begin() + static_cast<std::ptrdiff_t>((p + 1) * trials));
    SweepPoint pt = reduce_point(grid[p], slice);
    ScoreSimConfig c = base;
    c.mu3 = grid[p];
    try {
      pt.gap = open_set_condition(c.as_stats()).gap;
    } catch (const Error&) {
      pt.gap = kNaN;
    }
    result.points.push_back(pt);
  }
  return result;
}

SweepResult sweep(SweepParam param, std::span<const double> grid, const FeatureSimConfig& base) {
  if (param == SweepParam::Mu3) throw Error(ErrorCode::InvalidConfig, "feature simulation sweeps k or sigma");
  check_grid(grid);
  base.validate();

  std::vector<FeatureSimConfig> configs;
  for (double v : grid) {
    FeatureSimConfig c = base;
    if (param == SweepParam::K) {
      if (v < 1.0 || v != std::floor(v)) throw Error(ErrorCode::InvalidConfig, "k grid values must be integers >= 1");
      c.k = static_cast<int>(v);
    } else {
      if (v < 0.0) throw Error(ErrorCode::InvalidConfig, "sigma grid values must be >= 0");
      c.sigma = v;
    }
    configs.push_back(c);
  }

  const std::size_t trials = base.trials;
  std::vector<FeatureTrial> outcomes(grid.size() * trials);
  parallel_for(outcomes.size(), [&](std::size_t idx) {
    const std::size_t p = idx / trials, t = idx % trials;
    outcomes[idx] = run_feature_trial(configs[p], derive_seed(base.seed, p, t));
  });

  SweepResult result;
  result.param = param;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    std::vector<TrialOutcome> slice;
    PopulationMoments pm;
    for (std::size_t t = 0; t < trials; ++t) {
      slice.push_back(outcomes[p * trials + t].outcome);
      pm.merge(outcomes[p * trials + t].moments);
    }
    SweepPoint pt = reduce_point(grid[p], slice);
    pt.gap = feature_gap(pm, configs[p]);
    result.points.push_back(pt);
  }
  return result;
}

SweepResult simulate_features(const FeatureSimConfig& config) {
  const double k = config.k;
  return sweep(SweepParam::K, std::span<const double>(&k, 1), config);
}

SweepResult simulate_scores(const ScoreSimConfig& config) {
  const double mu3 = config.mu3;
  return sweep(SweepParam::Mu3, std::span<const double>(&mu3, 1), config);
}

GapCorrelation gap_improvement_correlation(std::span<const SweepResult> sweeps) {
  std::vector<double> gaps, gains;
  for (const auto& s : sweeps) {
    for (const auto& p : s.points) {
      gaps.push_back(p.gap);
      gains.push_back(p.fnir_baseline - p.fnir_mean);
    }
  }
  if (gaps.size() < 3) throw Error(ErrorCode::DegenerateSample, "gap correlation needs at least 3 points");
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    if (!std::isfinite(gaps[i]) || !std::isfinite(gains[i])) {
      throw Error(ErrorCode::DegenerateSample, "sweep point without a finite gap or improvement");
    }
  }
  GapCorrelation out;
  out.pearson_r = pearson(gaps, gains);
  out.slope = regression_slope(gaps, gains);
  out.points = gaps.size();
  return out;
}

std::vector<double> sign_changes(const SweepResult& result) {
  std::vector<double> out;
  const SweepPoint* prev = nullptr;
  for (const auto& p : result.points) {
    if (p.delta_mean == 0.0 || std::isnan(p.delta_mean)) continue;
    if (prev && std::signbit(prev->delta_mean) != std::signbit(p.delta_mean)) {
      const double w = prev->delta_mean / (prev->delta_mean - p.delta_mean);
      out.push_back(prev->value + w * (p.value - prev->value));
    }
    prev = &p;
  }
  return out;
}

}  // namespace openset
