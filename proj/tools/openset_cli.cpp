// openset: batch command-line front end for the scoring, evaluation,
// prediction, clustering and simulation library.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "openset/clustering.hpp"
#include "openset/error.hpp"
#include "openset/feature_csv.hpp"
#include "openset/fusion.hpp"
#include "openset/metrics.hpp"
#include "openset/parallel.hpp"
#include "openset/report_io.hpp"
#include "openset/simulate.hpp"
#include "openset/theory.hpp"

#ifndef OPENSET_VERSION
#define OPENSET_VERSION "0.0.0"
#endif

namespace {

using namespace openset;
using ojson = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitConfig = 3;

// Raised for flag combinations that parse but make no sense together.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::KTooLarge:
    case ErrorCode::InvalidConfig:
      return kExitConfig;
    default:
      return kExitInput;
  }
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Shared flag groups

struct Globals {
  std::uint64_t seed = 0;
  std::string threads;
  std::string out;
  std::string format;
};

std::size_t resolve_threads(const std::string& flag) {
  std::string value = flag;
  if (value.empty()) {
    if (const char* env = std::getenv("OPENSET_SCORE_THREADS")) value = env;
  }
  if (value.empty() || value == "auto") return 0;
  std::size_t n = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), n);
  if (ec != std::errc() || ptr != value.data() + value.size() || n == 0) {
    throw ConfigError("--threads expects a positive integer or 'auto', got '" + value + "'");
  }
  return n;
}

struct ModeFlags {
  std::string mode = "local";
  int k = 1;
  double constant = 1.0;
  bool clamp_k = false;
  bool per_subject_knn = false;
  std::string center = "mean";
  std::string clusters = "inf";
  int cluster_iterations = 100;
  CLI::Option* k_opt = nullptr;
  CLI::Option* constant_opt = nullptr;
};

void add_mode_flags(CLI::App* cmd, ModeFlags& f) {
  cmd->add_option("--mode", f.mode, "Fusion: local, naive, none, max, min, mean, addconst, double, avgtopk")
      ->capture_default_str();
  f.k_opt = cmd->add_option("--k", f.k, "k-th nearest neighbor (k-NN modes only)")->capture_default_str();
  f.constant_opt = cmd->add_option("--constant", f.constant, "Increment for --mode addconst")->capture_default_str();
  cmd->add_flag("--clamp-k", f.clamp_k, "Use the smallest similarity when k exceeds the media count");
  cmd->add_flag("--per-subject-knn", f.per_subject_knn, "Take the k-NN score within each subject's media");
  cmd->add_option("--center", f.center, "Per-subject center: mean or renormalized")->capture_default_str();
  cmd->add_option("--clusters", f.clusters, "k-means centroids per subject, or 'inf'")->capture_default_str();
  cmd->add_option("--cluster-iterations", f.cluster_iterations, "k-means iteration cap")->capture_default_str();
}

FusionMode resolve_mode(const ModeFlags& f) {
  FusionMode mode{parse_fusion_kind(f.mode), f.k, f.constant};
  if (mode.kind == FusionKind::AddConst && f.constant_opt->count() == 0) mode.constant = 1.0;
  if (f.k_opt->count() > 0 && !mode.uses_knn()) {
    throw ConfigError("--k applies only to k-NN modes (local, naive, avgtopk), not '" + f.mode + "'");
  }
  if (f.constant_opt->count() > 0 && mode.kind != FusionKind::AddConst) {
    throw ConfigError("--constant applies only to --mode addconst");
  }
  mode.validate();
  return mode;
}

FusionOptions resolve_options(const ModeFlags& f) {
  FusionOptions o;
  o.clamp_k = f.clamp_k;
  o.per_subject_knn = f.per_subject_knn;
  if (f.center == "mean") {
    o.center = CenterMode::Mean;
  } else if (f.center == "renormalized") {
    o.center = CenterMode::RenormalizedMean;
  } else {
    throw ConfigError("--center expects 'mean' or 'renormalized'");
  }
  return o;
}

std::optional<std::size_t> resolve_clusters(const std::string& text) {
  if (text == "inf") return std::nullopt;
  std::size_t c = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), c);
  if (ec != std::errc() || ptr != text.data() + text.size() || c == 0) {
    throw ConfigError("--clusters expects a positive integer or 'inf', got '" + text + "'");
  }
  return c;
}

ClusterConfig cluster_config(const ModeFlags& f, std::uint64_t seed) {
  ClusterConfig cfg;
  cfg.clusters_per_subject = resolve_clusters(f.clusters);
  cfg.max_iterations = f.cluster_iterations;
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

// The unlimited setting returns the input untouched, so omitting the flag
// and passing 'inf' cannot differ.
Gallery prepare_gallery(const Gallery& g, const ClusterConfig& cfg) {
  if (!cfg.clusters_per_subject) return g;
  return cluster_gallery(g, cfg).gallery;
}

ojson mode_json(const ModeFlags& f, const FusionMode& mode) {
  ojson j;
  j["mode"] = mode.name();
  j["k"] = mode.k;
  j["constant"] = mode.constant;
  j["clamp_k"] = f.clamp_k;
  j["per_subject_knn"] = f.per_subject_knn;
  j["center"] = f.center;
  j["clusters"] = f.clusters;
  j["cluster_iterations"] = f.cluster_iterations;
  return j;
}

// ---------------------------------------------------------------------------
// Output and manifest

struct Run {
  std::string command;
  std::vector<std::string> argv;
  ojson config = ojson::object();
  ojson inputs = ojson::array();
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void input(const std::string& role, const std::string& path) {
    ojson e;
    e["role"] = role;
    e["path"] = path;
    e["sha256"] = sha256_hex(slurp(path));
    inputs.push_back(e);
  }
};

void emit(const Globals& g, Run& run, const std::string& body) {
  if (g.out.empty()) {
    std::cout << body;
    std::cout.flush();
    return;
  }
  {
    std::ofstream out(g.out, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + g.out + "'");
    out << body;
    if (!out) throw Error(ErrorCode::IoError, "write failed for '" + g.out + "'");
  }
  ojson m;
  m["tool"] = "openset";
  m["version"] = OPENSET_VERSION;
  m["command"] = run.command;
  m["argv"] = run.argv;
  m["seed"] = g.seed;
  m["threads"] = thread_count();
  m["config"] = run.config;
  m["inputs"] = run.inputs;
  ojson output;
  output["path"] = g.out;
  output["format"] = g.format;
  output["sha256"] = sha256_hex(body);
  m["output"] = output;
  m["duration_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - run.start).count();
  std::ofstream mf(g.out + ".manifest.json", std::ios::binary);
  if (!mf) throw Error(ErrorCode::IoError, "cannot write manifest for '" + g.out + "'");
  mf << m.dump(2) << '\n';
}

void require_format(Globals& g, const std::string& fallback, std::initializer_list<const char*> allowed) {
  if (g.format.empty()) g.format = fallback;
  for (const char* a : allowed) {
    if (g.format == a) return;
  }
  throw ConfigError("--format " + g.format + " is not available for this command");
}

std::string score_json(const Matrix& scores, const ProbeSet& probes, const Gallery& gallery) {
  ojson j;
  j["subjects"] = ojson::array();
  for (const auto& s : gallery.subjects()) j["subjects"].push_back(s.id);
  j["probes"] = ojson::array();
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    ojson row;
    row["probe_id"] = probes[r].probe_id;
    row["scores"] = std::vector<double>(scores.row(r).begin(), scores.row(r).end());
    j["probes"].push_back(row);
  }
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Commands

struct ScoreArgs {
  std::string gallery, probes;
  ModeFlags mode;
};

void cmd_score(Globals& g, Run& run, const ScoreArgs& a) {
  require_format(g, "csv", {"csv", "json"});
  const FusionMode mode = resolve_mode(a.mode);
  const FusionOptions options = resolve_options(a.mode);
  const ClusterConfig ccfg = cluster_config(a.mode, g.seed);
  run.config = mode_json(a.mode, mode);
  run.input("gallery", a.gallery);
  run.input("probes", a.probes);

  const Gallery gallery = prepare_gallery(read_gallery(a.gallery), ccfg);
  const ProbeSet probes = read_probes(a.probes);
  probes.validate_against(gallery);
  const FusedScores fused = score_matrix(probes, gallery, mode, options);

  std::ostringstream out;
  if (g.format == "csv") {
    write_score_csv(out, fused.scores, probes, gallery);
  } else {
    out << score_json(fused.scores, probes, gallery);
  }
  emit(g, run, out.str());
}

struct EvalArgs {
  std::string gallery, probes, scores;
  ModeFlags mode;
  EvalProtocol protocol;
};

MetricReport eval_precomputed(const EvalArgs& a, const ProbeSet& probes) {
  std::ifstream in(a.scores);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + a.scores + "'");
  const ScoreTable table = read_score_csv(in, a.scores);
  if (table.probe_ids.size() != probes.size()) {
    throw Error(ErrorCode::DimensionMismatch, "score file has " + std::to_string(table.probe_ids.size()) +
                                                  " rows but the probe file has " + std::to_string(probes.size()));
  }
  std::vector<std::optional<std::size_t>> truth;
  for (std::size_t r = 0; r < probes.size(); ++r) {
    if (probes[r].probe_id != table.probe_ids[r]) {
      throw Error(ErrorCode::ParseError, a.scores + ": row " + std::to_string(r + 1) + " is probe '" +
                                             table.probe_ids[r] + "', expected '" + probes[r].probe_id + "'");
    }
    if (!probes[r].truth) {
      truth.push_back(std::nullopt);
      continue;
    }
    const auto it = std::find(table.subject_ids.begin(), table.subject_ids.end(), *probes[r].truth);
    if (it == table.subject_ids.end()) {
      throw Error(ErrorCode::UnknownTruthSubject,
                  "probe '" + probes[r].probe_id + "' names unknown subject '" + *probes[r].truth + "'");
    }
    truth.push_back(static_cast<std::size_t>(it - table.subject_ids.begin()));
  }
  FusedScores fused;
  fused.base = table.scores;
  fused.scores = table.scores;
  fused.mask.assign(table.scores.rows() * table.scores.cols(), 0);
  fused.increment.assign(table.scores.rows(), 0.0);
  fused.knn.assign(table.scores.rows(), 0.0);
  EvalProtocol single = a.protocol;
  single.runs = 1;
  return aggregate_runs({evaluate_run(fused, truth, single)}, single, "precomputed");
}

void cmd_eval(Globals& g, Run& run, EvalArgs& a) {
  require_format(g, "json", {"csv", "json"});
  a.protocol.seed = g.seed;
  a.protocol.validate();
  ojson cfg;
  cfg["fpir_targets"] = a.protocol.fpir_targets;
  cfg["far_targets"] = a.protocol.far_targets;
  cfg["ranks"] = a.protocol.ranks;
  cfg["threshold_only"] = a.protocol.threshold_only;

  MetricReport report;
  if (!a.scores.empty()) {
    if (!a.gallery.empty()) throw ConfigError("pass either --scores or --gallery, not both");
    cfg["source"] = "scores";
    run.config = cfg;
    run.input("scores", a.scores);
    run.input("probes", a.probes);
    report = eval_precomputed(a, read_probes(a.probes));
  } else {
    if (a.gallery.empty()) throw ConfigError("eval needs --gallery or --scores");
    const FusionMode mode = resolve_mode(a.mode);
    const FusionOptions options = resolve_options(a.mode);
    const ClusterConfig ccfg = cluster_config(a.mode, g.seed);
    cfg["source"] = "features";
    cfg["runs"] = a.protocol.runs;
    cfg["nonmated_fraction"] = a.protocol.nonmated_fraction;
    cfg["scoring"] = mode_json(a.mode, mode);
    run.config = cfg;
    run.input("gallery", a.gallery);
    run.input("probes", a.probes);
    const Gallery gallery = read_gallery(a.gallery);
    const ProbeSet probes = read_probes(a.probes);
    probes.validate_against(gallery);
    const Scorer scorer = [&](const Gallery& gal, const ProbeSet& ps) {
      return score_matrix(ps, prepare_gallery(gal, ccfg), mode, options);
    };
    report = split_runs(gallery, probes, a.protocol, scorer, mode.name());
  }

  std::ostringstream out;
  if (g.format == "json") {
    out << to_json(report) << '\n';
  } else {
    write_report_csv(out, report);
  }
  emit(g, run, out.str());
}

struct PredictArgs {
  std::string stats, gallery, probes;
  ModeFlags mode;
  std::optional<std::size_t> r1, r2;
  double fpir = 0.01, far = 0.001;
  bool allow_zero_sigma = false;
};

void cmd_predict(Globals& g, Run& run, const PredictArgs& a) {
  require_format(g, "json", {"json"});
  ScoreStats stats;
  ojson cfg;
  if (!a.stats.empty()) {
    if (!a.gallery.empty()) throw ConfigError("pass either --stats or --gallery, not both");
    cfg["source"] = "stats";
    run.input("stats", a.stats);
    stats = stats_from_json(slurp(a.stats), a.stats);
  } else {
    if (a.gallery.empty() || a.probes.empty()) throw ConfigError("predict needs --stats or --gallery with --probes");
    const FusionMode mode = resolve_mode(a.mode);
    const ClusterConfig ccfg = cluster_config(a.mode, g.seed);
    cfg["source"] = "features";
    cfg["scoring"] = mode_json(a.mode, mode);
    run.input("gallery", a.gallery);
    run.input("probes", a.probes);
    const Gallery gallery = prepare_gallery(read_gallery(a.gallery), ccfg);
    const ProbeSet probes = read_probes(a.probes);
    probes.validate_against(gallery);
    const FusedScores fused = score_matrix(probes, gallery, mode, resolve_options(a.mode));
    const auto truth = truth_columns(probes, gallery);
    const ScorePartition raw = partition_scores(fused.base, fused.increment, truth);
    // At least one tolerated exceedance, as in the eval stats summary.
    const auto r1 = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(a.fpir * raw.nonmated_maxima.size() + 1e-9)));
    const auto r2 = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(a.far * raw.imposter.size() + 1e-9)));
    stats = estimate_stats(raw, r1, r2, a.allow_zero_sigma);
  }
  if (a.r1) stats.r1 = *a.r1;
  if (a.r2) stats.r2 = *a.r2;
  cfg["fpir"] = a.fpir;
  cfg["far"] = a.far;
  cfg["r1"] = stats.r1;
  cfg["r2"] = stats.r2;
  cfg["allow_zero_sigma"] = a.allow_zero_sigma;
  run.config = cfg;
  emit(g, run, to_json(predict(stats)) + "\n");
}

struct SimArgs {
  std::string kind;  // "features" or "scores"; empty picks by parameter
  FeatureSimConfig features;
  ScoreSimConfig scores;
  std::string site = "theorem";
  std::string sampling = "maxima";
  std::string param, grid;
  std::size_t trials = 1000;
  bool threshold_only = false;
  double fpir = 0.01, far = 0.001;
};

void add_sim_flags(CLI::App* cmd, SimArgs& a) {
  auto& f = a.features;
  auto& s = a.scores;
  cmd->add_option("--trials", a.trials, "Monte Carlo trials per point")->capture_default_str();
  cmd->add_option("--fpir", a.fpir, "FPIR target")->capture_default_str();
  cmd->add_option("--far", a.far, "FAR target")->capture_default_str();
  cmd->add_flag("--threshold-only", a.threshold_only, "FNIR counts only threshold failures");
  cmd->add_option("--classes", f.n_classes, "Feature sim: classes N")->capture_default_str();
  cmd->add_option("--samples", f.samples_per_class, "Feature sim: samples per class M")->capture_default_str();
  cmd->add_option("--sigma", f.sigma, "Feature sim: within-class spread")->capture_default_str();
  cmd->add_option("--nonmated-fraction", f.nonmated_fraction, "Feature sim: non-mated class fraction")
      ->capture_default_str();
  cmd->add_option("--k", f.k, "Feature sim: LocalScore k")->capture_default_str();
  for (auto [name, ptr] : {std::pair{"--mu1", &s.mu1}, {"--sigma1", &s.sigma1}, {"--mu2", &s.mu2},
                           {"--sigma2", &s.sigma2}, {"--mu3", &s.mu3}, {"--sigma3", &s.sigma3},
                           {"--mu4", &s.mu4}, {"--sigma4", &s.sigma4}}) {
    cmd->add_option(name, *ptr, "Score sim distribution parameter")->capture_default_str();
  }
  cmd->add_option("--mated", s.n_mated, "Score sim: mated probes")->capture_default_str();
  cmd->add_option("--nonmated", s.n_nonmated, "Score sim: non-mated probes")->capture_default_str();
  cmd->add_option("--subjects", s.n_subjects, "Score sim: gallery subjects")->capture_default_str();
  cmd->add_option("--site", a.site, "Score sim: theorem or algorithm")->capture_default_str();
  cmd->add_option("--sampling", a.sampling, "Score sim: maxima or full")->capture_default_str();
}

void finish_sim_config(SimArgs& a, std::uint64_t seed) {
  a.features.trials = a.scores.trials = a.trials;
  a.features.seed = a.scores.seed = seed;
  a.features.fpir_target = a.scores.fpir_target = a.fpir;
  a.features.far_target = a.scores.far_target = a.far;
  a.features.threshold_only = a.scores.threshold_only = a.threshold_only;
  if (a.site == "theorem") {
    a.scores.site = FusionSite::TheoremFaithful;
  } else if (a.site == "algorithm") {
    a.scores.site = FusionSite::AlgorithmFaithful;
  } else {
    throw ConfigError("--site expects 'theorem' or 'algorithm'");
  }
  if (a.sampling == "maxima") {
    a.scores.sampling = RowSampling::RowMaxima;
  } else if (a.sampling == "full") {
    a.scores.sampling = RowSampling::Full;
  } else {
    throw ConfigError("--sampling expects 'maxima' or 'full'");
  }
}

ojson sim_json(const SimArgs& a, bool scores) {
  ojson j;
  j["kind"] = scores ? "scores" : "features";
  j["trials"] = a.trials;
  j["fpir"] = a.fpir;
  j["far"] = a.far;
  j["threshold_only"] = a.threshold_only;
  if (scores) {
    const auto& s = a.scores;
    j["mu1"] = s.mu1;
    j["sigma1"] = s.sigma1;
    j["mu2"] = s.mu2;
    j["sigma2"] = s.sigma2;
    j["mu3"] = s.mu3;
    j["sigma3"] = s.sigma3;
    j["mu4"] = s.mu4;
    j["sigma4"] = s.sigma4;
    j["mated"] = s.n_mated;
    j["nonmated"] = s.n_nonmated;
    j["subjects"] = s.n_subjects;
    j["site"] = a.site;
    j["sampling"] = a.sampling;
  } else {
    const auto& f = a.features;
    j["classes"] = f.n_classes;
    j["samples"] = f.samples_per_class;
    j["sigma"] = f.sigma;
    j["nonmated_fraction"] = f.nonmated_fraction;
    j["k"] = f.k;
  }
  return j;
}

void emit_sweep(Globals& g, Run& run, const SweepResult& r) {
  std::ostringstream out;
  if (g.format == "csv") {
    write_sweep_csv(out, r);
  } else {
    out << to_json(r) << '\n';
  }
  emit(g, run, out.str());
}

bool wants_scores(const std::string& kind, bool default_scores) {
  if (kind.empty()) return default_scores;
  if (kind == "scores") return true;
  if (kind == "features") return false;
  throw ConfigError("--kind expects 'features' or 'scores'");
}

void cmd_simulate(Globals& g, Run& run, SimArgs& a) {
  require_format(g, "csv", {"csv", "json"});
  finish_sim_config(a, g.seed);
  const bool scores = wants_scores(a.kind, false);
  run.config = sim_json(a, scores);
  emit_sweep(g, run, scores ? simulate_scores(a.scores) : simulate_features(a.features));
}

void cmd_sweep(Globals& g, Run& run, SimArgs& a) {
  require_format(g, "csv", {"csv", "json"});
  finish_sim_config(a, g.seed);
  const SweepParam param = parse_sweep_param(a.param);
  const std::vector<double> grid = parse_grid(a.grid);
  const bool scores = wants_scores(a.kind, param == SweepParam::Mu3);
  run.config = sim_json(a, scores);
  run.config["param"] = a.param;
  run.config["grid"] = grid;
  emit_sweep(g, run, scores ? sweep(param, grid, a.scores) : sweep(param, grid, a.features));
}

struct ClusterArgs {
  std::string gallery;
  std::string clusters;
  int iterations = 100;
};

void cmd_cluster(Globals& g, Run& run, const ClusterArgs& a) {
  require_format(g, "csv", {"csv"});
  ClusterConfig cfg;
  cfg.clusters_per_subject = resolve_clusters(a.clusters);
  cfg.max_iterations = a.iterations;
  cfg.seed = g.seed;
  cfg.validate();
  run.input("gallery", a.gallery);
  const CompactGallery compact = cluster_gallery(read_gallery(a.gallery), cfg);
  run.config["clusters"] = a.clusters;
  run.config["cluster_iterations"] = a.iterations;
  run.config["original_media"] = compact.original_media;
  run.config["compact_media"] = compact.gallery.total_media();
  run.config["compression_ratio"] = compact.compression_ratio();

  std::ostringstream out;
  write_gallery(out, compact.gallery);
  emit(g, run, out.str());
  // Keep stdout clean when it carries the gallery itself.
  std::ostream& note = g.out.empty() ? std::cerr : std::cout;
  note << "compression_ratio " << format_double(compact.compression_ratio()) << " (" << compact.gallery.total_media()
       << " of " << compact.original_media << " media)\n";
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Open-set scoring, evaluation, prediction, clustering and simulation"};
  app.set_version_flag("--version", OPENSET_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads: n or auto (fallback: OPENSET_SCORE_THREADS)");
  app.add_option("--out", g.out, "Output path (default stdout); a manifest is written next to it");
  app.add_option("--format", g.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Fused score matrix for probes against a gallery");
  score_cmd->add_option("--gallery", score.gallery, "Gallery feature CSV")->required();
  score_cmd->add_option("--probes", score.probes, "Probe feature CSV")->required();
  add_mode_flags(score_cmd, score.mode);

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "FNIR@FPIR, TAR@FAR and rank accuracy");
  eval_cmd->add_option("--gallery", eval.gallery, "Gallery feature CSV");
  eval_cmd->add_option("--probes", eval.probes, "Probe feature CSV (truth labels)")->required();
  eval_cmd->add_option("--scores", eval.scores, "Precomputed score CSV, evaluated once with the probe labels");
  add_mode_flags(eval_cmd, eval.mode);
  eval_cmd->add_option("--fpir", eval.protocol.fpir_targets, "FPIR targets")->delimiter(',')->capture_default_str();
  eval_cmd->add_option("--far", eval.protocol.far_targets, "FAR targets")->delimiter(',')->capture_default_str();
  eval_cmd->add_option("--ranks", eval.protocol.ranks, "Ranks for rank-k accuracy")->delimiter(',')
      ->capture_default_str();
  eval_cmd->add_option("--runs", eval.protocol.runs, "Random mated/non-mated splits")->capture_default_str();
  eval_cmd->add_option("--nonmated-fraction", eval.protocol.nonmated_fraction,
                       "Subjects made non-mated per run; 0 keeps the probe labels")
      ->capture_default_str();
  eval_cmd->add_flag("--threshold-only", eval.protocol.threshold_only, "FNIR counts only threshold failures");

  PredictArgs pred;
  auto* pred_cmd = app.add_subcommand("predict", "Closed-form verdict on whether k-NN fusion helps");
  pred_cmd->add_option("--stats", pred.stats, "ScoreStats JSON");
  pred_cmd->add_option("--gallery", pred.gallery, "Gallery feature CSV (estimate stats from data)");
  pred_cmd->add_option("--probes", pred.probes, "Probe feature CSV");
  add_mode_flags(pred_cmd, pred.mode);
  pred_cmd->add_option("--r1", pred.r1, "Tolerated non-mated maxima above threshold");
  pred_cmd->add_option("--r2", pred.r2, "Tolerated imposter scores above threshold");
  pred_cmd->add_option("--fpir", pred.fpir, "Rate giving r1 from data")->capture_default_str();
  pred_cmd->add_option("--far", pred.far, "Rate giving r2 from data")->capture_default_str();
  pred_cmd->add_flag("--allow-zero-sigma", pred.allow_zero_sigma, "Accept constant score populations");

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo run at one configuration");
  sim_cmd->add_option("--kind", sim.kind, "features (default) or scores");
  add_sim_flags(sim_cmd, sim);

  SimArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Monte Carlo sweep over k, sigma or mu3");
  sweep_cmd->add_option("--param", sw.param, "k, sigma or mu3")->required();
  sweep_cmd->add_option("--grid", sw.grid, "a:b:step, a:b or a comma list")->required();
  sweep_cmd->add_option("--kind", sw.kind, "features or scores (default by parameter)");
  add_sim_flags(sweep_cmd, sw);

  ClusterArgs cl;
  auto* cluster_cmd = app.add_subcommand("cluster", "Compact a gallery with per-subject k-means");
  cluster_cmd->add_option("--gallery", cl.gallery, "Gallery feature CSV")->required();
  cluster_cmd->add_option("--clusters", cl.clusters, "Centroids per subject, or 'inf'")->required();
  cluster_cmd->add_option("--cluster-iterations", cl.iterations, "k-means iteration cap")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  Run run;
  run.argv.assign(argv + 1, argv + argc);
  try {
    set_thread_count(resolve_threads(g.threads));
    if (score_cmd->parsed()) {
      run.command = "score";
      cmd_score(g, run, score);
    } else if (eval_cmd->parsed()) {
      run.command = "eval";
      cmd_eval(g, run, eval);
    } else if (pred_cmd->parsed()) {
      run.command = "predict";
      cmd_predict(g, run, pred);
    } else if (sim_cmd->parsed()) {
      run.command = "simulate";
      cmd_simulate(g, run, sim);
    } else if (sweep_cmd->parsed()) {
      run.command = "sweep";
      cmd_sweep(g, run, sw);
    } else if (cluster_cmd->parsed()) {
      run.command = "cluster";
      cmd_cluster(g, run, cl);
    }
  } catch (const ConfigError& e) {
    std::cerr << "openset: configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "openset: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "openset: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) { return run_cli(argc, argv); }
