#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfseq/baselines.hpp"
#include "cfseq/encoder.hpp"
#include "cfseq/event_log.hpp"
#include "cfseq/evolution.hpp"
#include "cfseq/markov.hpp"
#include "cfseq/predictor.hpp"
#include "cfseq/synthesize.hpp"

namespace cfseq {

struct DatasetSpec {
  /// Either a CSV log with its schema config, or a synthetic log.
  std::filesystem::path csv;
  std::filesystem::path schema;
  bool synthetic = true;
  SynthesisOptions synthesis{};
};

struct ConfigEntry {
  std::string name;
  /// JSON object, see EvoConfig::from_name.
  std::string overrides;
};

/// Everything needed to reproduce an experiment.
struct ExperimentSpec {
  DatasetSpec dataset;
  std::vector<ConfigEntry> configs;
  std::vector<BaselineKind> baselines{BaselineKind::RandomGenerator, BaselineKind::SampleBasedGenerator,
                                      BaselineKind::CaseBasedGenerator};
  std::size_t n_factuals = 10;
  std::size_t counterfactuals_per_factual = 50;
  std::size_t cycles = 100;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;

  std::size_t max_len = 25;
  double test_fraction = 0.2;
  double validation_fraction = 0.2;
  double smoothing = 1e-6;
  std::size_t n_bins = 10;
  TrainingOptions training{};
  /// Shell command implementing the external scoring protocol; empty = built-in predictor.
  std::string external_predictor;
  /// Worker threads for independent runs; 0 = hardware concurrency.
  std::size_t threads = 0;

  void validate() const;
  static ExperimentSpec from_json(std::string_view text);
  static ExperimentSpec load(const std::filesystem::path& path);
  std::string to_json() const;
};

/// Data, encoder and fitted models shared by all generators of an experiment.
struct Workspace {
  EventLog train_log;
  EventLog test_log;
  EncoderSpec encoder;
  std::vector<EncodedTrace> train;
  std::vector<EncodedTrace> test;
  MarkovFeasibilityModel feasibility_model;
  std::shared_ptr<const OutcomePredictor> predictor;
  PredictionMetrics train_metrics;
  PredictionMetrics validation_metrics;
  PredictionMetrics test_metrics;
  /// Indices into `test`, class-balanced when both outcomes exist.
  std::vector<std::size_t> factuals;

  EvolutionContext context(const ViabilityEvaluator& evaluator) const;
};

/// Loads or synthesizes the log, preprocesses, splits, fits the encoder and
/// Markov model, trains (or attaches) the predictor and samples factuals.
Workspace prepare_workspace(const ExperimentSpec& spec);

/// Alternates between outcome classes (each shuffled under `seed`) until `n`
/// indices are chosen or the set is exhausted.
std::vector<std::size_t> sample_factuals(std::span<const EncodedTrace> test, std::size_t n,
                                         std::uint64_t seed);

struct GeneratorOutput {
  /// Best first.
  std::vector<ScoredCandidate> candidates;
  /// Empty for non-iterative generators.
  std::vector<CycleStats> trajectory;
};

class CounterfactualGenerator {
 public:
  virtual ~CounterfactualGenerator() = default;
  virtual std::string name() const = 0;
  /// Produces at least `n` candidates (fewer only if the generator cannot).
  virtual GeneratorOutput generate(const ViabilityEvaluator& evaluator, const Workspace& workspace,
                                   std::size_t n, std::uint64_t seed) const = 0;
};

class EvolutionaryGenerator final : public CounterfactualGenerator {
 public:
  explicit EvolutionaryGenerator(EvoConfig config) : config_(std::move(config)) {}
  std::string name() const override { return config_.name(); }
  GeneratorOutput generate(const ViabilityEvaluator& evaluator, const Workspace& workspace, std::size_t n,
                           std::uint64_t seed) const override;
  const EvoConfig& config() const noexcept { return config_; }

 private:
  EvoConfig config_;
};

class BaselineGenerator final : public CounterfactualGenerator {
 public:
  explicit BaselineGenerator(BaselineKind kind) : kind_(kind) {}
  std::string name() const override { return std::string{to_string(kind_)}; }
  GeneratorOutput generate(const ViabilityEvaluator& evaluator, const Workspace& workspace, std::size_t n,
                           std::uint64_t seed) const override;

 private:
  BaselineKind kind_;
};

/// Builds the generator list of a spec: every config (with spec.cycles unless
/// overridden) followed by the enabled baselines.
std::vector<std::unique_ptr<CounterfactualGenerator>> make_generators(const ExperimentSpec& spec,
                                                                      bool include_baselines);

struct CandidateRow {
  std::string factual_id;
  std::string generator;
  std::size_t rank = 0;
  ViabilityScore score;
  std::string activities;
  std::size_t valid_len = 0;
};

struct TrajectoryRow {
  std::string generator;
  std::string factual_id;
  CycleStats stats;
};

struct ComponentSummary {
  double median = 0.0;
  double mean = 0.0;
};

struct GeneratorSummary {
  std::string generator;
  std::size_t count = 0;
  ComponentSummary similarity;
  ComponentSummary sparsity;
  ComponentSummary feasibility;
  ComponentSummary delta;
  ComponentSummary total;
};

struct RankingRow {
  std::string generator;
  double final_mean_viability = 0.0;
  std::size_t rank = 0;
};

struct BenchmarkReport {
  std::vector<std::string> factual_ids;
  std::vector<CandidateRow> candidates;
  std::vector<TrajectoryRow> trajectories;
  std::vector<GeneratorSummary> summaries;
  /// Grid runs only: configs ranked by final-cycle mean viability.
  std::vector<RankingRow> ranking;
  std::vector<std::string> top;
  std::vector<std::string> bottom;
  PredictionMetrics test_metrics;

  const GeneratorSummary* summary(std::string_view generator) const noexcept;
};

double median(std::vector<double> values);

/// Candidate CSV: factual_id,generator,rank,similarity,sparsity,feasibility,delta,total,activities,valid_len
void write_candidates_csv(const BenchmarkReport& report, std::ostream& out);
void write_trajectories_csv(const BenchmarkReport& report, std::ostream& out);
void write_summary_csv(const BenchmarkReport& report, std::ostream& out);
void write_ranking_csv(const BenchmarkReport& report, std::ostream& out);
std::string report_json(const BenchmarkReport& report);
std::string report_markdown(const BenchmarkReport& report, std::string_view title);

/// Summaries recomputed from the candidate rows.
std::vector<GeneratorSummary> summarize_candidates(std::span<const CandidateRow> rows);

/// Runs every generator on every factual, keeps the top
/// `counterfactuals_per_factual` candidates of each and summarizes them.
BenchmarkReport run_benchmark(const Workspace& workspace,
                              std::span<const std::unique_ptr<CounterfactualGenerator>> generators,
                              std::size_t counterfactuals_per_factual, std::uint64_t seed,
                              std::size_t threads = 0);

/// Full benchmark from a spec; writes candidates.csv, summary.csv,
/// trajectories.csv, report.json and report.md when output_dir is set.
BenchmarkReport run_benchmark(const ExperimentSpec& spec);

/// Operator grid: every config on every factual, per-cycle trajectories and a
/// ranking by final-cycle mean viability. Needs at least two configs. Writes
/// grid_trajectories.csv (flushed per config), grid_ranking.csv, report.json
/// and report.md when output_dir is set.
BenchmarkReport run_grid(const ExperimentSpec& spec);

/// Seed used for generator `generator_key` on factual `factual_index`.
std::uint64_t run_seed(std::uint64_t seed, std::uint64_t generator_key, std::size_t factual_index) noexcept;

/// Joins activity names of the valid prefix with ';'.
std::string activity_string(const EncodedTrace& trace, const EncoderSpec& encoder);

/// Runs `fn(i)` for i in [0, n) on up to `threads` workers (0 = hardware).
/// Exceptions are rethrown on the caller after all workers stop.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace cfseq
