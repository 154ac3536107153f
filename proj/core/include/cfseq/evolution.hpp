#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cfseq/encoded_trace.hpp"
#include "cfseq/markov.hpp"
#include "cfseq/rng.hpp"
#include "cfseq/viability.hpp"

namespace cfseq {

enum class Initiator { Random, SampleBased, CaseBased };        // RI, SBI, CBI
enum class Selector { RouletteWheel, Tournament, Elitism };     // RWS, TS, ES
enum class Crosser { Uniform, OnePoint, TwoPoint };             // UCx, OPC, TPC
enum class Mutator { Random, SampleBased };                     // RM, SBM
enum class Recombiner { FittestSurvivor, BestOfBreed, Ranked }; // FSR, BBR, RR

struct MutationRates {
  double insert = 0.01;
  double remove = 0.01;
  double change = 0.01;

  friend bool operator==(const MutationRates&, const MutationRates&) = default;
};

struct OperatorSet {
  Initiator initiator = Initiator::CaseBased;
  Selector selector = Selector::RouletteWheel;
  Crosser crosser = Crosser::OnePoint;
  /// Only meaningful for Crosser::Uniform; the name token UCd means d / 10.
  double crossover_rate = 0.5;
  Mutator mutator = Mutator::SampleBased;
  Recombiner recombiner = Recombiner::FittestSurvivor;

  friend bool operator==(const OperatorSet&, const OperatorSet&) = default;
};

/// Parses names like "CBI-RWS-OPC-SBM-FSR" or "CBI-ES-UC3-SBM-RR".
OperatorSet parse_config_name(std::string_view name);
std::string format_config_name(const OperatorSet& operators);

/// Named operator grids:
///   "full162"    RI|SBI|CBI x RWS|TS|ES x UC5|OPC|TPC x RM|SBM x FSR|BBR|RR
///   "revised135" RI|SBI|CBI x RWS|TS|ES x UC1|UC3|UC5|OPC|TPC x SBM x FSR|BBR|RR
/// Throws ArgumentError for an unknown preset.
std::vector<std::string> preset_config_names(std::string_view preset);

struct EvoConfig {
  OperatorSet operators;
  std::size_t population_size = 1000;
  std::size_t offspring_per_cycle = 100;
  MutationRates mutation_rates;
  std::size_t cycles = 100;
  std::uint64_t seed = 0;

  /// Throws ArgumentError when an invariant is violated.
  void validate() const;

  /// Name plus JSON overrides for population_size, offspring_per_cycle,
  /// cycles, seed and mutation_rates {insert, delete, change}.
  static EvoConfig from_name(std::string_view name, std::string_view overrides_json = {});
  std::string name() const { return format_config_name(operators); }
};

struct Individual {
  EncodedTrace genome;
  ViabilityScore score;
};

struct Population {
  std::vector<Individual> individuals;
  std::size_t generation = 0;

  std::size_t size() const noexcept { return individuals.size(); }
  bool empty() const noexcept { return individuals.empty(); }
};

struct CycleStats {
  std::size_t cycle = 0;
  double mean_total = 0.0;
  double median_total = 0.0;
  double max_total = 0.0;
  double mean_similarity = 0.0;
  double mean_sparsity = 0.0;
  double mean_feasibility = 0.0;
  double mean_delta = 0.0;

  friend bool operator==(const CycleStats&, const CycleStats&) = default;
};

CycleStats summarize(const Population& population, std::size_t cycle);

struct GenerationResult {
  /// Sorted by total viability, best first.
  Population population;
  /// One row per executed cycle.
  std::vector<CycleStats> stats;
  std::size_t cycles = 0;
};

/// Everything the operators need besides the random stream.
struct EvolutionContext {
  const ViabilityEvaluator& evaluator;
  const MarkovFeasibilityModel& feasibility_model;
  std::span<const EncodedTrace> log;
  std::size_t vocab_size = 0;
  std::size_t max_len = 0;
};

/// Scores every genome in one batch.
std::vector<Individual> score_all(const ViabilityEvaluator& evaluator, std::vector<EncodedTrace> genomes);

// ---------------------------------------------------------------------------
// Genome generators shared with the baselines.

/// Uniform activities, uniform length in [1, max_len], clipped normal features.
EncodedTrace random_genome(std::size_t vocab_size, std::size_t max_len, std::size_t dim, Rng& rng);

/// Activities from the Markov chain, features from the emission distributions.
EncodedTrace sampled_genome(const MarkovFeasibilityModel& model, std::size_t max_len, Rng& rng);

// ---------------------------------------------------------------------------
// Operators.

Population initialize(Initiator kind, const EvolutionContext& context, std::size_t n, Rng& rng);

using ParentPair = std::pair<std::size_t, std::size_t>;

/// Returns sample_size / 2 pairs of indices into `population`.
std::vector<ParentPair> select(Selector kind, const Population& population, std::size_t sample_size,
                               Rng& rng);

/// Fitness used by proportional selection: max(total, 1e-6).
double selection_fitness(const ViabilityScore& score) noexcept;

/// Crossover primitives. Genes are events (activity + feature row) indexed over
/// the padded frame; children are normalized to drop everything after the first PAD.
std::pair<EncodedTrace, EncodedTrace> uniform_crossover(const EncodedTrace& a, const EncodedTrace& b,
                                                        const std::vector<bool>& take_from_a);
std::pair<EncodedTrace, EncodedTrace> one_point_crossover(const EncodedTrace& a, const EncodedTrace& b,
                                                          std::size_t cut);
std::pair<EncodedTrace, EncodedTrace> two_point_crossover(const EncodedTrace& a, const EncodedTrace& b,
                                                          std::size_t first, std::size_t second);

std::pair<EncodedTrace, EncodedTrace> crossover(Crosser kind, double rate, const EncodedTrace& a,
                                                const EncodedTrace& b, Rng& rng);

/// Delete, then insert, then change pass. The returned genome is unscored.
EncodedTrace mutate(Mutator kind, const EncodedTrace& genome, const MutationRates& rates,
                    const EvolutionContext& context, Rng& rng);

/// Forms the next population from the current one and the scored mutants.
Population recombine(Recombiner kind, Population population, std::vector<Individual> mutants,
                     std::size_t max_size);

/// Runs initialize -> {select -> crossover -> mutate -> score -> recombine} for
/// config.cycles cycles. Bit-identical for a fixed config and inputs.
GenerationResult evolve(const EvoConfig& config, const EvolutionContext& context);

}  // namespace cfseq
