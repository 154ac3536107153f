#include "cfseq/evolution.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "cfseq/errors.hpp"

namespace cfseq {

namespace {

constexpr double kFitnessFloor = 1e-6;

// Stream keys for derive_rng.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kSelectStream = 2;
constexpr std::uint64_t kOffspringStream = 3;

std::vector<std::string> split_dash(std::string_view name) {
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (true) {
    const auto pos = name.find('-', start);
    tokens.emplace_back(name.substr(start, pos == std::string_view::npos ? name.size() - start : pos - start));
    if (pos == std::string_view::npos) {
      break;
    }
    start = pos + 1;
  }
  return tokens;
}

[[noreturn]] void unknown_token(std::string_view slot, std::string_view token) {
  throw ParseError(fmt::format("unknown {} token '{}'", slot, token));
}

void copy_gene(const EncodedTrace& from, std::size_t t, EncodedTrace& to) {
  to.activity_ids[t] = from.activity_ids[t];
  const auto src = from.row(t);
  std::copy(src.begin(), src.end(), to.row(t).begin());
}

void check_pair(const EncodedTrace& a, const EncodedTrace& b) {
  if (a.max_len() != b.max_len() || a.dim != b.dim) {
    throw ConfigurationError("crossover: parents have different frame shapes");
  }
}

std::vector<double> fresh_attributes(Mutator kind, int activity, const EvolutionContext& context,
                                     std::size_t dim, Rng& rng) {
  if (kind == Mutator::SampleBased) {
    return context.feasibility_model.sample_attributes(activity, rng);
  }
  std::vector<double> row(dim);
  for (double& v : row) {
    v = clipped_standard_normal(rng);
  }
  return row;
}

bool by_total_desc(const Individual& a, const Individual& b) { return a.score.total > b.score.total; }

}  // namespace

// ---------------------------------------------------------------------------
// Naming

OperatorSet parse_config_name(std::string_view name) {
  const auto tokens = split_dash(name);
  if (tokens.size() != 5) {
    throw ParseError(fmt::format("configuration name '{}' must have five dash-separated tokens", name));
  }
  OperatorSet ops;
  if (tokens[0] == "RI") {
    ops.initiator = Initiator::Random;
  } else if (tokens[0] == "SBI") {
    ops.initiator = Initiator::SampleBased;
  } else if (tokens[0] == "CBI") {
    ops.initiator = Initiator::CaseBased;
  } else {
    unknown_token("initiator", tokens[0]);
  }

  if (tokens[1] == "RWS") {
    ops.selector = Selector::RouletteWheel;
  } else if (tokens[1] == "TS") {
    ops.selector = Selector::Tournament;
  } else if (tokens[1] == "ES") {
    ops.selector = Selector::Elitism;
  } else {
    unknown_token("selector", tokens[1]);
  }

  const auto& cross = tokens[2];
  if (cross == "OPC") {
    ops.crosser = Crosser::OnePoint;
  } else if (cross == "TPC") {
    ops.crosser = Crosser::TwoPoint;
  } else if (cross.size() == 3 && cross.starts_with("UC") && cross[2] >= '1' && cross[2] <= '9') {
    ops.crosser = Crosser::Uniform;
    ops.crossover_rate = static_cast<double>(cross[2] - '0') / 10.0;
  } else {
    unknown_token("crosser", cross);
  }

  if (tokens[3] == "RM") {
    ops.mutator = Mutator::Random;
  } else if (tokens[3] == "SBM") {
    ops.mutator = Mutator::SampleBased;
  } else {
    unknown_token("mutator", tokens[3]);
  }

  if (tokens[4] == "FSR") {
    ops.recombiner = Recombiner::FittestSurvivor;
  } else if (tokens[4] == "BBR") {
    ops.recombiner = Recombiner::BestOfBreed;
  } else if (tokens[4] == "RR") {
    ops.recombiner = Recombiner::Ranked;
  } else {
    unknown_token("recombiner", tokens[4]);
  }
  return ops;
}

std::string format_config_name(const OperatorSet& ops) {
  static constexpr std::array<const char*, 3> initiators{"RI", "SBI", "CBI"};
  static constexpr std::array<const char*, 3> selectors{"RWS", "TS", "ES"};
  static constexpr std::array<const char*, 2> mutators{"RM", "SBM"};
  static constexpr std::array<const char*, 3> recombiners{"FSR", "BBR", "RR"};
  std::string crosser;
  switch (ops.crosser) {
    case Crosser::Uniform:
      crosser = fmt::format("UC{}", static_cast<int>(std::lround(ops.crossover_rate * 10.0)));
      break;
    case Crosser::OnePoint:
      crosser = "OPC";
      break;
    case Crosser::TwoPoint:
      crosser = "TPC";
      break;
  }
  return fmt::format("{}-{}-{}-{}-{}", initiators[static_cast<std::size_t>(ops.initiator)],
                     selectors[static_cast<std::size_t>(ops.selector)], crosser,
                     mutators[static_cast<std::size_t>(ops.mutator)],
                     recombiners[static_cast<std::size_t>(ops.recombiner)]);
}

std::vector<std::string> preset_config_names(std::string_view preset) {
  std::vector<std::pair<Crosser, double>> crossers;
  std::vector<Mutator> mutators;
  if (preset == "full162") {
    crossers = {{Crosser::Uniform, 0.5}, {Crosser::OnePoint, 0.5}, {Crosser::TwoPoint, 0.5}};
    mutators = {Mutator::Random, Mutator::SampleBased};
  } else if (preset == "revised135") {
    crossers = {{Crosser::Uniform, 0.1}, {Crosser::Uniform, 0.3}, {Crosser::Uniform, 0.5},
                {Crosser::OnePoint, 0.5}, {Crosser::TwoPoint, 0.5}};
    mutators = {Mutator::SampleBased};
  } else {
    throw ArgumentError(fmt::format("unknown grid preset '{}' (expected full162 or revised135)", preset));
  }
  std::vector<std::string> names;
  for (const auto initiator : {Initiator::Random, Initiator::SampleBased, Initiator::CaseBased}) {
    for (const auto selector : {Selector::RouletteWheel, Selector::Tournament, Selector::Elitism}) {
      for (const auto& [crosser, rate] : crossers) {
        for (const auto mutator : mutators) {
          for (const auto recombiner :
               {Recombiner::FittestSurvivor, Recombiner::BestOfBreed, Recombiner::Ranked}) {
            names.push_back(format_config_name(OperatorSet{initiator, selector, crosser, rate, mutator, recombiner}));
          }
        }
      }
    }
  }
  return names;
}

void EvoConfig::validate() const {
  if (offspring_per_cycle < 2 || population_size < offspring_per_cycle) {
    throw ArgumentError(fmt::format(
        "need population_size ({}) >= offspring_per_cycle ({}) >= 2", population_size, offspring_per_cycle));
  }
  if (offspring_per_cycle % 2 != 0) {
    throw ArgumentError("offspring_per_cycle must be even (parents are paired)");
  }
  for (const double r : {mutation_rates.insert, mutation_rates.remove, mutation_rates.change}) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw ArgumentError("mutation rates must lie in [0, 1]");
    }
  }
  if (operators.crosser == Crosser::Uniform &&
      !(operators.crossover_rate > 0.0 && operators.crossover_rate < 1.0)) {
    throw ArgumentError("uniform crossover rate must lie in (0, 1)");
  }
}

EvoConfig EvoConfig::from_name(std::string_view name, std::string_view overrides_json) {
  EvoConfig config;
  config.operators = parse_config_name(name);
  if (!overrides_json.empty()) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(overrides_json);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(fmt::format("overrides are not valid JSON: {}", e.what()));
    }
    if (!doc.is_object()) {
      throw ParseError("overrides must be a JSON object");
    }
    for (const auto& [key, value] : doc.items()) {
      if (key == "population_size") {
        config.population_size = value.get<std::size_t>();
      } else if (key == "offspring_per_cycle") {
        config.offspring_per_cycle = value.get<std::size_t>();
      } else if (key == "cycles") {
        config.cycles = value.get<std::size_t>();
      } else if (key == "seed") {
        config.seed = value.get<std::uint64_t>();
      } else if (key == "mutation_rate") {
        const double r = value.get<double>();
        config.mutation_rates = MutationRates{r, r, r};
      } else if (key == "mutation_rates") {
        config.mutation_rates.insert = value.value("insert", config.mutation_rates.insert);
        config.mutation_rates.remove = value.value("delete", config.mutation_rates.remove);
        config.mutation_rates.change = value.value("change", config.mutation_rates.change);
      } else {
        throw ParseError(fmt::format("unknown override '{}'", key));
      }
    }
  }
  config.validate();
  return config;
}

// ---------------------------------------------------------------------------
// Scoring and statistics

std::vector<Individual> score_all(const ViabilityEvaluator& evaluator, std::vector<EncodedTrace> genomes) {
  const auto scores = evaluator.score_batch(genomes);
  std::vector<Individual> out;
  out.reserve(genomes.size());
  for (std::size_t i = 0; i < genomes.size(); ++i) {
    out.push_back(Individual{std::move(genomes[i]), scores[i]});
  }
  return out;
}

CycleStats summarize(const Population& population, std::size_t cycle) {
  CycleStats stats;
  stats.cycle = cycle;
  if (population.empty()) {
    return stats;
  }
  std::vector<double> totals;
  totals.reserve(population.size());
  for (const auto& ind : population.individuals) {
    totals.push_back(ind.score.total);
    stats.mean_similarity += ind.score.similarity;
    stats.mean_sparsity += ind.score.sparsity;
    stats.mean_feasibility += ind.score.feasibility;
    stats.mean_delta += ind.score.delta;
    stats.mean_total += ind.score.total;
  }
  const auto n = static_cast<double>(population.size());
  stats.mean_similarity /= n;
  stats.mean_sparsity /= n;
  stats.mean_feasibility /= n;
  stats.mean_delta /= n;
  stats.mean_total /= n;
  std::sort(totals.begin(), totals.end());
  const std::size_t mid = totals.size() / 2;
  stats.median_total = totals.size() % 2 == 1 ? totals[mid] : 0.5 * (totals[mid - 1] + totals[mid]);
  stats.max_total = totals.back();
  return stats;
}

// ---------------------------------------------------------------------------
// Genome generators

EncodedTrace random_genome(std::size_t vocab_size, std::size_t max_len, std::size_t dim, Rng& rng) {
  EncodedTrace genome{max_len, dim};
  genome.valid_len = static_cast<std::size_t>(uniform_int(rng, 1, static_cast<std::int64_t>(max_len)));
  for (std::size_t t = 0; t < genome.valid_len; ++t) {
    genome.activity_ids[t] = static_cast<int>(uniform_int(rng, 1, static_cast<std::int64_t>(vocab_size)));
    for (double& v : genome.row(t)) {
      v = clipped_standard_normal(rng);
    }
  }
  return genome;
}

EncodedTrace sampled_genome(const MarkovFeasibilityModel& model, std::size_t max_len, Rng& rng) {
  EncodedTrace genome{max_len, model.layout().dim};
  const auto activities = model.sample_sequence(max_len, rng);
  genome.valid_len = activities.size();
  for (std::size_t t = 0; t < activities.size(); ++t) {
    genome.activity_ids[t] = activities[t];
    const auto row = model.sample_attributes(activities[t], rng);
    std::copy(row.begin(), row.end(), genome.row(t).begin());
  }
  return genome;
}

// ---------------------------------------------------------------------------
// Initiation

Population initialize(Initiator kind, const EvolutionContext& context, std::size_t n, Rng& rng) {
  if (n == 0) {
    throw ArgumentError("initialize: population size must be positive");
  }
  const std::size_t dim = context.evaluator.factual().dim;
  std::vector<EncodedTrace> genomes;
  genomes.reserve(n);
  switch (kind) {
    case Initiator::Random:
      for (std::size_t i = 0; i < n; ++i) {
        genomes.push_back(random_genome(context.vocab_size, context.max_len, dim, rng));
      }
      break;
    case Initiator::SampleBased:
      for (std::size_t i = 0; i < n; ++i) {
        genomes.push_back(sampled_genome(context.feasibility_model, context.max_len, rng));
      }
      break;
    case Initiator::CaseBased:
      if (context.log.empty()) {
        throw ArgumentError("case-based initiation needs a non-empty log");
      }
      for (std::size_t i = 0; i < n; ++i) {
        const auto pick = static_cast<std::size_t>(
            uniform_int(rng, 0, static_cast<std::int64_t>(context.log.size()) - 1));
        genomes.push_back(context.log[pick]);
      }
      break;
  }
  return Population{score_all(context.evaluator, std::move(genomes)), 0};
}

// ---------------------------------------------------------------------------
// Selection

double selection_fitness(const ViabilityScore& score) noexcept {
  return std::max(score.total, kFitnessFloor);
}

std::vector<ParentPair> select(Selector kind, const Population& population, std::size_t sample_size,
                               Rng& rng) {
  if (population.empty()) {
    throw SelectionError("cannot select from an empty population");
  }
  if (sample_size % 2 != 0) {
    throw ArgumentError("select: sample_size must be even");
  }
  const std::size_t n = population.size();
  std::vector<std::size_t> parents;
  parents.reserve(sample_size);

  switch (kind) {
    case Selector::RouletteWheel: {
      std::vector<double> fitness;
      fitness.reserve(n);
      for (const auto& ind : population.individuals) {
        fitness.push_back(selection_fitness(ind.score));
      }
      for (std::size_t k = 0; k < sample_size; ++k) {
        parents.push_back(sample_index(fitness, rng));
      }
      break;
    }
    case Selector::Tournament:
      for (std::size_t k = 0; k < sample_size; ++k) {
        const auto first = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(n) - 1));
        const auto second = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(n) - 1));
        const double f1 = selection_fitness(population.individuals[first].score);
        const double f2 = selection_fitness(population.individuals[second].score);
        parents.push_back(uniform01(rng) * (f1 + f2) < f1 ? first : second);
      }
      break;
    case Selector::Elitism: {
      if (sample_size > n) {
        throw SelectionError(fmt::format("elitism cannot pick {} parents from {} individuals", sample_size, n));
      }
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&population](std::size_t a, std::size_t b) {
        return population.individuals[a].score.total > population.individuals[b].score.total;
      });
      parents.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(sample_size));
      break;
    }
  }

  std::vector<ParentPair> pairs;
  pairs.reserve(sample_size / 2);
  for (std::size_t k = 0; k + 1 < parents.size(); k += 2) {
    pairs.emplace_back(parents[k], parents[k + 1]);
  }
  return pairs;
}

// ---------------------------------------------------------------------------
// Crossover

std::pair<EncodedTrace, EncodedTrace> uniform_crossover(const EncodedTrace& a, const EncodedTrace& b,
                                                        const std::vector<bool>& take_from_a) {
  check_pair(a, b);
  EncodedTrace first = b;
  EncodedTrace second = a;
  for (std::size_t t = 0; t < a.max_len() && t < take_from_a.size(); ++t) {
    if (take_from_a[t]) {
      copy_gene(a, t, first);
      copy_gene(b, t, second);
    }
  }
  first.normalize();
  second.normalize();
  return {std::move(first), std::move(second)};
}

std::pair<EncodedTrace, EncodedTrace> one_point_crossover(const EncodedTrace& a, const EncodedTrace& b,
                                                          std::size_t cut) {
  check_pair(a, b);
  EncodedTrace first = a;
  EncodedTrace second = b;
  for (std::size_t t = std::min(cut, a.max_len()); t < a.max_len(); ++t) {
    copy_gene(b, t, first);
    copy_gene(a, t, second);
  }
  first.normalize();
  second.normalize();
  return {std::move(first), std::move(second)};
}

std::pair<EncodedTrace, EncodedTrace> two_point_crossover(const EncodedTrace& a, const EncodedTrace& b,
                                                          std::size_t first_point, std::size_t second_point) {
  check_pair(a, b);
  if (first_point > second_point) {
    std::swap(first_point, second_point);
  }
  EncodedTrace first = a;
  EncodedTrace second = b;
  for (std::size_t t = first_point; t < std::min(second_point, a.max_len()); ++t) {
    copy_gene(b, t, first);
    copy_gene(a, t, second);
  }
  first.normalize();
  second.normalize();
  return {std::move(first), std::move(second)};
}

std::pair<EncodedTrace, EncodedTrace> crossover(Crosser kind, double rate, const EncodedTrace& a,
                                                const EncodedTrace& b, Rng& rng) {
  check_pair(a, b);
  const std::size_t max_len = a.max_len();
  switch (kind) {
    case Crosser::Uniform: {
      std::vector<bool> mask(max_len);
      for (std::size_t t = 0; t < max_len; ++t) {
        mask[t] = uniform01(rng) < rate;
      }
      return uniform_crossover(a, b, mask);
    }
    case Crosser::OnePoint: {
      if (max_len < 2) {
        return {a, b};
      }
      const auto cut = static_cast<std::size_t>(uniform_int(rng, 1, static_cast<std::int64_t>(max_len) - 1));
      return one_point_crossover(a, b, cut);
    }
    case Crosser::TwoPoint: {
      if (max_len < 2) {
        return {a, b};
      }
      // Two distinct points in [1, max_len]; the segment [first, second) is swapped.
      const auto hi = static_cast<std::int64_t>(max_len);
      const auto p = static_cast<std::size_t>(uniform_int(rng, 1, hi));
      auto q = static_cast<std::size_t>(uniform_int(rng, 1, hi - 1));
      if (q >= p) {
        ++q;
      }
      return two_point_crossover(a, b, std::min(p, q), std::max(p, q));
    }
  }
  return {a, b};
}

// ---------------------------------------------------------------------------
// Mutation

EncodedTrace mutate(Mutator kind, const EncodedTrace& genome, const MutationRates& rates,
                    const EvolutionContext& context, Rng& rng) {
  const std::size_t max_len = genome.max_len();
  const std::size_t dim = genome.dim;
  std::vector<int> ids(genome.activity_ids.begin(),
                       genome.activity_ids.begin() + static_cast<std::ptrdiff_t>(genome.valid_len));
  std::vector<std::vector<double>> rows;
  rows.reserve(max_len);
  for (std::size_t t = 0; t < genome.valid_len; ++t) {
    const auto r = genome.row(t);
    rows.emplace_back(r.begin(), r.end());
  }

  // Delete pass over real events; the last marked survivor is kept if all would go.
  {
    std::vector<bool> drop(ids.size());
    std::size_t dropped = 0;
    for (std::size_t t = 0; t < ids.size(); ++t) {
      drop[t] = uniform01(rng) < rates.remove;
      dropped += static_cast<std::size_t>(drop[t]);
    }
    if (!ids.empty() && dropped == ids.size()) {
      drop.back() = false;
    }
    std::vector<int> kept_ids;
    std::vector<std::vector<double>> kept_rows;
    for (std::size_t t = 0; t < ids.size(); ++t) {
      if (!drop[t]) {
        kept_ids.push_back(ids[t]);
        kept_rows.push_back(std::move(rows[t]));
      }
    }
    ids = std::move(kept_ids);
    rows = std::move(kept_rows);
  }

  // Insert pass: one trial per padding slot.
  {
    const std::size_t slots = max_len - ids.size();
    for (std::size_t s = 0; s < slots; ++s) {
      if (uniform01(rng) >= rates.insert) {
        continue;
      }
      const auto pos = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(ids.size())));
      const int activity = static_cast<int>(uniform_int(rng, 1, static_cast<std::int64_t>(context.vocab_size)));
      auto row = fresh_attributes(kind, activity, context, dim, rng);
      ids.insert(ids.begin() + static_cast<std::ptrdiff_t>(pos), activity);
      rows.insert(rows.begin() + static_cast<std::ptrdiff_t>(pos), std::move(row));
    }
  }

  // Change pass.
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (uniform01(rng) >= rates.change) {
      continue;
    }
    ids[t] = static_cast<int>(uniform_int(rng, 1, static_cast<std::int64_t>(context.vocab_size)));
    rows[t] = fresh_attributes(kind, ids[t], context, dim, rng);
  }

  EncodedTrace out{max_len, dim};
  out.case_id = genome.case_id;
  out.outcome = genome.outcome;
  out.valid_len = ids.size();
  for (std::size_t t = 0; t < ids.size(); ++t) {
    out.activity_ids[t] = ids[t];
    std::copy(rows[t].begin(), rows[t].end(), out.row(t).begin());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Recombination

Population recombine(Recombiner kind, Population population, std::vector<Individual> mutants,
                     std::size_t max_size) {
  if (max_size < 1) {
    throw ArgumentError("recombine: max_size must be positive");
  }
  auto& pool = population.individuals;
  switch (kind) {
    case Recombiner::FittestSurvivor:
      std::move(mutants.begin(), mutants.end(), std::back_inserter(pool));
      std::stable_sort(pool.begin(), pool.end(), by_total_desc);
      break;
    case Recombiner::BestOfBreed: {
      if (!mutants.empty()) {
        double mean = 0.0;
        for (const auto& m : mutants) {
          mean += m.score.total;
        }
        mean /= static_cast<double>(mutants.size());
        for (auto& m : mutants) {
          if (m.score.total > mean) {
            pool.push_back(std::move(m));
          }
        }
      }
      if (pool.size() > max_size) {
        std::stable_sort(pool.begin(), pool.end(), by_total_desc);
      }
      break;
    }
    case Recombiner::Ranked:
      std::move(mutants.begin(), mutants.end(), std::back_inserter(pool));
      // Lexicographic over per-component ranks: feasibility, delta, sparsity, similarity.
      std::stable_sort(pool.begin(), pool.end(), [](const Individual& a, const Individual& b) {
        const auto key = [](const ViabilityScore& s) {
          return std::array<double, 4>{s.feasibility, s.delta, s.sparsity, s.similarity};
        };
        return key(a.score) > key(b.score);
      });
      break;
  }
  if (pool.size() > max_size) {
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(max_size), pool.end());
  }
  ++population.generation;
  return population;
}

// ---------------------------------------------------------------------------
// Main loop

GenerationResult evolve(const EvoConfig& config, const EvolutionContext& context) {
  config.validate();
  if (context.vocab_size == 0 || context.max_len == 0) {
    throw ArgumentError("evolve: context needs a vocabulary and a frame length");
  }
  const auto& ops = config.operators;

  Rng init_rng = derive_rng(config.seed, {kInitStream});
  Population population = initialize(ops.initiator, context, config.population_size, init_rng);

  GenerationResult result;
  result.stats.reserve(config.cycles);
  for (std::size_t cycle = 0; cycle < config.cycles; ++cycle) {
    Rng select_rng = derive_rng(config.seed, {kSelectStream, cycle});
    const auto pairs = select(ops.selector, population, config.offspring_per_cycle, select_rng);

    std::vector<EncodedTrace> offspring;
    offspring.reserve(pairs.size() * 2);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      Rng pair_rng = derive_rng(config.seed, {kOffspringStream, cycle, p});
      const auto& [ia, ib] = pairs[p];
      auto [first, second] = crossover(ops.crosser, ops.crossover_rate, population.individuals[ia].genome,
                                       population.individuals[ib].genome, pair_rng);
      offspring.push_back(mutate(ops.mutator, first, config.mutation_rates, context, pair_rng));
      offspring.push_back(mutate(ops.mutator, second, config.mutation_rates, context, pair_rng));
    }
    auto mutants = score_all(context.evaluator, std::move(offspring));
    population = recombine(ops.recombiner, std::move(population), std::move(mutants), config.population_size);
    result.stats.push_back(summarize(population, cycle + 1));
  }

  std::stable_sort(population.individuals.begin(), population.individuals.end(), by_total_desc);
  result.cycles = config.cycles;
  result.population = std::move(population);
  return result;
}

}  // namespace cfseq
