#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "../oracles/feasibility_oracle.hpp"
#include "../support/fixtures.hpp"
#include "../support/generators.hpp"
#include "cfseq/errors.hpp"
#include "cfseq/evolution.hpp"

using namespace cfseq;
using test::make_trace1;

namespace {

struct Toy {
  std::vector<EncodedTrace> log = oracle::feasibility_log();
  MarkovFeasibilityModel model = MarkovFeasibilityModel::fit(log, test::numeric_layout(), 3, 1e-6);
  ConstantPredictor predictor{0.7};
  ViabilityEvaluator evaluator{make_trace1({1, 2, 3}, {0.05, 0.15, 0.25}, oracle::kMaxLen), predictor, model};

  EvolutionContext context() const { return EvolutionContext{evaluator, model, log, 3, oracle::kMaxLen}; }
};

Individual with_total(double total) {
  Individual ind;
  ind.genome = make_trace1({1}, {0.0}, 3);
  ind.score.total = total;
  return ind;
}

Individual with_components(double feasibility, double delta, double sparsity, double similarity) {
  Individual ind;
  ind.genome = make_trace1({1}, {0.0}, 3);
  ind.score = ViabilityScore::from_components(similarity, sparsity, feasibility, delta);
  return ind;
}

std::vector<double> totals(const Population& p) {
  std::vector<double> out;
  for (const auto& ind : p.individuals) {
    out.push_back(ind.score.total);
  }
  return out;
}

}  // namespace

TEST_CASE("config names round-trip") {
  for (const char* name : {"CBI-RWS-OPC-SBM-FSR", "CBI-ES-UC3-SBM-RR", "RI-TS-TPC-RM-BBR", "SBI-ES-UC9-RM-FSR"}) {
    CHECK(format_config_name(parse_config_name(name)) == name);
  }
  const auto ops = parse_config_name("CBI-ES-UC3-SBM-RR");
  CHECK(ops.initiator == Initiator::CaseBased);
  CHECK(ops.selector == Selector::Elitism);
  CHECK(ops.crosser == Crosser::Uniform);
  CHECK(ops.crossover_rate == doctest::Approx(0.3));
  CHECK(ops.mutator == Mutator::SampleBased);
  CHECK(ops.recombiner == Recombiner::Ranked);
}

TEST_CASE("bad config names are parse errors") {
  for (const char* name : {"", "CBI-RWS-OPC-SBM", "XXI-RWS-OPC-SBM-FSR", "CBI-RWS-UC0-SBM-FSR", "CBI-RWS-UC10-SBM-FSR",
                           "CBI-RWS-OPC-SBM-FSR-X", "CBI-RWS-OPC-XM-FSR", "CBI-XS-OPC-SBM-FSR", "CBI-RWS-OPC-SBM-ZZ"}) {
    CHECK_THROWS_AS(parse_config_name(name), ParseError);
  }
}

TEST_CASE("config validation and overrides") {
  const auto config = EvoConfig::from_name(
      "CBI-RWS-OPC-SBM-FSR",
      R"({"population_size": 40, "offspring_per_cycle": 10, "cycles": 7, "seed": 9, "mutation_rates": {"delete": 0.2}})");
  CHECK(config.population_size == 40);
  CHECK(config.offspring_per_cycle == 10);
  CHECK(config.cycles == 7);
  CHECK(config.seed == 9);
  CHECK(config.mutation_rates.remove == 0.2);
  CHECK(config.mutation_rates.insert == 0.01);

  const auto defaults = EvoConfig::from_name("CBI-RWS-OPC-SBM-FSR");
  CHECK(defaults.population_size == 1000);
  CHECK(defaults.offspring_per_cycle == 100);

  CHECK_THROWS_AS(EvoConfig::from_name("CBI-RWS-OPC-SBM-FSR", R"({"population_size": 5, "offspring_per_cycle": 10})"),
                  ArgumentError);
  CHECK_THROWS_AS(EvoConfig::from_name("CBI-RWS-OPC-SBM-FSR", R"({"offspring_per_cycle": 11})"), ArgumentError);
  CHECK_THROWS_AS(EvoConfig::from_name("CBI-RWS-OPC-SBM-FSR", R"({"mutation_rate": 1.5})"), ArgumentError);
  CHECK_THROWS_AS(EvoConfig::from_name("CBI-RWS-OPC-SBM-FSR", R"({"colour": 1})"), ParseError);
  CHECK_THROWS_AS(EvoConfig::from_name("CBI-RWS-OPC-SBM-FSR", "[1]"), ParseError);
  CHECK_THROWS_AS(EvoConfig::from_name("CBI-RWS-OPC-SBM-FSR", "{"), ParseError);
}

TEST_CASE("initiators") {
  const Toy toy;
  const auto ctx = toy.context();
  Rng rng{5};

  const auto cases = initialize(Initiator::CaseBased, ctx, 50, rng);
  REQUIRE(cases.size() == 50);
  for (const auto& ind : cases.individuals) {
    CHECK(std::find(toy.log.begin(), toy.log.end(), ind.genome) != toy.log.end());
    CHECK(ind.score == toy.evaluator.score(ind.genome));
  }

  for (const auto kind : {Initiator::Random, Initiator::SampleBased}) {
    const auto pop = initialize(kind, ctx, 200, rng);
    REQUIRE(pop.size() == 200);
    for (const auto& ind : pop.individuals) {
      CHECK(satisfies_invariants(ind.genome, 3));
    }
  }

  CHECK_THROWS_AS(initialize(Initiator::Random, ctx, 0, rng), ArgumentError);
  const EvolutionContext empty{toy.evaluator, toy.model, {}, 3, oracle::kMaxLen};
  CHECK_THROWS_AS(initialize(Initiator::CaseBased, empty, 5, rng), ArgumentError);
}

TEST_CASE("selection on a single individual pairs it with itself") {
  Population pop;
  pop.individuals.push_back(with_total(1.0));
  Rng rng{1};
  for (const auto kind : {Selector::RouletteWheel, Selector::Tournament}) {
    const auto pairs = select(kind, pop, 4, rng);
    REQUIRE(pairs.size() == 2);
    for (const auto& [x, y] : pairs) {
      CHECK(x == 0);
      CHECK(y == 0);
    }
  }
  CHECK(select(Selector::Elitism, pop, 0, rng).empty());
  CHECK_THROWS_AS(select(Selector::Elitism, pop, 2, rng), SelectionError);
  CHECK_THROWS_AS(select(Selector::RouletteWheel, Population{}, 2, rng), SelectionError);
  CHECK_THROWS_AS(select(Selector::RouletteWheel, pop, 3, rng), ArgumentError);
}

TEST_CASE("roulette wheel draws proportionally to fitness") {
  Population pop;
  pop.individuals = {with_total(3.0), with_total(1.0)};
  Rng rng{2};
  const std::size_t draws = 40000;
  std::size_t first = 0;
  for (const auto& [x, y] : select(Selector::RouletteWheel, pop, draws, rng)) {
    first += static_cast<std::size_t>(x == 0) + static_cast<std::size_t>(y == 0);
  }
  CHECK(static_cast<double>(first) / draws == doctest::Approx(0.75).epsilon(0.02));
}

TEST_CASE("roulette wheel floors non-positive fitness") {
  CHECK(selection_fitness(with_total(-0.5).score) == 1e-6);
  Population pop;
  pop.individuals = {with_total(-1.0), with_total(0.0)};
  Rng rng{3};
  std::size_t first = 0;
  const std::size_t draws = 20000;
  for (const auto& [x, y] : select(Selector::RouletteWheel, pop, draws, rng)) {
    first += static_cast<std::size_t>(x == 0) + static_cast<std::size_t>(y == 0);
  }
  CHECK(static_cast<double>(first) / draws == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("tournament favours the fitter entrant 3:1") {
  Population pop;
  pop.individuals = {with_total(3.0), with_total(1.0)};
  Rng rng{4};
  const std::size_t draws = 40000;
  std::size_t first = 0;
  for (const auto& [x, y] : select(Selector::Tournament, pop, draws, rng)) {
    first += static_cast<std::size_t>(x == 0) + static_cast<std::size_t>(y == 0);
  }
  // P(pick 0) = 1/4 (both 0) + 1/2 * 3/4 (mixed) = 0.625.
  CHECK(static_cast<double>(first) / draws == doctest::Approx(0.625).epsilon(0.02));
}

TEST_CASE("elitism takes the best sample_size individuals in order") {
  Population pop;
  pop.individuals = {with_total(0.5), with_total(2.0), with_total(1.0), with_total(3.0), with_total(1.0)};
  Rng rng{5};
  const auto pairs = select(Selector::Elitism, pop, 4, rng);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0] == ParentPair{3, 1});
  CHECK(pairs[1] == ParentPair{2, 4});
}

TEST_CASE("uniform crossover with an all-true mask swaps parents") {
  const auto a = make_trace1({1, 2, 3}, {0.1, 0.2, 0.3}, 4);
  const auto b = make_trace1({3, 3}, {0.9, 0.8}, 4);
  const auto [x, y] = uniform_crossover(a, b, std::vector<bool>(4, true));
  CHECK(x == a);
  CHECK(y == b);
  const auto [p, q] = uniform_crossover(a, b, std::vector<bool>(4, false));
  CHECK(p == b);
  CHECK(q == a);
}

TEST_CASE("one point crossover exchanges tails") {
  const auto a = make_trace1({1, 2, 3, 1}, {0.1, 0.2, 0.3, 0.4}, 5);
  const auto b = make_trace1({2, 2, 1}, {0.5, 0.6, 0.7}, 5);
  const auto [x, y] = one_point_crossover(a, b, 2);
  CHECK(x == make_trace1({1, 2, 1}, {0.1, 0.2, 0.7}, 5));
  CHECK(y == make_trace1({2, 2, 3, 1}, {0.5, 0.6, 0.3, 0.4}, 5));
}

TEST_CASE("crossover truncates at the first padding position") {
  const auto a = make_trace1({1, 2, 3, 1}, {0.1, 0.2, 0.3, 0.4}, 5);
  const auto b = make_trace1({2}, {0.5}, 5);
  // The segment taken from b is padding, so the first child ends at position 1;
  // the second child gains a's middle genes.
  const auto [x, y] = two_point_crossover(a, b, 1, 3);
  CHECK(x == make_trace1({1}, {0.1}, 5));
  CHECK(y == make_trace1({2, 2, 3}, {0.5, 0.2, 0.3}, 5));
}

TEST_CASE("crossing identical parents reproduces them") {
  const auto a = make_trace1({1, 2, 3, 1}, {0.1, 0.2, 0.3, 0.4}, 5);
  Rng rng{8};
  for (const auto kind : {Crosser::Uniform, Crosser::OnePoint, Crosser::TwoPoint}) {
    for (int k = 0; k < 50; ++k) {
      const auto [x, y] = crossover(kind, 0.5, a, a, rng);
      CHECK(x == a);
      CHECK(y == a);
    }
  }
}

TEST_CASE("crossover rejects mismatched frames") {
  Rng rng{9};
  CHECK_THROWS_AS(crossover(Crosser::OnePoint, 0.5, make_trace1({1}, {0.1}, 4), make_trace1({1}, {0.1}, 5), rng),
                  ConfigurationError);
}

TEST_CASE("mutation with zero rates is the identity") {
  const Toy toy;
  const auto ctx = toy.context();
  Rng rng{10};
  const MutationRates zero{0.0, 0.0, 0.0};
  for (int k = 0; k < 100; ++k) {
    const auto g = test::gen_trace(rng, 3, oracle::kMaxLen, test::numeric_layout());
    CHECK(mutate(Mutator::SampleBased, g, zero, ctx, rng) == g);
    CHECK(mutate(Mutator::Random, g, zero, ctx, rng) == g);
  }
}

TEST_CASE("deleting everything keeps one event") {
  const Toy toy;
  const auto ctx = toy.context();
  Rng rng{11};
  const MutationRates only_delete{0.0, 1.0, 0.0};
  const auto g = make_trace1({1, 2, 3, 1}, {0.1, 0.2, 0.3, 0.4}, 5);
  const auto m = mutate(Mutator::Random, g, only_delete, ctx, rng);
  CHECK(m.valid_len == 1);
  CHECK(m.activity_ids[0] == 1);
  CHECK(m.row(0)[0] == 0.4);
}

TEST_CASE("inserting fills the frame") {
  const Toy toy;
  const auto ctx = toy.context();
  Rng rng{12};
  const MutationRates only_insert{1.0, 0.0, 0.0};
  const auto m = mutate(Mutator::SampleBased, make_trace1({2}, {0.3}, 5), only_insert, ctx, rng);
  CHECK(m.valid_len == 5);
  CHECK(satisfies_invariants(m, 3));
}

TEST_CASE("change rate is applied per position") {
  const Toy toy;
  const auto ctx = toy.context();
  Rng rng{13};
  const MutationRates only_change{0.0, 0.0, 0.2};
  const auto g = make_trace1({1, 1, 1, 1, 1}, {0.5, 0.5, 0.5, 0.5, 0.5}, 5);
  std::size_t changed = 0;
  const std::size_t trials = 20000;
  for (std::size_t k = 0; k < trials; ++k) {
    const auto m = mutate(Mutator::Random, g, only_change, ctx, rng);
    for (std::size_t t = 0; t < 5; ++t) {
      changed += static_cast<std::size_t>(m.row(t)[0] != 0.5 || m.activity_ids[t] != 1);
    }
  }
  // A changed position keeps its activity with p = 1/3, but its fresh value
  // equals 0.5 with probability zero.
  CHECK(static_cast<double>(changed) / (5.0 * trials) == doctest::Approx(0.2).epsilon(0.02 / 0.2));
}

TEST_CASE("fittest survivor keeps the best of the union") {
  Population pop;
  pop.individuals = {with_total(3.0), with_total(1.0), with_total(2.0)};
  const auto out = recombine(Recombiner::FittestSurvivor, pop, {with_total(2.5), with_total(0.5)}, 3);
  CHECK(totals(out) == std::vector<double>{3.0, 2.5, 2.0});
  CHECK(out.generation == 1);
}

TEST_CASE("best of breed admits mutants above the mutant mean") {
  Population pop;
  pop.individuals = {with_total(1.0), with_total(2.0)};
  // Mutant mean is 2; only 3 is strictly above it.
  auto out = recombine(Recombiner::BestOfBreed, pop, {with_total(1.0), with_total(2.0), with_total(3.0)}, 10);
  CHECK(totals(out) == std::vector<double>{1.0, 2.0, 3.0});
  out = recombine(Recombiner::BestOfBreed, pop, {with_total(1.0), with_total(2.0), with_total(3.0)}, 2);
  CHECK(totals(out) == std::vector<double>{3.0, 2.0});
  out = recombine(Recombiner::BestOfBreed, pop, {}, 5);
  CHECK(totals(out) == std::vector<double>{1.0, 2.0});
}

TEST_CASE("ranked recombination orders by feasibility, delta, sparsity, similarity") {
  Population pop;
  pop.individuals = {with_components(0.1, 0.9, 1.0, 1.0), with_components(0.5, -0.2, 0.1, 0.1)};
  const auto out = recombine(Recombiner::Ranked, pop,
                             {with_components(0.5, -0.2, 0.3, 0.0), with_components(0.5, 0.4, 0.0, 0.0)}, 3);
  REQUIRE(out.size() == 3);
  CHECK(out.individuals[0].score.delta == 0.4);
  CHECK(out.individuals[1].score.sparsity == 0.3);
  CHECK(out.individuals[2].score.sparsity == 0.1);
}

TEST_CASE("recombination rejects an empty target size") {
  CHECK_THROWS_AS(recombine(Recombiner::FittestSurvivor, Population{}, {}, 0), ArgumentError);
}

TEST_CASE("evolve with zero cycles returns the sorted initial population") {
  const Toy toy;
  auto config = EvoConfig::from_name("CBI-RWS-OPC-SBM-FSR", R"({"population_size": 20, "offspring_per_cycle": 10})");
  config.cycles = 0;
  const auto r = evolve(config, toy.context());
  CHECK(r.stats.empty());
  CHECK(r.cycles == 0);
  CHECK(r.population.size() == 20);
  CHECK(std::is_sorted(r.population.individuals.begin(), r.population.individuals.end(),
                       [](const Individual& a, const Individual& b) { return a.score.total > b.score.total; }));
}

TEST_CASE("fittest survivor never loses its best individual") {
  const auto& ws = test::synthetic_workspace();
  const ViabilityEvaluator evaluator(ws.test[ws.factuals[0]], *ws.predictor, ws.feasibility_model);
  const auto ctx = ws.context(evaluator);
  for (const char* name : {"CBI-RWS-OPC-SBM-FSR", "RI-TS-UC5-RM-FSR", "SBI-ES-TPC-SBM-FSR"}) {
    auto config = EvoConfig::from_name(name, R"({"population_size": 60, "offspring_per_cycle": 20, "cycles": 25})");
    const auto r = evolve(config, ctx);
    REQUIRE(r.stats.size() == 25);
    for (std::size_t c = 1; c < r.stats.size(); ++c) {
      CHECK(r.stats[c].max_total >= r.stats[c - 1].max_total);
      CHECK(r.stats[c].mean_total >= r.stats[c - 1].mean_total - 1e-12);
      CHECK(r.stats[c].cycle == c + 1);
    }
  }
}

TEST_CASE("evolve is deterministic and seed-sensitive") {
  const auto& ws = test::synthetic_workspace();
  const ViabilityEvaluator evaluator(ws.test[ws.factuals[1]], *ws.predictor, ws.feasibility_model);
  const auto ctx = ws.context(evaluator);
  auto config = EvoConfig::from_name("CBI-ES-UC3-SBM-RR", R"({"population_size": 40, "offspring_per_cycle": 10, "cycles": 10, "seed": 4})");
  const auto first = evolve(config, ctx);
  const auto second = evolve(config, ctx);
  CHECK(first.stats == second.stats);
  REQUIRE(first.population.size() == second.population.size());
  for (std::size_t i = 0; i < first.population.size(); ++i) {
    CHECK(first.population.individuals[i].genome == second.population.individuals[i].genome);
  }
  config.seed = 5;
  CHECK(evolve(config, ctx).stats != first.stats);
}

TEST_CASE("with a constant predictor delta is zero throughout") {
  const Toy toy;
  const auto config =
      EvoConfig::from_name("SBI-RWS-OPC-SBM-BBR", R"({"population_size": 30, "offspring_per_cycle": 10, "cycles": 15})");
  const auto r = evolve(config, toy.context());
  for (const auto& s : r.stats) {
    CHECK(s.mean_delta == 0.0);
  }
  for (const auto& ind : r.population.individuals) {
    CHECK(ind.score.delta == 0.0);
  }
}

TEST_CASE("final scores match a fresh evaluation") {
  const auto& ws = test::synthetic_workspace();
  const ViabilityEvaluator evaluator(ws.test[ws.factuals[2]], *ws.predictor, ws.feasibility_model);
  const auto ctx = ws.context(evaluator);
  const auto config =
      EvoConfig::from_name("RI-TS-TPC-RM-RR", R"({"population_size": 30, "offspring_per_cycle": 10, "cycles": 10})");
  const auto r = evolve(config, ctx);
  for (const auto& ind : r.population.individuals) {
    CHECK(satisfies_invariants(ind.genome, ws.encoder.vocab_size()));
    CHECK(ind.score == evaluator.score(ind.genome));
  }
}

TEST_CASE("grid presets enumerate distinct parseable configs") {
  const auto full = cfseq::preset_config_names("full162");
  const auto revised = cfseq::preset_config_names("revised135");
  CHECK(full.size() == 162);
  CHECK(revised.size() == 135);
  for (const auto* names : {&full, &revised}) {
    std::set<std::string> unique(names->begin(), names->end());
    CHECK(unique.size() == names->size());
    for (const auto& name : *names) {
      CHECK(cfseq::format_config_name(cfseq::parse_config_name(name)) == name);
    }
  }
  CHECK(std::find(revised.begin(), revised.end(), "CBI-ES-UC3-SBM-RR") != revised.end());
  CHECK(std::find(full.begin(), full.end(), "CBI-RWS-OPC-SBM-FSR") != full.end());
  CHECK_THROWS_AS((void)cfseq::preset_config_names("all"), cfseq::ArgumentError);
}
