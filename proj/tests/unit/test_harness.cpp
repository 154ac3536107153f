#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "../support/fixtures.hpp"
#include "cfseq/errors.hpp"
#include "cfseq/harness.hpp"

using namespace cfseq;

namespace {

/// Emits `n` copies of the factual with a fixed score.
class StubGenerator final : public CounterfactualGenerator {
 public:
  StubGenerator(std::string name, double value) : name_(std::move(name)), value_(value) {}
  std::string name() const override { return name_; }
  GeneratorOutput generate(const ViabilityEvaluator& evaluator, const Workspace&, std::size_t n,
                           std::uint64_t) const override {
    GeneratorOutput out;
    for (std::size_t i = 0; i < n; ++i) {
      out.candidates.push_back(
          ScoredCandidate{evaluator.factual(), ViabilityScore::from_components(value_, value_, value_, value_)});
    }
    return out;
  }

 private:
  std::string name_;
  double value_;
};

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::size_t line_count(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("cfseq_harness_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

ExperimentSpec small_spec() {
  auto spec = test::synthetic_spec();
  spec.n_factuals = 2;
  spec.counterfactuals_per_factual = 5;
  spec.cycles = 5;
  spec.configs = {{"CBI-RWS-OPC-SBM-FSR", R"({"population_size": 30, "offspring_per_cycle": 10})"},
                  {"RI-TS-UC5-RM-BBR", R"({"population_size": 30, "offspring_per_cycle": 10})"}};
  return spec;
}

}  // namespace

TEST_CASE("median") {
  CHECK(median({3.0}) == 3.0);
  CHECK(median({4.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK_THROWS_AS(median({}), DataError);
}

TEST_CASE("factual sampling alternates classes") {
  std::vector<EncodedTrace> test(10, test::make_trace1({1}, {0.0}, 2));
  for (std::size_t i = 0; i < 3; ++i) {
    test[i].outcome = 1;
  }
  const auto chosen = sample_factuals(test, 8, 5);
  REQUIRE(chosen.size() == 8);
  CHECK(std::set<std::size_t>(chosen.begin(), chosen.end()).size() == 8);
  const int expected[] = {1, 0, 1, 0, 1, 0, 0, 0};
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    CHECK(test[chosen[i]].outcome == expected[i]);
  }
  CHECK(sample_factuals(test, 50, 5).size() == 10);
  CHECK(sample_factuals(test, 8, 5) == chosen);
}

TEST_CASE("synthetic workspace is consistent") {
  const auto& ws = test::synthetic_workspace();
  CHECK(ws.factuals.size() == 10);
  CHECK(ws.train.size() + ws.test.size() == 200);
  CHECK(ws.test_metrics.f1 >= 0.9);
  std::size_t positives = 0;
  for (const auto i : ws.factuals) {
    positives += static_cast<std::size_t>(ws.test[i].outcome);
    CHECK(ws.test[i].max_len() == ws.encoder.max_len());
  }
  CHECK(positives == 5);
}

TEST_CASE("stub generators: summaries equal the constants") {
  const auto& ws = test::synthetic_workspace();
  std::vector<std::unique_ptr<CounterfactualGenerator>> generators;
  generators.push_back(std::make_unique<StubGenerator>("low", 0.25));
  generators.push_back(std::make_unique<StubGenerator>("high", 0.75));
  const auto report = run_benchmark(ws, generators, 4, 1, 1);
  CHECK(report.candidates.size() == 2 * 4 * ws.factuals.size());
  CHECK(report.trajectories.empty());
  for (const auto& [name, v] : {std::pair{"low", 0.25}, std::pair{"high", 0.75}}) {
    const auto* s = report.summary(name);
    REQUIRE(s != nullptr);
    CHECK(s->count == 4 * ws.factuals.size());
    CHECK(s->similarity.median == v);
    CHECK(s->delta.mean == v);
    CHECK(s->total.median == 4 * v);
  }
  CHECK(report.summary("missing") == nullptr);
  CHECK(report.candidates[0].factual_id == report.factual_ids[0]);
  CHECK(report.candidates[0].generator == "low");
  CHECK(report.candidates[4].generator == "high");
}

TEST_CASE("candidate CSV layout") {
  BenchmarkReport report;
  report.candidates.push_back(
      CandidateRow{"c1", "CBGW", 1, ViabilityScore::from_components(0.5, 0.25, 0.125, 0.1), "a;b", 2});
  std::ostringstream out;
  write_candidates_csv(report, out);
  CHECK(out.str() ==
        "factual_id,generator,rank,similarity,sparsity,feasibility,delta,total,activities,valid_len\n"
        "c1,CBGW,1,0.5,0.25,0.125,0.1,0.975,a;b,2\n");
}

TEST_CASE("spec JSON round-trip and validation") {
  auto spec = small_spec();
  spec.seed = 99;
  spec.baselines = {BaselineKind::CaseBasedGenerator};
  const auto back = ExperimentSpec::from_json(spec.to_json());
  CHECK(back.to_json() == spec.to_json());
  CHECK(back.configs.size() == 2);
  CHECK(back.configs[1].name == "RI-TS-UC5-RM-BBR");
  CHECK(back.seed == 99);

  const auto named = ExperimentSpec::from_json(R"({"configs": ["CBI-RWS-OPC-SBM-FSR"], "n_factuals": 3})");
  CHECK(named.configs.size() == 1);
  CHECK(named.n_factuals == 3);

  const auto preset = ExperimentSpec::from_json(R"({"configs": ["CBI-RWS-OPC-SBM-FSR"], "preset": "revised135"})");
  CHECK(preset.configs.size() == 136);
  CHECK(preset.configs.front().name == "CBI-RWS-OPC-SBM-FSR");
  CHECK_THROWS_AS((void)ExperimentSpec::from_json(R"({"preset": "huge"})"), cfseq::ArgumentError);
  CHECK(named.dataset.synthetic);

  CHECK_THROWS(ExperimentSpec::from_json("{"));
  CHECK_THROWS(ExperimentSpec::from_json(R"({"dataset": {"csv": "x.csv"}})"));
}

TEST_CASE("grid: trajectory rows, ranking and files") {
  auto spec = small_spec();
  spec.output_dir = scratch("grid");
  const auto report = run_grid(spec);
  CHECK(report.trajectories.size() == 2 * 2 * 5);
  REQUIRE(report.ranking.size() == 2);
  CHECK(report.ranking[0].rank == 1);
  CHECK(report.ranking[0].final_mean_viability >= report.ranking[1].final_mean_viability);
  CHECK(report.top.size() == 2);
  CHECK(report.top.front() == report.bottom.back());

  const auto csv = slurp(spec.output_dir / "grid_trajectories.csv");
  CHECK(line_count(csv) == 1 + 20);
  CHECK(line_count(slurp(spec.output_dir / "grid_ranking.csv")) == 3);
  CHECK(std::filesystem::exists(spec.output_dir / "report.json"));
  CHECK(std::filesystem::exists(spec.output_dir / "report.md"));

  spec.configs.pop_back();
  CHECK_THROWS_AS(run_grid(spec), ConfigurationError);
}

TEST_CASE("identical configs give identical trajectories") {
  auto spec = small_spec();
  spec.configs[1] = spec.configs[0];
  const auto report = run_grid(spec);
  REQUIRE(report.trajectories.size() == 20);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(report.trajectories[i].stats == report.trajectories[10 + i].stats);
  }
}

TEST_CASE("benchmark output is byte-identical across runs and thread counts") {
  auto spec = small_spec();
  spec.output_dir = scratch("bench_a");
  run_benchmark(spec);
  auto again = spec;
  again.output_dir = scratch("bench_b");
  again.threads = 3;
  run_benchmark(again);
  for (const char* file : {"candidates.csv", "summary.csv", "trajectories.csv", "report.json"}) {
    CHECK(slurp(spec.output_dir / file) == slurp(again.output_dir / file));
  }
  // 2 factuals x (2 configs + 3 baselines) x 5 candidates.
  CHECK(line_count(slurp(spec.output_dir / "candidates.csv")) == 1 + 50);
}

TEST_CASE("run seeds separate generators and factuals") {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t g = 0; g < 5; ++g) {
    for (std::size_t f = 0; f < 10; ++f) {
      seeds.insert(run_seed(7, g, f));
    }
  }
  CHECK(seeds.size() == 50);
  CHECK(run_seed(7, 1, 2) == run_seed(7, 1, 2));
}

TEST_CASE("parallel_for covers every index and propagates errors") {
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  CHECK_THROWS_AS(parallel_for(10, 3,
                               [](std::size_t i) {
                                 if (i == 5) {
                                   throw DataError("boom");
                                 }
                               }),
                  DataError);
}

TEST_CASE("evolutionary generator beats the case-based baseline") {
  auto spec = test::synthetic_spec();
  spec.n_factuals = 4;
  spec.counterfactuals_per_factual = 20;
  spec.cycles = 40;
  spec.configs = {{"CBI-RWS-OPC-SBM-FSR", R"({"population_size": 100, "offspring_per_cycle": 20})"}};
  spec.baselines = {BaselineKind::CaseBasedGenerator};
  const auto report = run_benchmark(spec);
  CHECK(report.summary("CBI-RWS-OPC-SBM-FSR")->total.median > report.summary("CBGW")->total.median);
}
