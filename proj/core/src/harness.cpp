#include "cfseq/harness.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "cfseq/csv.hpp"
#include "cfseq/errors.hpp"
#include "cfseq/external_predictor.hpp"
#include "cfseq/rng.hpp"

namespace cfseq {

namespace {

using nlohmann::json;

constexpr std::uint64_t kFactualStream = 0xFAC7;
constexpr std::uint64_t kValidationStream = 0x7A11D;
constexpr std::uint64_t kTrainingStream = 0x7EA1;
constexpr std::uint64_t kBaselineStream = 0xBA5E;
constexpr std::uint64_t kConfigStream = 0xC0F1;

template <typename T>
void read_optional(const json& doc, const char* key, T& into) {
  if (const auto it = doc.find(key); it != doc.end()) {
    into = it->get<T>();
  }
}

std::string num(double v) { return fmt::format("{}", v); }

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ConfigurationError(fmt::format("cannot write '{}'", path.string()));
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
}

ComponentSummary component(const std::vector<double>& values) {
  ComponentSummary s;
  if (values.empty()) {
    return s;
  }
  s.median = median(values);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  return s;
}

json metrics_json(const PredictionMetrics& m) {
  return json{{"precision", m.precision},
              {"recall", m.recall},
              {"f1", m.f1},
              {"true_positives", m.true_positives},
              {"false_positives", m.false_positives},
              {"false_negatives", m.false_negatives},
              {"true_negatives", m.true_negatives},
              {"zero_division", m.zero_division}};
}

json component_json(const ComponentSummary& c) { return json{{"median", c.median}, {"mean", c.mean}}; }

void write_trajectory_header(std::ostream& out) {
  out << "generator,factual_id,cycle,mean_total,median_total,max_total,mean_similarity,mean_sparsity,"
         "mean_feasibility,mean_delta\n";
}

void write_trajectory_row(const TrajectoryRow& row, std::ostream& out) {
  const auto& s = row.stats;
  out << csv::escape(row.generator) << ',' << csv::escape(row.factual_id) << ',' << s.cycle << ','
      << num(s.mean_total) << ',' << num(s.median_total) << ',' << num(s.max_total) << ','
      << num(s.mean_similarity) << ',' << num(s.mean_sparsity) << ',' << num(s.mean_feasibility) << ','
      << num(s.mean_delta) << '\n';
}

/// One generator on one factual, already truncated to the candidate budget.
struct RunResult {
  GeneratorOutput output;
};

std::vector<RunResult> execute_runs(const Workspace& workspace,
                                    std::span<const std::unique_ptr<CounterfactualGenerator>> generators,
                                    std::span<const std::uint64_t> generator_keys,
                                    const std::vector<ViabilityEvaluator>& evaluators, std::size_t n,
                                    std::uint64_t seed, std::size_t threads) {
  const std::size_t n_factuals = evaluators.size();
  std::vector<RunResult> results(generators.size() * n_factuals);
  parallel_for(results.size(), threads, [&](std::size_t job) {
    const std::size_t g = job / n_factuals;
    const std::size_t f = job % n_factuals;
    auto output = generators[g]->generate(evaluators[f], workspace, n, run_seed(seed, generator_keys[g], f));
    if (output.candidates.size() > n) {
      output.candidates.resize(n);
    }
    results[job].output = std::move(output);
  });
  return results;
}

std::vector<ViabilityEvaluator> make_evaluators(const Workspace& workspace) {
  std::vector<ViabilityEvaluator> evaluators;
  evaluators.reserve(workspace.factuals.size());
  for (const std::size_t index : workspace.factuals) {
    evaluators.emplace_back(workspace.test.at(index), *workspace.predictor, workspace.feasibility_model);
  }
  return evaluators;
}

/// Configs with identical name, overrides and seed share random streams so
/// their runs are reproducible regardless of position in the list.
std::uint64_t generator_key(const CounterfactualGenerator& generator) {
  if (const auto* evo = dynamic_cast<const EvolutionaryGenerator*>(&generator)) {
    return derive_seed(kConfigStream, {evo->config().seed});
  }
  std::uint64_t key = kBaselineStream;
  for (const char c : generator.name()) {
    key = mix64(key ^ static_cast<unsigned char>(c));
  }
  return key;
}

std::vector<std::uint64_t> generator_keys(std::span<const std::unique_ptr<CounterfactualGenerator>> generators) {
  std::vector<std::uint64_t> keys;
  keys.reserve(generators.size());
  for (const auto& g : generators) {
    keys.push_back(generator_key(*g));
  }
  return keys;
}

void append_candidates(BenchmarkReport& report, const Workspace& workspace, const std::string& generator,
                       const std::string& factual_id, const GeneratorOutput& output) {
  for (std::size_t r = 0; r < output.candidates.size(); ++r) {
    const auto& candidate = output.candidates[r];
    report.candidates.push_back(CandidateRow{factual_id, generator, r + 1, candidate.score,
                                             activity_string(candidate.trace, workspace.encoder),
                                             candidate.trace.valid_len});
  }
}

void append_trajectories(BenchmarkReport& report, const std::string& generator, const std::string& factual_id,
                         const GeneratorOutput& output) {
  for (const auto& stats : output.trajectory) {
    report.trajectories.push_back(TrajectoryRow{generator, factual_id, stats});
  }
}

std::vector<std::string> factual_ids(const Workspace& workspace) {
  std::vector<std::string> ids;
  for (const std::size_t index : workspace.factuals) {
    ids.push_back(workspace.test.at(index).case_id);
  }
  return ids;
}

}  // namespace

// ---------------------------------------------------------------------------
// Spec

void ExperimentSpec::validate() const {
  if (!dataset.synthetic && (dataset.csv.empty() || dataset.schema.empty())) {
    throw ConfigurationError("dataset needs both 'csv' and 'schema' unless synthetic");
  }
  if (n_factuals == 0) {
    throw ConfigurationError("n_factuals must be positive");
  }
  if (counterfactuals_per_factual == 0) {
    throw ConfigurationError("counterfactuals_per_factual must be positive");
  }
  if (max_len == 0) {
    throw ConfigurationError("max_len must be positive");
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigurationError("test_fraction must lie in (0, 1)");
  }
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigurationError("validation_fraction must lie in (0, 1)");
  }
  if (smoothing < 0.0) {
    throw ConfigurationError("smoothing must be non-negative");
  }
  if (n_bins == 0) {
    throw ConfigurationError("n_bins must be positive");
  }
  for (const auto& entry : configs) {
    auto config = EvoConfig::from_name(entry.name, entry.overrides);
    config.validate();
  }
}

ExperimentSpec ExperimentSpec::from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("experiment spec: {}", e.what()));
  }
  if (!doc.is_object()) {
    throw ParseError("experiment spec must be a JSON object");
  }
  ExperimentSpec spec;
  try {
    if (const auto it = doc.find("dataset"); it != doc.end()) {
      const auto& d = *it;
      if (d.contains("csv")) {
        spec.dataset.synthetic = false;
        spec.dataset.csv = d.at("csv").get<std::string>();
        spec.dataset.schema = d.value("schema", std::string{});
      }
      if (const auto s = d.find("synthetic"); s != d.end()) {
        spec.dataset.synthetic = true;
        read_optional(*s, "n_cases", spec.dataset.synthesis.n_cases);
        read_optional(*s, "n_activities", spec.dataset.synthesis.n_activities);
        read_optional(*s, "seed", spec.dataset.synthesis.seed);
        read_optional(*s, "max_trace_len", spec.dataset.synthesis.max_trace_len);
        read_optional(*s, "critical_activity", spec.dataset.synthesis.rule.critical_activity);
        read_optional(*s, "min_occurrences", spec.dataset.synthesis.rule.min_occurrences);
      }
    }
    if (const auto it = doc.find("configs"); it != doc.end()) {
      for (const auto& c : *it) {
        ConfigEntry entry;
        if (c.is_string()) {
          entry.name = c.get<std::string>();
        } else {
          entry.name = c.at("name").get<std::string>();
          if (const auto o = c.find("overrides"); o != c.end()) {
            entry.overrides = o->dump();
          }
        }
        spec.configs.push_back(std::move(entry));
      }
    }
    // A preset appends its grid after any explicit configs.
    if (const auto it = doc.find("preset"); it != doc.end()) {
      for (auto& name : preset_config_names(it->get<std::string>())) {
        spec.configs.push_back(ConfigEntry{std::move(name), {}});
      }
    }
    if (const auto it = doc.find("baselines"); it != doc.end()) {
      spec.baselines.clear();
      for (const auto& b : *it) {
        spec.baselines.push_back(parse_baseline(b.get<std::string>()));
      }
    }
    read_optional(doc, "n_factuals", spec.n_factuals);
    read_optional(doc, "counterfactuals_per_factual", spec.counterfactuals_per_factual);
    read_optional(doc, "cycles", spec.cycles);
    read_optional(doc, "seed", spec.seed);
    if (const auto it = doc.find("output_dir"); it != doc.end()) {
      spec.output_dir = it->get<std::string>();
    }
    read_optional(doc, "max_len", spec.max_len);
    read_optional(doc, "test_fraction", spec.test_fraction);
    read_optional(doc, "validation_fraction", spec.validation_fraction);
    read_optional(doc, "external_predictor", spec.external_predictor);
    read_optional(doc, "threads", spec.threads);
    if (const auto it = doc.find("markov"); it != doc.end()) {
      read_optional(*it, "smoothing", spec.smoothing);
      read_optional(*it, "n_bins", spec.n_bins);
    }
    if (const auto it = doc.find("predictor"); it != doc.end()) {
      read_optional(*it, "epochs", spec.training.epochs);
      read_optional(*it, "learning_rate", spec.training.learning_rate);
      read_optional(*it, "l2", spec.training.l2);
      read_optional(*it, "seed", spec.training.seed);
    }
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("experiment spec: {}", e.what()));
  }
  spec.validate();
  return spec;
}

ExperimentSpec ExperimentSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigurationError(fmt::format("cannot open experiment spec '{}'", path.string()));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

std::string ExperimentSpec::to_json() const {
  json doc;
  if (dataset.synthetic) {
    const auto& s = dataset.synthesis;
    doc["dataset"]["synthetic"] = {{"n_cases", s.n_cases},
                                   {"n_activities", s.n_activities},
                                   {"seed", s.seed},
                                   {"max_trace_len", s.max_trace_len},
                                   {"critical_activity", s.rule.critical_activity},
                                   {"min_occurrences", s.rule.min_occurrences}};
  } else {
    doc["dataset"] = {{"csv", dataset.csv.string()}, {"schema", dataset.schema.string()}};
  }
  doc["configs"] = json::array();
  for (const auto& c : configs) {
    json entry{{"name", c.name}};
    if (!c.overrides.empty()) {
      entry["overrides"] = json::parse(c.overrides);
    }
    doc["configs"].push_back(std::move(entry));
  }
  doc["baselines"] = json::array();
  for (const auto b : baselines) {
    doc["baselines"].push_back(std::string{to_string(b)});
  }
  doc["n_factuals"] = n_factuals;
  doc["counterfactuals_per_factual"] = counterfactuals_per_factual;
  doc["cycles"] = cycles;
  doc["seed"] = seed;
  doc["output_dir"] = output_dir.string();
  doc["max_len"] = max_len;
  doc["test_fraction"] = test_fraction;
  doc["validation_fraction"] = validation_fraction;
  doc["markov"] = {{"smoothing", smoothing}, {"n_bins", n_bins}};
  doc["predictor"] = {{"epochs", training.epochs},
                      {"learning_rate", training.learning_rate},
                      {"l2", training.l2},
                      {"seed", training.seed}};
  doc["external_predictor"] = external_predictor;
  doc["threads"] = threads;
  return doc.dump(2);
}

// ---------------------------------------------------------------------------
// Workspace

EvolutionContext Workspace::context(const ViabilityEvaluator& evaluator) const {
  return EvolutionContext{evaluator, feasibility_model, train, encoder.vocab_size(), encoder.max_len()};
}

std::vector<std::size_t> sample_factuals(std::span<const EncodedTrace> test, std::size_t n,
                                         std::uint64_t seed) {
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < test.size(); ++i) {
    by_class[test[i].outcome == 1 ? 1 : 0].push_back(i);
  }
  auto rng = derive_rng(seed, {kFactualStream});
  for (auto& pool : by_class) {
    for (std::size_t i = pool.size(); i > 1; --i) {
      std::swap(pool[i - 1], pool[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i) - 1))]);
    }
  }
  std::vector<std::size_t> chosen;
  std::size_t next[2] = {0, 0};
  std::size_t turn = 1;
  while (chosen.size() < n && (next[0] < by_class[0].size() || next[1] < by_class[1].size())) {
    if (next[turn] < by_class[turn].size()) {
      chosen.push_back(by_class[turn][next[turn]++]);
    }
    turn ^= 1U;
  }
  return chosen;
}

Workspace prepare_workspace(const ExperimentSpec& spec) {
  spec.validate();
  EventLog log;
  if (spec.dataset.synthetic) {
    log = synthesize_log(spec.dataset.synthesis);
  } else {
    log = load_csv(spec.dataset.csv, SchemaConfig::load(spec.dataset.schema));
  }
  log = preprocess(log, spec.max_len);

  std::size_t longest = 0;
  for (const auto& trace : log.traces) {
    longest = std::max(longest, trace.size());
  }

  Workspace ws;
  std::tie(ws.train_log, ws.test_log) = split_train_test(log, spec.test_fraction, spec.seed);
  ws.encoder = EncoderSpec::fit(ws.train_log, longest);
  ws.train = ws.encoder.encode_all(ws.train_log);
  ws.test = ws.encoder.encode_all(ws.test_log);
  ws.feasibility_model = MarkovFeasibilityModel::fit(ws.train, ws.encoder.layout(), ws.encoder.vocab_size(), spec.smoothing, spec.n_bins);

  if (!spec.external_predictor.empty()) {
    ws.predictor = std::make_shared<ExternalPredictor>(spec.external_predictor, ws.encoder);
    ws.train_metrics = evaluate(*ws.predictor, ws.train);
  } else {
    // Hold out part of the training cases for metric reporting.
    auto [fit_log, validation_log] =
        split_train_test(ws.train_log, spec.validation_fraction, derive_seed(spec.seed, {kValidationStream}));
    const auto fit = ws.encoder.encode_all(fit_log);
    const auto validation = ws.encoder.encode_all(validation_log);
    auto options = spec.training;
    options.seed = derive_seed(spec.seed, {kTrainingStream, options.seed});
    auto model = std::make_shared<LogisticOutcomePredictor>(
        LogisticOutcomePredictor::train(fit, ws.encoder.vocab_size(), options));
    ws.train_metrics = evaluate(*model, fit);
    ws.validation_metrics = evaluate(*model, validation);
    ws.predictor = std::move(model);
  }
  ws.test_metrics = evaluate(*ws.predictor, ws.test);
  ws.factuals = sample_factuals(ws.test, spec.n_factuals, spec.seed);
  return ws;
}

// ---------------------------------------------------------------------------
// Generators

GeneratorOutput EvolutionaryGenerator::generate(const ViabilityEvaluator& evaluator, const Workspace& workspace,
                                                std::size_t n, std::uint64_t seed) const {
  auto config = config_;
  config.seed = seed;
  const auto result = evolve(config, workspace.context(evaluator));
  GeneratorOutput out;
  out.trajectory = result.stats;
  const std::size_t keep = std::min(n, result.population.size());
  out.candidates.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    const auto& ind = result.population.individuals[i];
    out.candidates.push_back(ScoredCandidate{ind.genome, ind.score});
  }
  return out;
}

GeneratorOutput BaselineGenerator::generate(const ViabilityEvaluator& evaluator, const Workspace& workspace,
                                            std::size_t n, std::uint64_t seed) const {
  Rng rng{seed};
  GeneratorOutput out;
  out.candidates = generate_baseline(kind_, evaluator, n, workspace.train, workspace.feasibility_model,
                                     workspace.encoder.vocab_size(), workspace.encoder.max_len(), rng);
  return out;
}

std::vector<std::unique_ptr<CounterfactualGenerator>> make_generators(const ExperimentSpec& spec,
                                                                      bool include_baselines) {
  std::vector<std::unique_ptr<CounterfactualGenerator>> generators;
  for (const auto& entry : spec.configs) {
    std::string overrides = entry.overrides;
    json doc = overrides.empty() ? json::object() : json::parse(overrides);
    if (!doc.contains("cycles")) {
      doc["cycles"] = spec.cycles;
    }
    generators.push_back(std::make_unique<EvolutionaryGenerator>(EvoConfig::from_name(entry.name, doc.dump())));
  }
  if (include_baselines) {
    for (const auto kind : spec.baselines) {
      generators.push_back(std::make_unique<BaselineGenerator>(kind));
    }
  }
  return generators;
}

// ---------------------------------------------------------------------------
// Reporting

double median(std::vector<double> values) {
  if (values.empty()) {
    throw DataError("median of an empty set");
  }
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

const GeneratorSummary* BenchmarkReport::summary(std::string_view generator) const noexcept {
  for (const auto& s : summaries) {
    if (s.generator == generator) {
      return &s;
    }
  }
  return nullptr;
}

std::vector<GeneratorSummary> summarize_candidates(std::span<const CandidateRow> rows) {
  std::vector<std::string> order;
  std::map<std::string, std::array<std::vector<double>, 5>> columns;
  for (const auto& row : rows) {
    auto [it, inserted] = columns.try_emplace(row.generator);
    if (inserted) {
      order.push_back(row.generator);
    }
    auto& c = it->second;
    c[0].push_back(row.score.similarity);
    c[1].push_back(row.score.sparsity);
    c[2].push_back(row.score.feasibility);
    c[3].push_back(row.score.delta);
    c[4].push_back(row.score.total);
  }
  std::vector<GeneratorSummary> out;
  for (const auto& name : order) {
    const auto& c = columns.at(name);
    GeneratorSummary s;
    s.generator = name;
    s.count = c[4].size();
    s.similarity = component(c[0]);
    s.sparsity = component(c[1]);
    s.feasibility = component(c[2]);
    s.delta = component(c[3]);
    s.total = component(c[4]);
    out.push_back(std::move(s));
  }
  return out;
}

std::string activity_string(const EncodedTrace& trace, const EncoderSpec& encoder) {
  std::string out;
  for (std::size_t t = 0; t < trace.valid_len; ++t) {
    if (t > 0) {
      out += ';';
    }
    out += encoder.activity_name(trace.activity_ids[t]);
  }
  return out;
}

void write_candidates_csv(const BenchmarkReport& report, std::ostream& out) {
  out << "factual_id,generator,rank,similarity,sparsity,feasibility,delta,total,activities,valid_len\n";
  for (const auto& row : report.candidates) {
    const auto& s = row.score;
    out << csv::escape(row.factual_id) << ',' << csv::escape(row.generator) << ',' << row.rank << ','
        << num(s.similarity) << ',' << num(s.sparsity) << ',' << num(s.feasibility) << ',' << num(s.delta)
        << ',' << num(s.total) << ',' << csv::escape(row.activities) << ',' << row.valid_len << '\n';
  }
}

void write_trajectories_csv(const BenchmarkReport& report, std::ostream& out) {
  write_trajectory_header(out);
  for (const auto& row : report.trajectories) {
    write_trajectory_row(row, out);
  }
}

void write_summary_csv(const BenchmarkReport& report, std::ostream& out) {
  out << "generator,count,median_similarity,mean_similarity,median_sparsity,mean_sparsity,"
         "median_feasibility,mean_feasibility,median_delta,mean_delta,median_total,mean_total\n";
  for (const auto& s : report.summaries) {
    out << csv::escape(s.generator) << ',' << s.count << ',' << num(s.similarity.median) << ','
        << num(s.similarity.mean) << ',' << num(s.sparsity.median) << ',' << num(s.sparsity.mean) << ','
        << num(s.feasibility.median) << ',' << num(s.feasibility.mean) << ',' << num(s.delta.median) << ','
        << num(s.delta.mean) << ',' << num(s.total.median) << ',' << num(s.total.mean) << '\n';
  }
}

void write_ranking_csv(const BenchmarkReport& report, std::ostream& out) {
  out << "rank,generator,final_mean_viability\n";
  for (const auto& row : report.ranking) {
    out << row.rank << ',' << csv::escape(row.generator) << ',' << num(row.final_mean_viability) << '\n';
  }
}

std::string report_json(const BenchmarkReport& report) {
  json doc;
  doc["factual_ids"] = report.factual_ids;
  doc["test_metrics"] = metrics_json(report.test_metrics);
  doc["summaries"] = json::array();
  for (const auto& s : report.summaries) {
    doc["summaries"].push_back(json{{"generator", s.generator},
                                    {"count", s.count},
                                    {"similarity", component_json(s.similarity)},
                                    {"sparsity", component_json(s.sparsity)},
                                    {"feasibility", component_json(s.feasibility)},
                                    {"delta", component_json(s.delta)},
                                    {"total", component_json(s.total)}});
  }
  if (!report.ranking.empty()) {
    doc["ranking"] = json::array();
    for (const auto& r : report.ranking) {
      doc["ranking"].push_back(
          json{{"rank", r.rank}, {"generator", r.generator}, {"final_mean_viability", r.final_mean_viability}});
    }
    doc["top"] = report.top;
    doc["bottom"] = report.bottom;
  }
  return doc.dump(2) + "\n";
}

std::string report_markdown(const BenchmarkReport& report, std::string_view title) {
  std::string md = fmt::format("# {}\n\n", title);
  const auto& m = report.test_metrics;
  md += fmt::format("Predictor on the test split: precision {:.4f}, recall {:.4f}, F1 {:.4f}.\n\n", m.precision,
                    m.recall, m.f1);
  md += fmt::format("Factuals: {}.\n\n", report.factual_ids.size());
  if (!report.summaries.empty()) {
    md += "| generator | n | similarity | sparsity | feasibility | delta | total |\n";
    md += "|---|---:|---:|---:|---:|---:|---:|\n";
    for (const auto& s : report.summaries) {
      md += fmt::format("| {} | {} | {:.4f} | {:.4f} | {:.4f} | {:.4f} | {:.4f} |\n", s.generator, s.count,
                        s.similarity.median, s.sparsity.median, s.feasibility.median, s.delta.median,
                        s.total.median);
    }
    md += "\nValues are medians over all reported candidates.\n";
  }
  if (!report.ranking.empty()) {
    md += "\n| rank | config | final mean viability |\n|---:|---|---:|\n";
    for (const auto& r : report.ranking) {
      md += fmt::format("| {} | {} | {:.4f} |\n", r.rank, r.generator, r.final_mean_viability);
    }
    md += fmt::format("\nTop: {}\n\nBottom: {}\n", fmt::join(report.top, ", "), fmt::join(report.bottom, ", "));
  }
  return md;
}

// ---------------------------------------------------------------------------
// Runs

std::uint64_t run_seed(std::uint64_t seed, std::uint64_t generator_key, std::size_t factual_index) noexcept {
  return derive_seed(seed, {generator_key, static_cast<std::uint64_t>(factual_index)});
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) {
    threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  }
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
      workers.emplace_back([&] {
        while (!failed.load()) {
          const std::size_t i = next.fetch_add(1);
          if (i >= n) {
            return;
          }
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) {
              error = std::current_exception();
            }
            failed.store(true);
          }
        }
      });
    }
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

BenchmarkReport run_benchmark(const Workspace& workspace,
                              std::span<const std::unique_ptr<CounterfactualGenerator>> generators,
                              std::size_t counterfactuals_per_factual, std::uint64_t seed, std::size_t threads) {
  const auto evaluators = make_evaluators(workspace);
  const auto keys = generator_keys(generators);
  const auto results =
      execute_runs(workspace, generators, keys, evaluators, counterfactuals_per_factual, seed, threads);

  BenchmarkReport report;
  report.factual_ids = factual_ids(workspace);
  report.test_metrics = workspace.test_metrics;
  for (std::size_t f = 0; f < evaluators.size(); ++f) {
    for (std::size_t g = 0; g < generators.size(); ++g) {
      const auto& output = results[g * evaluators.size() + f].output;
      append_candidates(report, workspace, generators[g]->name(), report.factual_ids[f], output);
    }
  }
  for (std::size_t g = 0; g < generators.size(); ++g) {
    for (std::size_t f = 0; f < evaluators.size(); ++f) {
      append_trajectories(report, generators[g]->name(), report.factual_ids[f],
                          results[g * evaluators.size() + f].output);
    }
  }
  report.summaries = summarize_candidates(report.candidates);
  return report;
}

BenchmarkReport run_benchmark(const ExperimentSpec& spec) {
  const auto workspace = prepare_workspace(spec);
  const auto generators = make_generators(spec, true);
  if (generators.empty()) {
    throw ConfigurationError("benchmark needs at least one config or baseline");
  }
  auto report = run_benchmark(workspace, generators, spec.counterfactuals_per_factual, spec.seed, spec.threads);
  if (!spec.output_dir.empty()) {
    std::filesystem::create_directories(spec.output_dir);
    {
      auto out = open_output(spec.output_dir / "candidates.csv");
      write_candidates_csv(report, out);
    }
    {
      auto out = open_output(spec.output_dir / "summary.csv");
      write_summary_csv(report, out);
    }
    {
      auto out = open_output(spec.output_dir / "trajectories.csv");
      write_trajectories_csv(report, out);
    }
    write_text(spec.output_dir / "report.json", report_json(report));
    write_text(spec.output_dir / "report.md", report_markdown(report, "Benchmark"));
  }
  return report;
}

BenchmarkReport run_grid(const ExperimentSpec& spec) {
  if (spec.configs.size() < 2) {
    throw ConfigurationError("grid needs at least two configs");
  }
  const auto workspace = prepare_workspace(spec);
  const auto generators = make_generators(spec, false);
  const auto evaluators = make_evaluators(workspace);
  const auto keys = generator_keys(generators);

  BenchmarkReport report;
  report.factual_ids = factual_ids(workspace);
  report.test_metrics = workspace.test_metrics;

  std::ofstream trajectories;
  if (!spec.output_dir.empty()) {
    std::filesystem::create_directories(spec.output_dir);
    trajectories = open_output(spec.output_dir / "grid_trajectories.csv");
    write_trajectory_header(trajectories);
    trajectories.flush();
  }

  // Configs run one after another so a failure leaves every finished config on disk.
  for (std::size_t g = 0; g < generators.size(); ++g) {
    const auto one = std::span(generators).subspan(g, 1);
    const auto key = std::span(keys).subspan(g, 1);
    const auto results =
        execute_runs(workspace, one, key, evaluators, spec.counterfactuals_per_factual, spec.seed, spec.threads);
    const std::string name = generators[g]->name();
    const std::size_t first_row = report.trajectories.size();
    double final_sum = 0.0;
    for (std::size_t f = 0; f < evaluators.size(); ++f) {
      const auto& output = results[f].output;
      append_trajectories(report, name, report.factual_ids[f], output);
      append_candidates(report, workspace, name, report.factual_ids[f], output);
      final_sum += output.trajectory.empty() ? 0.0 : output.trajectory.back().mean_total;
    }
    report.ranking.push_back(RankingRow{name, final_sum / static_cast<double>(evaluators.size()), 0});
    if (trajectories.is_open()) {
      for (std::size_t r = first_row; r < report.trajectories.size(); ++r) {
        write_trajectory_row(report.trajectories[r], trajectories);
      }
      trajectories.flush();
    }
  }

  std::stable_sort(report.ranking.begin(), report.ranking.end(), [](const RankingRow& a, const RankingRow& b) {
    return a.final_mean_viability > b.final_mean_viability;
  });
  for (std::size_t r = 0; r < report.ranking.size(); ++r) {
    report.ranking[r].rank = r + 1;
  }
  const std::size_t k = std::min<std::size_t>(5, report.ranking.size());
  for (std::size_t r = 0; r < k; ++r) {
    report.top.push_back(report.ranking[r].generator);
    report.bottom.push_back(report.ranking[report.ranking.size() - 1 - r].generator);
  }
  report.summaries = summarize_candidates(report.candidates);

  if (!spec.output_dir.empty()) {
    {
      auto out = open_output(spec.output_dir / "grid_ranking.csv");
      write_ranking_csv(report, out);
    }
    write_text(spec.output_dir / "report.json", report_json(report));
    write_text(spec.output_dir / "report.md", report_markdown(report, "Operator grid"));
  }
  return report;
}

}  // namespace cfseq
