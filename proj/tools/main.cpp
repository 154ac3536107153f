// cfseq command line: synthesize logs, fit models, generate and benchmark
// counterfactual sequences.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "cfseq/errors.hpp"
#include "cfseq/external_predictor.hpp"
#include "cfseq/harness.hpp"
#include "cfseq/render.hpp"
#include "cfseq/viability.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::string log;
  std::string schema;
  std::string spec;
  std::vector<std::string> configs;
  std::string preset;
  std::string overrides;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string external_predictor;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw cfseq::ArgumentError(fmt::format("cannot open '{}'", path.string()));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw cfseq::ArgumentError(fmt::format("cannot write '{}'", path.string()));
  }
  out << text;
}

json parse_json_arg(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw cfseq::ArgumentError(fmt::format("{}: {}", what, e.what()));
  }
}

/// Spec file, then --overrides as a JSON merge patch, then the dedicated flags.
cfseq::ExperimentSpec build_spec(const CommonArgs& args) {
  json doc = args.spec.empty() ? json::object() : parse_json_arg(read_file(args.spec), "--spec");
  if (!args.overrides.empty()) {
    doc.merge_patch(parse_json_arg(args.overrides, "--overrides"));
  }
  if (!args.log.empty()) {
    if (args.schema.empty()) {
      throw cfseq::ArgumentError("--log requires --schema");
    }
    doc["dataset"] = {{"csv", args.log}, {"schema", args.schema}};
  }
  if (!args.configs.empty()) {
    doc["configs"] = args.configs;
  }
  if (!args.preset.empty()) {
    doc["preset"] = args.preset;
  }
  if (args.seed) {
    doc["seed"] = *args.seed;
  }
  if (!args.out.empty()) {
    doc["output_dir"] = args.out;
  }
  if (!args.external_predictor.empty()) {
    doc["external_predictor"] = args.external_predictor;
  }
  return cfseq::ExperimentSpec::from_json(doc.dump());
}

void add_common(CLI::App* cmd, CommonArgs& args, bool with_configs) {
  cmd->add_option("--log", args.log, "Event log CSV (omit for the synthetic log)");
  cmd->add_option("--schema", args.schema, "Attribute schema JSON for --log");
  cmd->add_option("--spec", args.spec, "Experiment spec JSON");
  if (with_configs) {
    cmd->add_option("--config", args.configs, "Operator config name, e.g. CBI-RWS-OPC-SBM-FSR (repeatable)");
    cmd->add_option("--preset", args.preset, "Operator grid preset: full162 or revised135");
  }
  cmd->add_option("--overrides", args.overrides, "JSON merge patch applied to the spec");
  cmd->add_option("--seed", args.seed, "Global seed");
  cmd->add_option("--out", args.out, "Output directory")->required();
  cmd->add_option("--external-predictor", args.external_predictor,
                  "Command scoring traces via the file protocol: <cmd> <in.csv> <out.csv>");
}

void print_metrics(const char* label, const cfseq::PredictionMetrics& m) {
  fmt::print("{:<10} precision {:.4f}  recall {:.4f}  f1 {:.4f}  (tp {} fp {} fn {} tn {})\n", label, m.precision,
             m.recall, m.f1, m.true_positives, m.false_positives, m.false_negatives, m.true_negatives);
}

void print_summaries(const cfseq::BenchmarkReport& report) {
  fmt::print("{:<24} {:>6} {:>10} {:>10}\n", "generator", "n", "median", "mean");
  for (const auto& s : report.summaries) {
    fmt::print("{:<24} {:>6} {:>10.4f} {:>10.4f}\n", s.generator, s.count, s.total.median, s.total.mean);
  }
}

int cmd_synthesize(const CommonArgs& args, const cfseq::SynthesisOptions& base) {
  auto options = base;
  if (args.seed) {
    options.seed = *args.seed;
  }
  const auto log = cfseq::synthesize_log(options);
  const fs::path out{args.out};
  fs::create_directories(out);
  cfseq::save_csv(log, out / "log.csv");
  write_file(out / "schema.json", cfseq::schema_config_of(log).to_json());
  std::size_t positives = 0;
  for (const auto& t : log.traces) {
    positives += t.outcome == 1 ? 1 : 0;
  }
  fmt::print("wrote {} cases ({} positive) to {}\n", log.size(), positives, (out / "log.csv").string());
  return 0;
}

int cmd_train_predictor(const CommonArgs& args) {
  const auto spec = build_spec(args);
  const auto ws = cfseq::prepare_workspace(spec);
  const fs::path out{args.out};
  fs::create_directories(out);
  write_file(out / "encoder.json", ws.encoder.to_json());
  if (const auto* model = dynamic_cast<const cfseq::LogisticOutcomePredictor*>(ws.predictor.get())) {
    write_file(out / "predictor.json", model->to_json());
  }
  print_metrics("train", ws.train_metrics);
  if (spec.external_predictor.empty()) {
    print_metrics("validation", ws.validation_metrics);
  }
  print_metrics("test", ws.test_metrics);
  return 0;
}

int cmd_fit_markov(const CommonArgs& args) {
  const auto spec = build_spec(args);
  const auto ws = cfseq::prepare_workspace(spec);
  const fs::path out{args.out};
  fs::create_directories(out);
  write_file(out / "encoder.json", ws.encoder.to_json());
  write_file(out / "markov.json", ws.feasibility_model.to_json());
  fmt::print("fitted on {} traces, {} activities\n", ws.train.size(), ws.encoder.vocab_size());
  return 0;
}

int cmd_generate(const CommonArgs& args, const std::string& factual_id) {
  auto spec = build_spec(args);
  if (spec.configs.empty()) {
    throw cfseq::ArgumentError("generate needs --config");
  }
  auto ws = cfseq::prepare_workspace(spec);
  if (!factual_id.empty()) {
    ws.factuals.clear();
    for (std::size_t i = 0; i < ws.test.size(); ++i) {
      if (ws.test[i].case_id == factual_id) {
        ws.factuals.push_back(i);
      }
    }
    if (ws.factuals.empty()) {
      throw cfseq::ArgumentError(fmt::format("factual '{}' is not in the test split", factual_id));
    }
  }
  const std::size_t index = ws.factuals.front();
  const auto generators = cfseq::make_generators(spec, false);
  const auto& generator = *generators.front();
  const cfseq::ViabilityEvaluator evaluator(ws.test[index], *ws.predictor, ws.feasibility_model);
  auto output = generator.generate(evaluator, ws, spec.counterfactuals_per_factual, cfseq::run_seed(spec.seed, 0, 0));
  if (output.candidates.size() > spec.counterfactuals_per_factual) {
    output.candidates.resize(spec.counterfactuals_per_factual);
  }

  cfseq::BenchmarkReport report;
  const std::string& id = ws.test[index].case_id;
  report.factual_ids = {id};
  // Factual plus decoded counterfactuals as one log, ready for `render`.
  cfseq::EventLog log;
  log.schemas = ws.train_log.schemas;
  log.activity_vocabulary = ws.train_log.activity_vocabulary;
  log.traces.push_back(ws.test_log.traces[index]);
  for (std::size_t r = 0; r < output.candidates.size(); ++r) {
    const auto& candidate = output.candidates[r];
    report.candidates.push_back(cfseq::CandidateRow{id, generator.name(), r + 1, candidate.score,
                                                    cfseq::activity_string(candidate.trace, ws.encoder),
                                                    candidate.trace.valid_len});
    auto trace = ws.encoder.decode(candidate.trace);
    trace.case_id = fmt::format("{}-cf{:03}", id, r + 1);
    trace.outcome = ws.predictor->predict_proba(candidate.trace) > 0.5 ? 1 : 0;
    log.traces.push_back(std::move(trace));
  }
  report.summaries = cfseq::summarize_candidates(report.candidates);

  const fs::path out{args.out};
  fs::create_directories(out);
  {
    std::ofstream csv(out / "candidates.csv", std::ios::binary);
    cfseq::write_candidates_csv(report, csv);
  }
  cfseq::save_csv(log, out / "counterfactuals.csv");
  write_file(out / "schema.json", cfseq::schema_config_of(log).to_json());
  fmt::print("factual {} (p1 = {:.4f}), {}\n", id, ws.predictor->predict_proba(ws.test[index]), generator.name());
  print_summaries(report);
  return 0;
}

int cmd_grid(const CommonArgs& args) {
  const auto spec = build_spec(args);
  const auto report = cfseq::run_grid(spec);
  for (const auto& row : report.ranking) {
    fmt::print("{:>3}  {:<24} {:.4f}\n", row.rank, row.generator, row.final_mean_viability);
  }
  return 0;
}

int cmd_benchmark(const CommonArgs& args) {
  const auto spec = build_spec(args);
  const auto report = cfseq::run_benchmark(spec);
  print_metrics("test", report.test_metrics);
  print_summaries(report);
  return 0;
}

int cmd_render(const CommonArgs& args, const std::string& factual_id, const std::string& counterfactual_id,
               const std::string& predictor_path, std::string encoder_path) {
  if (args.log.empty() || args.schema.empty()) {
    throw cfseq::ArgumentError("render needs --log and --schema");
  }
  const auto log = cfseq::load_csv(args.log, cfseq::SchemaConfig::load(args.schema));
  const cfseq::Trace* factual = nullptr;
  const cfseq::Trace* counterfactual = nullptr;
  for (const auto& t : log.traces) {
    if (t.case_id == factual_id) {
      factual = &t;
    }
    if (t.case_id == counterfactual_id) {
      counterfactual = &t;
    }
  }
  if (factual == nullptr || counterfactual == nullptr) {
    throw cfseq::ArgumentError("render: --factual and --counterfactual must name cases of --log");
  }
  // Probabilities are only meaningful under the encoder the predictor was trained with.
  if (encoder_path.empty() && !predictor_path.empty()) {
    const auto sibling = fs::path{predictor_path}.parent_path() / "encoder.json";
    if (fs::exists(sibling)) {
      encoder_path = sibling.string();
    }
  }
  cfseq::EncoderSpec encoder;
  if (!encoder_path.empty()) {
    encoder = cfseq::EncoderSpec::from_json(read_file(encoder_path));
  } else {
    std::size_t longest = 0;
    for (const auto& t : log.traces) {
      longest = std::max(longest, t.size());
    }
    encoder = cfseq::EncoderSpec::fit(log, longest);
  }
  const auto a = encoder.encode(*factual);
  const auto b = encoder.encode(*counterfactual);
  const auto distance = cfseq::ssdld(a, b, cfseq::CostKind::Euclidean, encoder.layout());

  cfseq::RenderOptions options;
  if (!predictor_path.empty()) {
    const auto model = cfseq::LogisticOutcomePredictor::from_json(read_file(predictor_path));
    options.factual_probability = model.predict_proba(a);
    options.counterfactual_probability = model.predict_proba(b);
  } else if (!args.external_predictor.empty()) {
    const cfseq::ExternalPredictor model(args.external_predictor, encoder);
    const auto p = model.predict_batch(std::vector{a, b});
    options.factual_probability = p[0];
    options.counterfactual_probability = p[1];
  }
  const auto table = cfseq::render_counterfactual(*factual, *counterfactual, distance.alignment, options);
  const fs::path out{args.out};
  fs::create_directories(out);
  write_file(out / fmt::format("{}_vs_{}.md", factual_id, counterfactual_id), table);
  std::cout << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterfactual sequence generation for outcome-based predictive process monitoring"};
  app.require_subcommand(1);

  CommonArgs args;
  cfseq::SynthesisOptions synthesis;
  std::string factual_id;
  std::string counterfactual_id;
  std::string predictor_path;
  std::string encoder_path;

  auto* synth = app.add_subcommand("synthesize-log", "Write a synthetic planted-rule log and its schema");
  synth->add_option("--cases", synthesis.n_cases, "Number of cases")->capture_default_str();
  synth->add_option("--activities", synthesis.n_activities, "Vocabulary size")->capture_default_str();
  synth->add_option("--seed", args.seed, "Seed");
  synth->add_option("--out", args.out, "Output directory")->required();

  auto* train = app.add_subcommand("train-predictor", "Train the outcome predictor and report metrics");
  add_common(train, args, false);

  auto* markov = app.add_subcommand("fit-markov", "Fit the feasibility model");
  add_common(markov, args, false);

  auto* generate = app.add_subcommand("generate", "Counterfactuals for one factual");
  add_common(generate, args, true);
  generate->add_option("--factual", factual_id, "Case id of a test-split trace (default: first sampled)");

  auto* grid = app.add_subcommand("grid", "Operator grid search");
  add_common(grid, args, true);

  auto* bench = app.add_subcommand("benchmark", "Evolutionary configs against the baselines");
  add_common(bench, args, true);

  auto* render = app.add_subcommand("render", "Side-by-side markdown table of two cases of a log");
  add_common(render, args, false);
  render->add_option("--factual", factual_id, "Factual case id")->required();
  render->add_option("--counterfactual", counterfactual_id, "Counterfactual case id")->required();
  render->add_option("--predictor", predictor_path, "Predictor JSON written by train-predictor");
  render->add_option("--encoder", encoder_path,
                     "Encoder JSON; defaults to encoder.json beside --predictor, else fitted on --log");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      return cmd_synthesize(args, synthesis);
    }
    if (train->parsed()) {
      return cmd_train_predictor(args);
    }
    if (markov->parsed()) {
      return cmd_fit_markov(args);
    }
    if (generate->parsed()) {
      return cmd_generate(args, factual_id);
    }
    if (grid->parsed()) {
      return cmd_grid(args);
    }
    if (bench->parsed()) {
      return cmd_benchmark(args);
    }
    if (render->parsed()) {
      return cmd_render(args, factual_id, counterfactual_id, predictor_path, encoder_path);
    }
  } catch (const cfseq::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
