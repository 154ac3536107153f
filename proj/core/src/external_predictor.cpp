#include "cfseq/external_predictor.hpp"

#include <atomic>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <unordered_map>

#include <unistd.h>

#include <fmt/format.h>

#include "cfseq/csv.hpp"
#include "cfseq/errors.hpp"

namespace cfseq {

namespace {

std::atomic<std::uint64_t> batch_counter{0};

std::string shell_quote(const std::string& text) {
  std::string out{"'"};
  for (const char c : text) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  out.push_back('\'');
  return out;
}

}  // namespace

ExternalPredictor::ExternalPredictor(std::string command, EncoderSpec encoder,
                                     std::filesystem::path work_dir)
    : command_(std::move(command)), encoder_(std::move(encoder)), work_dir_(std::move(work_dir)) {
  if (command_.empty()) {
    throw ArgumentError("ExternalPredictor: empty command");
  }
}

double ExternalPredictor::predict_proba(const EncodedTrace& trace) const {
  return predict_batch(std::span<const EncodedTrace>{&trace, 1}).front();
}

std::vector<double> ExternalPredictor::predict_batch(std::span<const EncodedTrace> traces) const {
  if (traces.empty()) {
    return {};
  }
  const auto tag = fmt::format("cfseq_{}_{}", ::getpid(), batch_counter.fetch_add(1));
  const auto input = work_dir_ / (tag + "_in.csv");
  const auto output = work_dir_ / (tag + "_out.csv");

  EventLog batch;
  batch.activity_vocabulary = encoder_.activities();
  for (const auto& slot : encoder_.layout().slots) {
    batch.schemas.push_back(AttributeSchema{slot.name, slot.kind, slot.categories, slot.min, slot.max});
  }
  for (std::size_t i = 0; i < traces.size(); ++i) {
    Trace trace = encoder_.decode(traces[i]);
    trace.case_id = fmt::format("q{:06}", i);
    batch.traces.push_back(std::move(trace));
  }
  save_csv(batch, input);

  const auto command = fmt::format("{} {} {}", command_, shell_quote(input.string()),
                                   shell_quote(output.string()));
  const int status = std::system(command.c_str());
  std::filesystem::remove(input);
  if (status != 0) {
    std::filesystem::remove(output);
    throw Error(fmt::format("external predictor '{}' exited with status {}", command_, status));
  }

  std::ifstream in{output};
  if (!in) {
    throw Error(fmt::format("external predictor did not write '{}'", output.string()));
  }
  const auto rows = csv::read_rows(in);
  in.close();
  std::filesystem::remove(output);
  if (rows.empty() || rows.front().size() < 2 || rows.front()[0] != "case_id" ||
      rows.front()[1] != "proba") {
    throw ParseError("external predictor output must start with header 'case_id,proba'");
  }
  std::unordered_map<std::string, double> scores;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& cell = rows[r].at(1);
    double p = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), p);
    if (ec != std::errc{} || ptr != cell.data() + cell.size() || !(p >= 0.0 && p <= 1.0)) {
      throw ParseError(fmt::format("external predictor returned invalid probability '{}'", cell));
    }
    scores[rows[r][0]] = p;
  }
  std::vector<double> out;
  out.reserve(traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const auto it = scores.find(fmt::format("q{:06}", i));
    if (it == scores.end()) {
      throw ParseError(fmt::format("external predictor omitted case q{:06}", i));
    }
    out.push_back(it->second);
  }
  return out;
}

}  // namespace cfseq
