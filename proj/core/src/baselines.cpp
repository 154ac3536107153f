#include "cfseq/baselines.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "cfseq/errors.hpp"
#include "cfseq/evolution.hpp"

namespace cfseq {

std::string_view to_string(BaselineKind kind) noexcept {
  switch (kind) {
    case BaselineKind::RandomGenerator:
      return "RGW";
    case BaselineKind::SampleBasedGenerator:
      return "SBGW";
    case BaselineKind::CaseBasedGenerator:
      return "CBGW";
  }
  return "?";
}

BaselineKind parse_baseline(std::string_view name) {
  if (name == "RGW") {
    return BaselineKind::RandomGenerator;
  }
  if (name == "SBGW") {
    return BaselineKind::SampleBasedGenerator;
  }
  if (name == "CBGW") {
    return BaselineKind::CaseBasedGenerator;
  }
  throw ParseError(fmt::format("unknown baseline '{}'", name));
}

std::vector<ScoredCandidate> generate_baseline(BaselineKind kind, const ViabilityEvaluator& evaluator,
                                               std::size_t n, std::span<const EncodedTrace> log,
                                               const MarkovFeasibilityModel& model,
                                               std::size_t vocab_size, std::size_t max_len, Rng& rng) {
  if (n == 0) {
    throw ArgumentError("generate_baseline: n must be positive");
  }
  const std::size_t dim = evaluator.factual().dim;
  std::vector<EncodedTrace> traces;
  traces.reserve(n);
  switch (kind) {
    case BaselineKind::RandomGenerator:
      for (std::size_t i = 0; i < n; ++i) {
        traces.push_back(random_genome(vocab_size, max_len, dim, rng));
      }
      break;
    case BaselineKind::SampleBasedGenerator:
      for (std::size_t i = 0; i < n; ++i) {
        traces.push_back(sampled_genome(model, max_len, rng));
      }
      break;
    case BaselineKind::CaseBasedGenerator:
      if (log.empty()) {
        throw ArgumentError("case-based baseline needs a non-empty log");
      }
      for (std::size_t i = 0; i < n; ++i) {
        const auto pick =
            static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(log.size()) - 1));
        traces.push_back(log[pick]);
      }
      break;
  }
  const auto scores = evaluator.score_batch(traces);
  std::vector<ScoredCandidate> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(ScoredCandidate{std::move(traces[i]), scores[i]});
  }
  std::stable_sort(out.begin(), out.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    return a.score.total > b.score.total;
  });
  return out;
}

}  // namespace cfseq
