#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "cfseq/encoded_trace.hpp"
#include "cfseq/markov.hpp"
#include "cfseq/rng.hpp"
#include "cfseq/viability.hpp"

namespace cfseq {

/// Non-iterative reference generators.
enum class BaselineKind {
  RandomGenerator,       // RGW
  SampleBasedGenerator,  // SBGW
  CaseBasedGenerator,    // CBGW
};

std::string_view to_string(BaselineKind kind) noexcept;
BaselineKind parse_baseline(std::string_view name);

struct ScoredCandidate {
  EncodedTrace trace;
  ViabilityScore score;
};

/// Generates `n` candidates, scores them against the evaluator's factual and
/// returns them sorted by total viability (best first, ties in generation order).
std::vector<ScoredCandidate> generate_baseline(BaselineKind kind, const ViabilityEvaluator& evaluator,
                                               std::size_t n, std::span<const EncodedTrace> log,
                                               const MarkovFeasibilityModel& model,
                                               std::size_t vocab_size, std::size_t max_len, Rng& rng);

}  // namespace cfseq
