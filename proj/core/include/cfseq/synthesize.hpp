#pragma once

#include <cstddef>
#include <cstdint>

#include "cfseq/event_log.hpp"

namespace cfseq {

/// Ground-truth outcome condition for synthetic logs: outcome = 1 iff the
/// critical activity occurs at least `min_occurrences` times.
struct PlantedRule {
  /// 0-based index into the generated vocabulary; negative selects the last activity.
  int critical_activity = -1;
  std::size_t min_occurrences = 1;
};

struct SynthesisOptions {
  std::size_t n_cases = 200;
  std::size_t n_activities = 5;
  PlantedRule rule{};
  std::uint64_t seed = 0;
  /// Traces are cut at this length even if the chain has not reached END.
  std::size_t max_trace_len = 25;
};

/// Name of the generated numeric attribute (declared range [0, 100]).
inline constexpr const char* kSyntheticNumeric = "amount";
/// Name of the generated categorical attribute.
inline constexpr const char* kSyntheticCategorical = "channel";

/// Samples a log from a hidden first-order Markov chain. Each activity emits a
/// clipped Gaussian `amount` and a `channel` category. Resamples (up to 10
/// attempts) until both outcome classes are present.
EventLog synthesize_log(const SynthesisOptions& options);

/// Evaluates the planted rule on a trace of the synthesized vocabulary.
int planted_outcome(const Trace& trace, const EventLog& log, const PlantedRule& rule);

}  // namespace cfseq
