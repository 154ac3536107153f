#include "cfseq/synthesize.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "cfseq/errors.hpp"
#include "cfseq/rng.hpp"

namespace cfseq {

namespace {

constexpr double kEndFromRegular = 0.15;
constexpr double kCriticalFromRegular = 0.13;
constexpr double kEndFromCritical = 0.35;
constexpr double kAmountLow = 0.0;
constexpr double kAmountHigh = 100.0;
constexpr double kAmountSd = 8.0;
constexpr std::array<const char*, 3> kChannels{"email", "phone", "web"};
constexpr int kMaxAttempts = 10;

struct HiddenChain {
  std::vector<double> initial;
  std::vector<std::vector<double>> transition;  // K rows, K + 1 columns (last = END)
  std::vector<double> amount_mean;
  std::vector<std::vector<double>> channel_weights;
};

HiddenChain make_chain(std::size_t k, std::size_t critical, Rng& rng) {
  HiddenChain chain;
  chain.initial.assign(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    chain.initial[i] = i == critical ? 0.0 : 0.5 + uniform01(rng);
  }
  chain.transition.assign(k, std::vector<double>(k + 1, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    auto& row = chain.transition[i];
    const bool from_critical = i == critical;
    const double end = from_critical ? kEndFromCritical : kEndFromRegular;
    const double to_critical = from_critical ? 0.0 : kCriticalFromRegular;
    double weight_sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j != critical) {
        row[j] = 0.2 + uniform01(rng);
        weight_sum += row[j];
      }
    }
    const double rest = 1.0 - end - to_critical;
    for (std::size_t j = 0; j < k; ++j) {
      if (j != critical) {
        row[j] *= rest / weight_sum;
      }
    }
    row[critical] = to_critical;
    row[k] = end;
  }
  for (std::size_t i = 0; i < k; ++i) {
    chain.amount_mean.push_back(15.0 + 70.0 * uniform01(rng));
    std::vector<double> weights;
    for (std::size_t c = 0; c < kChannels.size(); ++c) {
      weights.push_back(0.1 + uniform01(rng));
    }
    chain.channel_weights.push_back(std::move(weights));
  }
  return chain;
}

}  // namespace

int planted_outcome(const Trace& trace, const EventLog& log, const PlantedRule& rule) {
  const auto k = static_cast<int>(log.activity_vocabulary.size());
  const int index = rule.critical_activity < 0 ? k - 1 : rule.critical_activity;
  const auto& critical = log.activity_vocabulary.at(static_cast<std::size_t>(index));
  const auto hits = static_cast<std::size_t>(
      std::count_if(trace.events.begin(), trace.events.end(),
                    [&critical](const Event& e) { return e.activity == critical; }));
  return hits >= std::max<std::size_t>(rule.min_occurrences, 1) ? 1 : 0;
}

EventLog synthesize_log(const SynthesisOptions& options) {
  if (options.n_activities < 3) {
    throw ArgumentError("synthesize_log: need at least 3 activities");
  }
  if (options.n_cases < 10) {
    throw ArgumentError("synthesize_log: need at least 10 cases");
  }
  const std::size_t k = options.n_activities;
  const std::size_t critical = options.rule.critical_activity < 0
                                   ? k - 1
                                   : static_cast<std::size_t>(options.rule.critical_activity);
  if (critical >= k) {
    throw ArgumentError("synthesize_log: critical activity outside the vocabulary");
  }

  EventLog log;
  for (std::size_t i = 0; i < k; ++i) {
    log.activity_vocabulary.push_back(fmt::format("A{:02}", i + 1));
  }
  log.schemas.push_back(AttributeSchema{kSyntheticNumeric, AttributeKind::Numeric, {}, 0.0, 0.0});
  log.schemas.push_back(AttributeSchema{kSyntheticCategorical,
                                        AttributeKind::Categorical,
                                        {kChannels.begin(), kChannels.end()},
                                        0.0,
                                        0.0});

  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng = derive_rng(options.seed, {0x51A7ULL, static_cast<std::uint64_t>(attempt)});
    const HiddenChain chain = make_chain(k, critical, rng);
    std::normal_distribution<double> noise{0.0, kAmountSd};

    log.traces.clear();
    std::array<std::size_t, 2> class_counts{0, 0};
    for (std::size_t c = 0; c < options.n_cases; ++c) {
      Trace trace;
      trace.case_id = fmt::format("case_{:05}", c + 1);
      std::size_t state = sample_index(chain.initial, rng);
      for (std::size_t t = 0; t < options.max_trace_len; ++t) {
        Event event;
        event.activity = log.activity_vocabulary[state];
        event.timestamp = static_cast<std::int64_t>(c * 1000 + t);
        const double amount =
            std::clamp(chain.amount_mean[state] + noise(rng), kAmountLow, kAmountHigh);
        // Round to cents so the CSV form is short and exact.
        event.attributes.emplace(kSyntheticNumeric, std::round(amount * 100.0) / 100.0);
        event.attributes.emplace(kSyntheticCategorical,
                                 std::string{kChannels[sample_index(chain.channel_weights[state], rng)]});
        trace.events.push_back(std::move(event));
        const std::size_t next = sample_index(chain.transition[state], rng);
        if (next == k) {
          break;
        }
        state = next;
      }
      trace.outcome = planted_outcome(trace, log, options.rule);
      ++class_counts[static_cast<std::size_t>(trace.outcome)];
      log.traces.push_back(std::move(trace));
    }
    if (class_counts[0] > 0 && class_counts[1] > 0) {
      return log;
    }
  }
  throw SynthesisError(
      fmt::format("planted rule produced a single-class log after {} attempts", kMaxAttempts));
}

}  // namespace cfseq
