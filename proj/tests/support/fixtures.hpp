#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cfseq/encoded_trace.hpp"
#include "cfseq/harness.hpp"

namespace cfseq::test {

/// `n` numeric attributes x0.. with range [0, 1], one column each.
inline FeatureLayout numeric_layout(std::size_t n = 1) {
  FeatureLayout layout;
  for (std::size_t i = 0; i < n; ++i) {
    AttributeSlot slot;
    slot.name = "x" + std::to_string(i);
    slot.kind = AttributeKind::Numeric;
    slot.offset = i;
    slot.width = 1;
    slot.min = 0.0;
    slot.max = 1.0;
    layout.slots.push_back(slot);
  }
  layout.dim = n;
  return layout;
}

/// One numeric column followed by a 3-category attribute (code width 2).
inline FeatureLayout mixed_layout() {
  auto layout = numeric_layout(1);
  AttributeSlot slot;
  slot.name = "c";
  slot.kind = AttributeKind::Categorical;
  slot.offset = 1;
  slot.width = 2;
  slot.categories = {"p", "q", "r"};
  layout.slots.push_back(slot);
  layout.dim = 3;
  return layout;
}

inline EncodedTrace make_trace(const std::vector<int>& activities, const std::vector<std::vector<double>>& rows,
                               std::size_t max_len, std::size_t dim) {
  EncodedTrace trace{max_len, dim};
  trace.valid_len = activities.size();
  for (std::size_t t = 0; t < activities.size(); ++t) {
    trace.activity_ids[t] = activities[t];
    for (std::size_t d = 0; d < dim && t < rows.size(); ++d) {
      trace.row(t)[d] = rows[t][d];
    }
  }
  return trace;
}

/// Single numeric attribute per event.
inline EncodedTrace make_trace1(const std::vector<int>& activities, const std::vector<double>& x,
                                std::size_t max_len) {
  std::vector<std::vector<double>> rows;
  for (const double v : x) {
    rows.push_back({v});
  }
  return make_trace(activities, rows, max_len, 1);
}

inline ExperimentSpec synthetic_spec(std::uint64_t seed = 11) {
  ExperimentSpec spec;
  spec.dataset.synthetic = true;
  spec.dataset.synthesis.n_cases = 200;
  spec.dataset.synthesis.n_activities = 5;
  spec.dataset.synthesis.seed = seed;
  spec.seed = seed;
  spec.threads = 1;
  return spec;
}

/// Synthetic workspace shared across tests of one binary.
inline const Workspace& synthetic_workspace() {
  static const Workspace ws = prepare_workspace(synthetic_spec());
  return ws;
}

}  // namespace cfseq::test
