#pragma once

#include <optional>
#include <string>

#include "cfseq/event_log.hpp"
#include "cfseq/viability.hpp"

namespace cfseq {

struct RenderOptions {
  /// P(outcome = 1 | factual) and P(outcome = 1 | counterfactual), shown in the header when set.
  std::optional<double> factual_probability;
  std::optional<double> counterfactual_probability;
  /// Numeric values closer than this are shown as unchanged.
  double tolerance = 1e-9;
};

/// Markdown table aligning a factual with a counterfactual along an edit
/// alignment. Inserted and deleted events leave a gap row on the other side;
/// attributes whose values differ are shown in bold.
std::string render_counterfactual(const Trace& factual, const Trace& counterfactual,
                                  const EditAlignment& alignment, const RenderOptions& options = {});

}  // namespace cfseq
