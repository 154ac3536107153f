#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "cfseq/encoded_trace.hpp"
#include "cfseq/markov.hpp"
#include "cfseq/predictor.hpp"

namespace cfseq {

/// Four viability components and their sum. The sum lies in [-1, 4]; it can
/// only be negative when the candidate moves the prediction the wrong way.
struct ViabilityScore {
  double similarity = 0.0;
  double sparsity = 0.0;
  double feasibility = 0.0;
  double delta = 0.0;
  double total = 0.0;

  static ViabilityScore from_components(double similarity, double sparsity, double feasibility,
                                        double delta) noexcept;
  friend bool operator==(const ViabilityScore&, const ViabilityScore&) = default;
};

/// Event cost used by the weighted Damerau-Levenshtein distance.
///  - Euclidean: ||v_x - v_y|| / sqrt(D), with the zero vector for a gap.
///  - Count: fraction of attributes whose encoded sub-vectors differ by more
///    than 1e-9; any event against a gap costs 1.
enum class CostKind { Euclidean, Count };

enum class EditOpKind { Match, Substitute, Insert, Delete, Transpose };

std::string_view to_string(EditOpKind kind) noexcept;

/// One step of an alignment. Indices are 0-based positions in the unpadded
/// sequences; -1 marks "no position" (the `a` side of an insert, the `b` side
/// of a delete). A transpose consumes a[a_index], a[a_index + 1] and
/// b[b_index], b[b_index + 1] with a[a_index] matching b[b_index + 1].
struct EditOp {
  EditOpKind kind = EditOpKind::Match;
  std::ptrdiff_t a_index = -1;
  std::ptrdiff_t b_index = -1;
  double cost = 0.0;

  friend bool operator==(const EditOp&, const EditOp&) = default;
};

struct EditAlignment {
  std::vector<EditOp> ops;

  double total_cost() const noexcept;
};

struct EditDistance {
  double distance = 0.0;
  EditAlignment alignment;
};

/// Per-event costs. `i`/`j` index real events of `a`/`b`.
double substitution_cost(const EncodedTrace& a, std::size_t i, const EncodedTrace& b, std::size_t j,
                         CostKind kind, const FeatureLayout& layout) noexcept;
double gap_cost(const EncodedTrace& a, std::size_t i, CostKind kind, const FeatureLayout& layout) noexcept;

/// Weighted Damerau-Levenshtein distance on the unpadded prefixes with the
/// recurrence
///   d(i,j) = min{ d(i-1,j) + c(a_i, 0),
///                 d(i,j-1) + c(0, b_j),
///                 d(i-1,j-1) + c(a_i, b_j)              if act(a_i) == act(b_j),
///                 d(i-1,j-1) + c(a_i, 0) + c(0, b_j)    if act(a_i) != act(b_j),
///                 d(i-2,j-2) + c(a_i, b_{j-1}) + c(a_{i-1}, b_j)
///                                   if act(a_i) == act(b_{j-1}) and act(a_{i-1}) == act(b_j) }
/// with d(0,0) = 0. The backtrace prefers diagonal, then transpose, then
/// delete, then insert.
EditDistance ssdld(const EncodedTrace& a, const EncodedTrace& b, CostKind kind,
                   const FeatureLayout& layout);

/// Same distance without building the alignment.
double ssdld_distance(const EncodedTrace& a, const EncodedTrace& b, CostKind kind,
                      const FeatureLayout& layout);

/// 1 - d_euclidean / (|factual| + |candidate|).
double similarity_score(const EncodedTrace& factual, const EncodedTrace& candidate,
                        const FeatureLayout& layout);

/// 1 - d_count / (|factual| + |candidate|).
double sparsity_score(const EncodedTrace& factual, const EncodedTrace& candidate,
                      const FeatureLayout& layout);

/// Signed change in the probability of the factual's predicted class:
/// positive when the counterfactual lowers it. Inputs must lie in [0, 1].
double delta_score(double p_factual, double p_counterfactual);

/// Scores candidates against one factual. Holds references to the predictor
/// and feasibility model, which must outlive it.
class ViabilityEvaluator {
 public:
  ViabilityEvaluator(EncodedTrace factual, const OutcomePredictor& predictor,
                     const MarkovFeasibilityModel& feasibility_model);

  ViabilityScore score(const EncodedTrace& candidate) const;
  std::vector<ViabilityScore> score_batch(std::span<const EncodedTrace> candidates) const;

  /// Components given an already computed P(outcome = 1 | candidate).
  ViabilityScore score_with_probability(const EncodedTrace& candidate, double p_positive) const;

  const EncodedTrace& factual() const noexcept { return factual_; }
  /// Predicted class of the factual (1 iff P(1 | factual) > 0.5).
  int factual_class() const noexcept { return factual_class_; }
  /// P(factual class | factual).
  double factual_probability() const noexcept { return factual_probability_; }
  /// P(factual class | s) for a given P(1 | s).
  double class_probability(double p_positive) const noexcept;

  const OutcomePredictor& predictor() const noexcept { return *predictor_; }
  const MarkovFeasibilityModel& feasibility_model() const noexcept { return *model_; }

 private:
  void check_shape(const EncodedTrace& trace) const;

  EncodedTrace factual_;
  const OutcomePredictor* predictor_;
  const MarkovFeasibilityModel* model_;
  int factual_class_ = 0;
  double factual_probability_ = 0.0;
};

ViabilityScore viability(const EncodedTrace& factual, const EncodedTrace& candidate,
                         const OutcomePredictor& predictor,
                         const MarkovFeasibilityModel& feasibility_model);

}  // namespace cfseq
