#include "cfseq/viability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "cfseq/errors.hpp"

namespace cfseq {

namespace {

constexpr double kCountTolerance = 1e-9;

bool cells_differ(std::span<const double> x, std::span<const double> y) noexcept {
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (std::abs(x[k] - y[k]) > kCountTolerance) {
      return true;
    }
  }
  return false;
}

double euclidean_pair(std::span<const double> x, std::span<const double> y, double sqrt_dim) noexcept {
  double sq = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double diff = x[k] - y[k];
    sq += diff * diff;
  }
  return std::sqrt(sq) / sqrt_dim;
}

double euclidean_gap(std::span<const double> x, double sqrt_dim) noexcept {
  double sq = 0.0;
  for (const double v : x) {
    sq += v * v;
  }
  return std::sqrt(sq) / sqrt_dim;
}

/// Event costs for one (a, b) pair. Pair costs are only read where the
/// activities agree (matches and transpositions), so only those are computed.
/// Buffers are thread-local and reused across calls.
class CostTable {
 public:
  CostTable(const EncodedTrace& a, const EncodedTrace& b, CostKind kind, const FeatureLayout& layout)
      : n(a.valid_len), m(b.valid_len) {
    auto& buffers = scratch();
    buffers.pair.resize(n * m);
    buffers.del.resize(n);
    buffers.ins.resize(m);
    if (kind == CostKind::Euclidean && layout.dim > 0) {
      const double sqrt_dim = std::sqrt(static_cast<double>(layout.dim));
      for (std::size_t i = 0; i < n; ++i) {
        buffers.del[i] = euclidean_gap(a.row(i), sqrt_dim);
        for (std::size_t j = 0; j < m; ++j) {
          if (a.activity_ids[i] == b.activity_ids[j]) {
            buffers.pair[i * m + j] = euclidean_pair(a.row(i), b.row(j), sqrt_dim);
          }
        }
      }
      for (std::size_t j = 0; j < m; ++j) {
        buffers.ins[j] = euclidean_gap(b.row(j), sqrt_dim);
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        buffers.del[i] = gap_cost(a, i, kind, layout);
        for (std::size_t j = 0; j < m; ++j) {
          if (a.activity_ids[i] == b.activity_ids[j]) {
            buffers.pair[i * m + j] = substitution_cost(a, i, b, j, kind, layout);
          }
        }
      }
      for (std::size_t j = 0; j < m; ++j) {
        buffers.ins[j] = gap_cost(b, j, kind, layout);
      }
    }
    pair_ = buffers.pair.data();
    del = buffers.del.data();
    ins = buffers.ins.data();
  }

  double c(std::size_t i, std::size_t j) const noexcept { return pair_[i * m + j]; }

  std::size_t n = 0;
  std::size_t m = 0;
  const double* del = nullptr;
  const double* ins = nullptr;

 private:
  struct Buffers {
    std::vector<double> pair;
    std::vector<double> del;
    std::vector<double> ins;
  };
  static Buffers& scratch() {
    thread_local Buffers buffers;
    return buffers;
  }

  const double* pair_ = nullptr;
};

/// Fills the (n+1) x (m+1) DP table into `d`. Indices in the recurrence are
/// 1-based, so a_i is a[i - 1].
void fill_table(const EncodedTrace& a, const EncodedTrace& b, const CostTable& costs, std::vector<double>& d) {
  const std::size_t n = costs.n;
  const std::size_t m = costs.m;
  const std::size_t w = m + 1;
  d.resize((n + 1) * w);
  const int* aa = a.activity_ids.data();
  const int* bb = b.activity_ids.data();

  double* row = d.data();
  row[0] = 0.0;
  for (std::size_t j = 1; j <= m; ++j) {
    row[j] = row[j - 1] + costs.ins[j - 1];
  }
  for (std::size_t i = 1; i <= n; ++i) {
    const double* up = row;
    row += w;
    const double del = costs.del[i - 1];
    const int ai = aa[i - 1];
    row[0] = up[0] + del;
    for (std::size_t j = 1; j <= m; ++j) {
      double best = std::min(up[j] + del, row[j - 1] + costs.ins[j - 1]);
      const int bj = bb[j - 1];
      const double diag = ai == bj ? up[j - 1] + costs.c(i - 1, j - 1) : up[j - 1] + del + costs.ins[j - 1];
      best = std::min(best, diag);
      if (i > 1 && j > 1 && ai == bb[j - 2] && aa[i - 2] == bj) {
        best = std::min(best, (up - w)[j - 2] + costs.c(i - 1, j - 2) + costs.c(i - 2, j - 1));
      }
      row[j] = best;
    }
  }
}

std::vector<double>& dp_scratch() {
  thread_local std::vector<double> d;
  return d;
}

void check_prefix(const EncodedTrace& t, const FeatureLayout& layout) {
  if (t.valid_len > t.max_len() || t.dim != layout.dim) {
    throw ConfigurationError("ssdld: trace shape does not match the feature layout");
  }
}

}  // namespace

ViabilityScore ViabilityScore::from_components(double similarity, double sparsity,
                                               double feasibility, double delta) noexcept {
  return ViabilityScore{similarity, sparsity, feasibility, delta,
                        similarity + sparsity + feasibility + delta};
}

std::string_view to_string(EditOpKind kind) noexcept {
  switch (kind) {
    case EditOpKind::Match:
      return "match";
    case EditOpKind::Substitute:
      return "substitute";
    case EditOpKind::Insert:
      return "insert";
    case EditOpKind::Delete:
      return "delete";
    case EditOpKind::Transpose:
      return "transpose";
  }
  return "?";
}

double EditAlignment::total_cost() const noexcept {
  double total = 0.0;
  for (const auto& op : ops) {
    total += op.cost;
  }
  return total;
}

double substitution_cost(const EncodedTrace& a, std::size_t i, const EncodedTrace& b, std::size_t j,
                         CostKind kind, const FeatureLayout& layout) noexcept {
  const auto x = a.row(i);
  const auto y = b.row(j);
  if (kind == CostKind::Euclidean) {
    if (layout.dim == 0) {
      return 0.0;
    }
    return euclidean_pair(x, y, std::sqrt(static_cast<double>(layout.dim)));
  }
  if (layout.slots.empty()) {
    return 0.0;
  }
  std::size_t differing = 0;
  for (const auto& slot : layout.slots) {
    differing += static_cast<std::size_t>(
        cells_differ(x.subspan(slot.offset, slot.width), y.subspan(slot.offset, slot.width)));
  }
  return static_cast<double>(differing) / static_cast<double>(layout.slots.size());
}

double gap_cost(const EncodedTrace& a, std::size_t i, CostKind kind, const FeatureLayout& layout) noexcept {
  if (kind == CostKind::Count || layout.dim == 0) {
    return 1.0;
  }
  return euclidean_gap(a.row(i), std::sqrt(static_cast<double>(layout.dim)));
}

double ssdld_distance(const EncodedTrace& a, const EncodedTrace& b, CostKind kind,
                      const FeatureLayout& layout) {
  check_prefix(a, layout);
  check_prefix(b, layout);
  const CostTable costs{a, b, kind, layout};
  auto& d = dp_scratch();
  fill_table(a, b, costs, d);
  return d.back();
}

EditDistance ssdld(const EncodedTrace& a, const EncodedTrace& b, CostKind kind,
                   const FeatureLayout& layout) {
  check_prefix(a, layout);
  check_prefix(b, layout);
  const CostTable costs{a, b, kind, layout};
  std::vector<double> d;
  fill_table(a, b, costs, d);
  const std::size_t w = costs.m + 1;

  EditDistance result;
  result.distance = d.back();
  std::size_t i = costs.n;
  std::size_t j = costs.m;
  auto& ops = result.alignment.ops;
  while (i > 0 || j > 0) {
    const double here = d[i * w + j];
    if (i > 0 && j > 0) {
      const bool same = a.activity_ids[i - 1] == b.activity_ids[j - 1];
      const double step = same ? costs.c(i - 1, j - 1) : costs.del[i - 1] + costs.ins[j - 1];
      const double diag = same ? d[(i - 1) * w + j - 1] + costs.c(i - 1, j - 1)
                               : d[(i - 1) * w + j - 1] + costs.del[i - 1] + costs.ins[j - 1];
      if (diag == here) {
        ops.push_back({same ? EditOpKind::Match : EditOpKind::Substitute,
                       static_cast<std::ptrdiff_t>(i - 1), static_cast<std::ptrdiff_t>(j - 1), step});
        --i;
        --j;
        continue;
      }
    }
    if (i > 1 && j > 1 && a.activity_ids[i - 1] == b.activity_ids[j - 2] &&
        a.activity_ids[i - 2] == b.activity_ids[j - 1]) {
      const double step = costs.c(i - 1, j - 2) + costs.c(i - 2, j - 1);
      if (d[(i - 2) * w + j - 2] + costs.c(i - 1, j - 2) + costs.c(i - 2, j - 1) == here) {
        ops.push_back({EditOpKind::Transpose, static_cast<std::ptrdiff_t>(i - 2),
                       static_cast<std::ptrdiff_t>(j - 2), step});
        i -= 2;
        j -= 2;
        continue;
      }
    }
    if (i > 0 && d[(i - 1) * w + j] + costs.del[i - 1] == here) {
      ops.push_back({EditOpKind::Delete, static_cast<std::ptrdiff_t>(i - 1), -1, costs.del[i - 1]});
      --i;
      continue;
    }
    // Remaining option must be an insert.
    ops.push_back({EditOpKind::Insert, -1, static_cast<std::ptrdiff_t>(j - 1), costs.ins[j - 1]});
    --j;
  }
  std::reverse(ops.begin(), ops.end());
  return result;
}

namespace {

double normalized_closeness(const EncodedTrace& factual, const EncodedTrace& candidate,
                            CostKind kind, const FeatureLayout& layout) {
  const auto bound = static_cast<double>(factual.valid_len + candidate.valid_len);
  if (bound == 0.0) {
    return 1.0;
  }
  const double distance = ssdld_distance(factual, candidate, kind, layout);
  return std::clamp(1.0 - distance / bound, 0.0, 1.0);
}

}  // namespace

double similarity_score(const EncodedTrace& factual, const EncodedTrace& candidate,
                        const FeatureLayout& layout) {
  return normalized_closeness(factual, candidate, CostKind::Euclidean, layout);
}

double sparsity_score(const EncodedTrace& factual, const EncodedTrace& candidate,
                      const FeatureLayout& layout) {
  return normalized_closeness(factual, candidate, CostKind::Count, layout);
}

double delta_score(double p_factual, double p_counterfactual) {
  if (!(p_factual >= 0.0 && p_factual <= 1.0) || !(p_counterfactual >= 0.0 && p_counterfactual <= 1.0)) {
    throw DomainError(fmt::format("delta_score: probabilities ({}, {}) outside [0, 1]", p_factual,
                                  p_counterfactual));
  }
  // Whichever class the factual is predicted as, the signed change in that
  // class's probability reduces to the same difference.
  return p_factual - p_counterfactual;
}

ViabilityEvaluator::ViabilityEvaluator(EncodedTrace factual, const OutcomePredictor& predictor,
                                       const MarkovFeasibilityModel& feasibility_model)
    : factual_(std::move(factual)), predictor_(&predictor), model_(&feasibility_model) {
  check_shape(factual_);
  const double p_positive = predictor_->predict_proba(factual_);
  factual_class_ = p_positive > 0.5 ? 1 : 0;
  factual_probability_ = class_probability(p_positive);
}

void ViabilityEvaluator::check_shape(const EncodedTrace& trace) const {
  if (trace.dim != model_->layout().dim) {
    throw ConfigurationError(fmt::format(
        "trace has feature dimension {}, feasibility model expects {}", trace.dim, model_->layout().dim));
  }
  if (trace.valid_len < 1 || trace.valid_len > trace.max_len()) {
    throw ArgumentError("viability: trace must hold between 1 and max_len events");
  }
}

double ViabilityEvaluator::class_probability(double p_positive) const noexcept {
  return factual_class_ == 1 ? p_positive : 1.0 - p_positive;
}

ViabilityScore ViabilityEvaluator::score_with_probability(const EncodedTrace& candidate,
                                                         double p_positive) const {
  check_shape(candidate);
  const auto& layout = model_->layout();
  return ViabilityScore::from_components(similarity_score(factual_, candidate, layout),
                                         sparsity_score(factual_, candidate, layout),
                                         model_->feasibility(candidate),
                                         delta_score(factual_probability_, class_probability(p_positive)));
}

ViabilityScore ViabilityEvaluator::score(const EncodedTrace& candidate) const {
  check_shape(candidate);
  return score_with_probability(candidate, predictor_->predict_proba(candidate));
}

std::vector<ViabilityScore> ViabilityEvaluator::score_batch(std::span<const EncodedTrace> candidates) const {
  for (const auto& c : candidates) {
    check_shape(c);
  }
  const auto probabilities = predictor_->predict_batch(candidates);
  std::vector<ViabilityScore> out;
  out.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out.push_back(score_with_probability(candidates[i], probabilities[i]));
  }
  return out;
}

ViabilityScore viability(const EncodedTrace& factual, const EncodedTrace& candidate,
                         const OutcomePredictor& predictor,
                         const MarkovFeasibilityModel& feasibility_model) {
  return ViabilityEvaluator{factual, predictor, feasibility_model}.score(candidate);
}

}  // namespace cfseq
