#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfseq/encoded_trace.hpp"
#include "cfseq/rng.hpp"

namespace cfseq {

/// First-order Markov chain over activities with a virtual END state, plus
/// per-activity attribute emission distributions.
///
/// Numeric attributes use an equal-width histogram over [0, 1]; categorical
/// attributes use a distribution over the binary codes 0..C (0 = absent).
/// All distributions are additively smoothed with `epsilon`:
///   P(j | i) = (count(i -> j) + eps) / (sum_j' count(i -> j') + eps * (K + 1)).
/// An activity that never occurs as a predecessor and has no smoothing moves
/// to END with probability one; its emissions are uniform.
class MarkovFeasibilityModel {
 public:
  MarkovFeasibilityModel() = default;

  [[nodiscard]] static MarkovFeasibilityModel fit(std::span<const EncodedTrace> train, const FeatureLayout& layout,
                                    std::size_t vocab_size, double epsilon = 1e-6,
                                    std::size_t n_bins = 10);

  /// P(e_0) P(f_0|e_0) prod_{t>=1} P(e_t|e_{t-1}) P(f_t|e_t) over the valid
  /// prefix. The END transition is not part of the product.
  double feasibility(const EncodedTrace& trace) const;

  double initial_prob(int activity) const;
  /// `to` may be end_state().
  double transition_prob(int from, int to) const;
  /// P(f | e): product of the per-attribute emission probabilities.
  double emission_prob(int activity, std::span<const double> row) const;

  /// Ancestral sampling; stops at END or after max_len activities. Always
  /// returns at least one real activity.
  std::vector<int> sample_sequence(std::size_t max_len, Rng& rng) const;

  /// Feature row (length dim) drawn from the emission distributions of `activity`.
  std::vector<double> sample_attributes(int activity, Rng& rng) const;

  int end_state() const noexcept { return static_cast<int>(vocab_size_) + 1; }
  std::size_t vocab_size() const noexcept { return vocab_size_; }
  std::size_t n_bins() const noexcept { return n_bins_; }
  double epsilon() const noexcept { return epsilon_; }
  const FeatureLayout& layout() const noexcept { return layout_; }

  const std::vector<double>& initial() const noexcept { return initial_; }
  /// Row for activity id `from` (1..K); columns are ids 1..K followed by END.
  std::span<const double> transition_row(int from) const;
  /// Emission distribution of attribute `slot` for activity id `activity`.
  std::span<const double> emission(int activity, std::size_t slot) const;

  std::string to_json() const;
  static MarkovFeasibilityModel from_json(std::string_view text);

 private:
  std::size_t outcomes(std::size_t slot) const;
  std::size_t emission_offset(int activity, std::size_t slot) const;
  std::size_t bin_of(double value) const noexcept;

  std::size_t vocab_size_ = 0;
  std::size_t n_bins_ = 10;
  double epsilon_ = 0.0;
  FeatureLayout layout_;
  std::vector<double> initial_;     // K
  std::vector<double> transition_;  // K x (K + 1)
  // Per activity, the concatenated emission distributions of every slot.
  std::vector<double> emissions_;
  std::size_t emission_stride_ = 0;
  std::vector<std::size_t> slot_offsets_;
};

}  // namespace cfseq
