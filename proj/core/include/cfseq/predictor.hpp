#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfseq/encoded_trace.hpp"

namespace cfseq {

/// Anything that maps an encoded trace to P(outcome = 1 | trace).
class OutcomePredictor {
 public:
  virtual ~OutcomePredictor() = default;

  /// Must return a value in [0, 1] and be deterministic for a fixed state.
  virtual double predict_proba(const EncodedTrace& trace) const = 0;

  /// Batch scoring. The default loops over predict_proba; predictors with a
  /// per-call overhead (external processes) override it.
  virtual std::vector<double> predict_batch(std::span<const EncodedTrace> traces) const;
};

/// Returns a fixed probability. Useful as a stub.
class ConstantPredictor final : public OutcomePredictor {
 public:
  explicit ConstantPredictor(double probability);
  double predict_proba(const EncodedTrace&) const override { return probability_; }

 private:
  double probability_;
};

/// Fixed-width summary of a trace:
/// [valid_len / max_len | activity histogram (K) | bigram indicators (K*K) | attribute means (D)].
struct FeatureExtractor {
  std::size_t vocab_size = 0;
  std::size_t feature_dim = 0;

  std::size_t width() const noexcept { return 1 + vocab_size + vocab_size * vocab_size + feature_dim; }
  std::vector<double> operator()(const EncodedTrace& trace) const;
};

std::vector<double> extract_features(const EncodedTrace& trace, std::size_t vocab_size);

struct TrainingOptions {
  std::size_t epochs = 2000;
  double learning_rate = 1.0;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
};

/// Mean binary cross-entropy plus (l2 / 2) * ||w||^2 (bias not penalized).
struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> weight_gradient;
  double bias_gradient = 0.0;
};

class LogisticOutcomePredictor final : public OutcomePredictor {
 public:
  LogisticOutcomePredictor() = default;
  LogisticOutcomePredictor(FeatureExtractor extractor, std::vector<double> weights, double bias);

  /// Full-batch gradient descent. The step is halved (and the step undone)
  /// whenever the loss would increase, so the recorded loss never rises.
  static LogisticOutcomePredictor train(std::span<const EncodedTrace> train, std::size_t vocab_size,
                                        const TrainingOptions& options);

  double predict_proba(const EncodedTrace& trace) const override;

  /// Loss and analytic gradient over pre-extracted features.
  static LossAndGradient loss_and_gradient(std::span<const std::vector<double>> features,
                                           std::span<const int> labels,
                                           std::span<const double> weights, double bias, double l2);

  const FeatureExtractor& extractor() const noexcept { return extractor_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double bias() const noexcept { return bias_; }
  /// Loss after each epoch of the last train() call.
  const std::vector<double>& loss_history() const noexcept { return loss_history_; }

  std::string to_json() const;
  static LogisticOutcomePredictor from_json(std::string_view text);

 private:
  FeatureExtractor extractor_;
  std::vector<double> weights_;
  double bias_ = 0.0;
  std::vector<double> loss_history_;
};

struct PredictionMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  std::size_t true_negatives = 0;
  std::size_t support_positive = 0;
  std::size_t support_negative = 0;
  /// Set when a ratio had a zero denominator and was reported as 0.
  bool zero_division = false;
};

/// Precision / recall / F1 for class 1 at `threshold`.
PredictionMetrics evaluate(const OutcomePredictor& predictor, std::span<const EncodedTrace> test,
                           double threshold = 0.5);

/// Same metrics from raw probabilities and labels.
PredictionMetrics metrics_from_scores(std::span<const double> probabilities,
                                      std::span<const int> labels, double threshold = 0.5);

}  // namespace cfseq
