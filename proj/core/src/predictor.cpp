#include "cfseq/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

#include "cfseq/errors.hpp"
#include "cfseq/rng.hpp"

namespace cfseq {

namespace {

constexpr double kProbabilityFloor = 1e-15;

double sigmoid(double z) noexcept {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double bounded(double p) noexcept { return std::clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor); }

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += a[i] * b[i];
  }
  return s;
}

}  // namespace

std::vector<double> OutcomePredictor::predict_batch(std::span<const EncodedTrace> traces) const {
  std::vector<double> out;
  out.reserve(traces.size());
  for (const auto& trace : traces) {
    out.push_back(predict_proba(trace));
  }
  return out;
}

ConstantPredictor::ConstantPredictor(double probability) : probability_(probability) {
  if (!(probability >= 0.0 && probability <= 1.0)) {
    throw DomainError("ConstantPredictor: probability outside [0, 1]");
  }
}

std::vector<double> FeatureExtractor::operator()(const EncodedTrace& trace) const {
  const std::size_t k = vocab_size;
  std::vector<double> phi(width(), 0.0);
  const std::size_t n = trace.valid_len;
  if (n == 0 || trace.max_len() == 0) {
    return phi;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  phi[0] = static_cast<double>(n) / static_cast<double>(trace.max_len());

  const std::size_t hist = 1;
  const std::size_t bigram = hist + k;
  const std::size_t means = bigram + k * k;
  for (std::size_t t = 0; t < n; ++t) {
    const int id = trace.activity_ids[t];
    if (id >= 1 && static_cast<std::size_t>(id) <= k) {
      phi[hist + static_cast<std::size_t>(id - 1)] += inv_n;
      if (t + 1 < n) {
        const int next = trace.activity_ids[t + 1];
        if (next >= 1 && static_cast<std::size_t>(next) <= k) {
          phi[bigram + static_cast<std::size_t>(id - 1) * k + static_cast<std::size_t>(next - 1)] = 1.0;
        }
      }
    }
    const auto row = trace.row(t);
    for (std::size_t d = 0; d < feature_dim && d < row.size(); ++d) {
      phi[means + d] += row[d] * inv_n;
    }
  }
  return phi;
}

std::vector<double> extract_features(const EncodedTrace& trace, std::size_t vocab_size) {
  return FeatureExtractor{vocab_size, trace.dim}(trace);
}

LogisticOutcomePredictor::LogisticOutcomePredictor(FeatureExtractor extractor,
                                                   std::vector<double> weights, double bias)
    : extractor_(extractor), weights_(std::move(weights)), bias_(bias) {
  if (weights_.size() != extractor_.width()) {
    throw ConfigurationError(fmt::format("logistic predictor expects {} weights, got {}",
                                         extractor_.width(), weights_.size()));
  }
}

LossAndGradient LogisticOutcomePredictor::loss_and_gradient(
    std::span<const std::vector<double>> features, std::span<const int> labels,
    std::span<const double> weights, double bias, double l2) {
  LossAndGradient out;
  out.weight_gradient.assign(weights.size(), 0.0);
  const auto n = static_cast<double>(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double z = dot(features[i], weights) + bias;
    const double y = labels[i];
    // log(1 + e^z) - y z, stable for large |z|.
    const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    out.loss += (softplus - y * z) / n;
    const double residual = (sigmoid(z) - y) / n;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      out.weight_gradient[j] += residual * features[i][j];
    }
    out.bias_gradient += residual;
  }
  for (std::size_t j = 0; j < weights.size(); ++j) {
    out.loss += 0.5 * l2 * weights[j] * weights[j];
    out.weight_gradient[j] += l2 * weights[j];
  }
  return out;
}

LogisticOutcomePredictor LogisticOutcomePredictor::train(std::span<const EncodedTrace> train,
                                                         std::size_t vocab_size,
                                                         const TrainingOptions& options) {
  if (train.empty()) {
    throw TrainingError("cannot train on an empty set");
  }
  const bool has_positive =
      std::any_of(train.begin(), train.end(), [](const EncodedTrace& t) { return t.outcome == 1; });
  const bool has_negative =
      std::any_of(train.begin(), train.end(), [](const EncodedTrace& t) { return t.outcome == 0; });
  if (!has_positive || !has_negative) {
    throw TrainingError("training set contains a single outcome class");
  }
  if (!(options.learning_rate > 0.0)) {
    throw ArgumentError("train: learning_rate must be positive");
  }

  const FeatureExtractor extractor{vocab_size, train.front().dim};
  std::vector<std::vector<double>> features;
  std::vector<int> labels;
  features.reserve(train.size());
  for (const auto& trace : train) {
    features.push_back(extractor(trace));
    labels.push_back(trace.outcome);
  }

  Rng rng = derive_rng(options.seed, {0x7EA1ULL});
  std::normal_distribution<double> init{0.0, 0.01};
  std::vector<double> weights(extractor.width());
  for (double& w : weights) {
    w = init(rng);
  }
  double bias = 0.0;

  LogisticOutcomePredictor model{extractor, weights, bias};
  double step = options.learning_rate;
  auto current = loss_and_gradient(features, labels, weights, bias, options.l2);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::vector<double> next_weights(weights.size());
    double next_bias = bias;
    LossAndGradient next;
    bool accepted = false;
    for (int attempt = 0; attempt < 60; ++attempt) {
      for (std::size_t j = 0; j < weights.size(); ++j) {
        next_weights[j] = weights[j] - step * current.weight_gradient[j];
      }
      next_bias = bias - step * current.bias_gradient;
      next = loss_and_gradient(features, labels, next_weights, next_bias, options.l2);
      if (next.loss <= current.loss) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (accepted) {
      weights = std::move(next_weights);
      bias = next_bias;
      current = std::move(next);
    }
    model.loss_history_.push_back(current.loss);
  }
  model.weights_ = std::move(weights);
  model.bias_ = bias;
  return model;
}

double LogisticOutcomePredictor::predict_proba(const EncodedTrace& trace) const {
  if (trace.dim != extractor_.feature_dim) {
    throw ConfigurationError(fmt::format("trace feature dim {} differs from predictor dim {}", trace.dim,
                                         extractor_.feature_dim));
  }
  const auto phi = extractor_(trace);
  return bounded(sigmoid(dot(phi, weights_) + bias_));
}

std::string LogisticOutcomePredictor::to_json() const {
  nlohmann::json doc;
  doc["kind"] = "logistic";
  doc["vocab_size"] = extractor_.vocab_size;
  doc["feature_dim"] = extractor_.feature_dim;
  doc["weights"] = weights_;
  doc["bias"] = bias_;
  return doc.dump(2);
}

LogisticOutcomePredictor LogisticOutcomePredictor::from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    FeatureExtractor extractor{doc.at("vocab_size").get<std::size_t>(),
                               doc.at("feature_dim").get<std::size_t>()};
    return LogisticOutcomePredictor{extractor, doc.at("weights").get<std::vector<double>>(),
                                    doc.at("bias").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("invalid predictor JSON: {}", e.what()));
  }
}

PredictionMetrics metrics_from_scores(std::span<const double> probabilities,
                                      std::span<const int> labels, double threshold) {
  if (probabilities.size() != labels.size()) {
    throw ArgumentError("metrics_from_scores: size mismatch");
  }
  PredictionMetrics m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted = probabilities[i] > threshold;
    const bool actual = labels[i] == 1;
    m.true_positives += static_cast<std::size_t>(predicted && actual);
    m.false_positives += static_cast<std::size_t>(predicted && !actual);
    m.false_negatives += static_cast<std::size_t>(!predicted && actual);
    m.true_negatives += static_cast<std::size_t>(!predicted && !actual);
  }
  m.support_positive = m.true_positives + m.false_negatives;
  m.support_negative = m.true_negatives + m.false_positives;
  const auto tp = static_cast<double>(m.true_positives);
  const std::size_t predicted_positive = m.true_positives + m.false_positives;
  if (predicted_positive > 0) {
    m.precision = tp / static_cast<double>(predicted_positive);
  } else {
    m.zero_division = true;
  }
  if (m.support_positive > 0) {
    m.recall = tp / static_cast<double>(m.support_positive);
  } else {
    m.zero_division = true;
  }
  if (m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  } else {
    m.zero_division = true;
  }
  return m;
}

PredictionMetrics evaluate(const OutcomePredictor& predictor, std::span<const EncodedTrace> test,
                           double threshold) {
  if (test.empty()) {
    throw ArgumentError("evaluate: empty test set");
  }
  const auto probabilities = predictor.predict_batch(test);
  std::vector<int> labels;
  labels.reserve(test.size());
  for (const auto& trace : test) {
    labels.push_back(trace.outcome);
  }
  return metrics_from_scores(probabilities, labels, threshold);
}

}  // namespace cfseq
