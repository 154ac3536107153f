#include "cfseq/markov.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

#include "cfseq/errors.hpp"

namespace cfseq {

namespace {

// Normalizes smoothed counts in place. An all-zero, unsmoothed block becomes
// `fallback` (a point mass at index `fallback_index`, or uniform if negative).
void normalize(std::span<double> counts, double epsilon, std::ptrdiff_t fallback_index) {
  double total = 0.0;
  for (const double c : counts) {
    total += c;
  }
  const double denom = total + epsilon * static_cast<double>(counts.size());
  if (denom <= 0.0) {
    if (fallback_index >= 0) {
      std::fill(counts.begin(), counts.end(), 0.0);
      counts[static_cast<std::size_t>(fallback_index)] = 1.0;
    } else {
      std::fill(counts.begin(), counts.end(), 1.0 / static_cast<double>(counts.size()));
    }
    return;
  }
  for (double& c : counts) {
    c = (c + epsilon) / denom;
  }
}

}  // namespace

std::size_t MarkovFeasibilityModel::outcomes(std::size_t slot) const {
  const auto& s = layout_.slots[slot];
  return s.kind == AttributeKind::Numeric ? n_bins_ : s.categories.size() + 1;
}

std::size_t MarkovFeasibilityModel::bin_of(double value) const noexcept {
  const double clamped = std::clamp(value, 0.0, 1.0);
  const auto bin = static_cast<std::size_t>(std::floor(clamped * static_cast<double>(n_bins_)));
  return std::min(bin, n_bins_ - 1);
}

std::size_t MarkovFeasibilityModel::emission_offset(int activity, std::size_t slot) const {
  return static_cast<std::size_t>(activity - 1) * emission_stride_ + slot_offsets_[slot];
}

MarkovFeasibilityModel MarkovFeasibilityModel::fit(std::span<const EncodedTrace> train,
                                                   const FeatureLayout& layout,
                                                   std::size_t vocab_size, double epsilon,
                                                   std::size_t n_bins) {
  if (train.empty()) {
    throw EmptyLogError("cannot fit a Markov model on an empty log");
  }
  if (n_bins < 2) {
    throw ArgumentError("MarkovFeasibilityModel::fit: n_bins must be at least 2");
  }
  if (!(epsilon >= 0.0)) {
    throw ArgumentError("MarkovFeasibilityModel::fit: epsilon must be non-negative");
  }
  if (vocab_size == 0) {
    throw ArgumentError("MarkovFeasibilityModel::fit: empty vocabulary");
  }

  MarkovFeasibilityModel model;
  model.vocab_size_ = vocab_size;
  model.n_bins_ = n_bins;
  model.epsilon_ = epsilon;
  model.layout_ = layout;
  model.emission_stride_ = 0;
  for (std::size_t s = 0; s < layout.slots.size(); ++s) {
    model.slot_offsets_.push_back(model.emission_stride_);
    model.emission_stride_ += model.outcomes(s);
  }

  const std::size_t k = vocab_size;
  model.initial_.assign(k, 0.0);
  model.transition_.assign(k * (k + 1), 0.0);
  model.emissions_.assign(k * model.emission_stride_, 0.0);

  for (const auto& trace : train) {
    if (trace.dim != layout.dim) {
      throw ConfigurationError("Markov fit: trace feature dimension does not match the layout");
    }
    for (std::size_t t = 0; t < trace.valid_len; ++t) {
      const int id = trace.activity_ids[t];
      if (id < 1 || static_cast<std::size_t>(id) > k) {
        throw VocabularyError(fmt::format("Markov fit: activity id {} outside [1, {}]", id, k));
      }
      const auto from = static_cast<std::size_t>(id - 1);
      if (t == 0) {
        model.initial_[from] += 1.0;
      }
      const std::size_t to = t + 1 < trace.valid_len
                                 ? static_cast<std::size_t>(trace.activity_ids[t + 1] - 1)
                                 : k;
      model.transition_[from * (k + 1) + to] += 1.0;

      const auto row = trace.row(t);
      for (std::size_t s = 0; s < layout.slots.size(); ++s) {
        const auto& slot = layout.slots[s];
        const auto cell = row.subspan(slot.offset, slot.width);
        std::size_t outcome = 0;
        if (slot.kind == AttributeKind::Numeric) {
          outcome = model.bin_of(cell[0]);
        } else {
          outcome = read_category_code(cell);
          if (outcome > slot.categories.size()) {
            continue;
          }
        }
        model.emissions_[model.emission_offset(id, s) + outcome] += 1.0;
      }
    }
  }

  normalize(model.initial_, epsilon, -1);
  for (std::size_t i = 0; i < k; ++i) {
    normalize(std::span<double>{model.transition_}.subspan(i * (k + 1), k + 1), epsilon,
              static_cast<std::ptrdiff_t>(k));
    for (std::size_t s = 0; s < layout.slots.size(); ++s) {
      normalize(std::span<double>{model.emissions_}.subspan(
                    model.emission_offset(static_cast<int>(i + 1), s), model.outcomes(s)),
                epsilon, -1);
    }
  }
  return model;
}

std::span<const double> MarkovFeasibilityModel::transition_row(int from) const {
  if (from < 1 || static_cast<std::size_t>(from) > vocab_size_) {
    throw VocabularyError(fmt::format("activity id {} outside [1, {}]", from, vocab_size_));
  }
  return std::span<const double>{transition_}.subspan(
      static_cast<std::size_t>(from - 1) * (vocab_size_ + 1), vocab_size_ + 1);
}

std::span<const double> MarkovFeasibilityModel::emission(int activity, std::size_t slot) const {
  if (activity < 1 || static_cast<std::size_t>(activity) > vocab_size_) {
    throw VocabularyError(fmt::format("activity id {} outside [1, {}]", activity, vocab_size_));
  }
  return std::span<const double>{emissions_}.subspan(emission_offset(activity, slot), outcomes(slot));
}

double MarkovFeasibilityModel::initial_prob(int activity) const {
  if (activity < 1 || static_cast<std::size_t>(activity) > vocab_size_) {
    return 0.0;
  }
  return initial_[static_cast<std::size_t>(activity - 1)];
}

double MarkovFeasibilityModel::transition_prob(int from, int to) const {
  if (from < 1 || static_cast<std::size_t>(from) > vocab_size_ || to < 1 || to > end_state()) {
    return 0.0;
  }
  return transition_row(from)[static_cast<std::size_t>(to - 1)];
}

double MarkovFeasibilityModel::emission_prob(int activity, std::span<const double> row) const {
  if (activity < 1 || static_cast<std::size_t>(activity) > vocab_size_) {
    return 0.0;
  }
  double p = 1.0;
  for (std::size_t s = 0; s < layout_.slots.size(); ++s) {
    const auto& slot = layout_.slots[s];
    const auto cell = row.subspan(slot.offset, slot.width);
    const auto dist = emission(activity, s);
    std::size_t outcome = 0;
    if (slot.kind == AttributeKind::Numeric) {
      outcome = bin_of(cell[0]);
    } else {
      outcome = read_category_code(cell);
      if (outcome >= dist.size()) {
        return 0.0;
      }
    }
    p *= dist[outcome];
  }
  return p;
}

double MarkovFeasibilityModel::feasibility(const EncodedTrace& trace) const {
  if (trace.valid_len < 1) {
    throw ArgumentError("feasibility: trace has no events");
  }
  if (trace.dim != layout_.dim) {
    throw ConfigurationError("feasibility: trace feature dimension does not match the model");
  }
  const int first = trace.activity_ids[0];
  double p = initial_prob(first) * emission_prob(first, trace.row(0));
  for (std::size_t t = 1; t < trace.valid_len && p > 0.0; ++t) {
    const int id = trace.activity_ids[t];
    p *= transition_prob(trace.activity_ids[t - 1], id) * emission_prob(id, trace.row(t));
  }
  return p;
}

std::vector<int> MarkovFeasibilityModel::sample_sequence(std::size_t max_len, Rng& rng) const {
  if (max_len < 1) {
    throw ArgumentError("sample_sequence: max_len must be at least 1");
  }
  std::vector<int> sequence;
  int current = static_cast<int>(sample_index(initial_, rng)) + 1;
  sequence.push_back(current);
  while (sequence.size() < max_len) {
    const int next = static_cast<int>(sample_index(transition_row(current), rng)) + 1;
    if (next == end_state()) {
      break;
    }
    sequence.push_back(next);
    current = next;
  }
  return sequence;
}

std::vector<double> MarkovFeasibilityModel::sample_attributes(int activity, Rng& rng) const {
  if (activity < 1 || static_cast<std::size_t>(activity) > vocab_size_) {
    throw VocabularyError(fmt::format("sample_attributes: activity id {} is not a real activity",
                                      activity));
  }
  std::vector<double> row(layout_.dim, 0.0);
  for (std::size_t s = 0; s < layout_.slots.size(); ++s) {
    const auto& slot = layout_.slots[s];
    const std::size_t outcome = sample_index(emission(activity, s), rng);
    auto cell = std::span<double>{row}.subspan(slot.offset, slot.width);
    if (slot.kind == AttributeKind::Numeric) {
      const double width = 1.0 / static_cast<double>(n_bins_);
      const double lo = static_cast<double>(outcome) * width;
      double value = std::clamp(lo + uniform01(rng) * width, 0.0, 1.0);
      // Round-off at the bin edges must not move the sample into a neighbour bin.
      while (bin_of(value) < outcome) {
        value = std::nextafter(value, 2.0);
      }
      while (bin_of(value) > outcome) {
        value = std::nextafter(value, -1.0);
      }
      cell[0] = value;
    } else {
      write_category_code(cell, outcome);
    }
  }
  return row;
}

std::string MarkovFeasibilityModel::to_json() const {
  nlohmann::json doc;
  doc["vocab_size"] = vocab_size_;
  doc["n_bins"] = n_bins_;
  doc["epsilon"] = epsilon_;
  doc["dim"] = layout_.dim;
  doc["initial"] = initial_;
  doc["transition"] = transition_;
  doc["emissions"] = emissions_;
  doc["slots"] = nlohmann::json::array();
  for (const auto& slot : layout_.slots) {
    doc["slots"].push_back({{"name", slot.name},
                            {"kind", std::string{to_string(slot.kind)}},
                            {"offset", slot.offset},
                            {"width", slot.width},
                            {"categories", slot.categories},
                            {"min", slot.min},
                            {"max", slot.max}});
  }
  return doc.dump(2);
}

MarkovFeasibilityModel MarkovFeasibilityModel::from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    MarkovFeasibilityModel model;
    model.vocab_size_ = doc.at("vocab_size").get<std::size_t>();
    model.n_bins_ = doc.at("n_bins").get<std::size_t>();
    model.epsilon_ = doc.at("epsilon").get<double>();
    model.layout_.dim = doc.at("dim").get<std::size_t>();
    for (const auto& s : doc.at("slots")) {
      AttributeSlot slot;
      slot.name = s.at("name").get<std::string>();
      slot.kind = s.at("kind").get<std::string>() == "numeric" ? AttributeKind::Numeric
                                                               : AttributeKind::Categorical;
      slot.offset = s.at("offset").get<std::size_t>();
      slot.width = s.at("width").get<std::size_t>();
      slot.categories = s.at("categories").get<std::vector<std::string>>();
      slot.min = s.at("min").get<double>();
      slot.max = s.at("max").get<double>();
      model.layout_.slots.push_back(std::move(slot));
    }
    for (std::size_t s = 0; s < model.layout_.slots.size(); ++s) {
      model.slot_offsets_.push_back(model.emission_stride_);
      model.emission_stride_ += model.outcomes(s);
    }
    model.initial_ = doc.at("initial").get<std::vector<double>>();
    model.transition_ = doc.at("transition").get<std::vector<double>>();
    model.emissions_ = doc.at("emissions").get<std::vector<double>>();
    const std::size_t k = model.vocab_size_;
    if (model.initial_.size() != k || model.transition_.size() != k * (k + 1) ||
        model.emissions_.size() != k * model.emission_stride_) {
      throw ParseError("Markov model JSON has inconsistent table sizes");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("invalid Markov model JSON: {}", e.what()));
  }
}

}  // namespace cfseq
