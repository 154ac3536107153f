#include "cfseq/encoder.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

#include "cfseq/errors.hpp"

namespace cfseq {

std::size_t binary_code_width(std::size_t n_categories) noexcept {
  // ceil(log2(n + 1)): number of bits needed to write n in binary.
  std::size_t width = 0;
  for (std::size_t v = n_categories; v > 0; v >>= 1U) {
    ++width;
  }
  return std::max<std::size_t>(width, 1);
}

void write_category_code(std::span<double> out, std::size_t index) noexcept {
  const std::size_t width = out.size();
  for (std::size_t b = 0; b < width; ++b) {
    out[b] = ((index >> (width - 1 - b)) & 1U) != 0 ? 1.0 : 0.0;
  }
}

std::size_t read_category_code(std::span<const double> code) noexcept {
  std::size_t index = 0;
  for (const double bit : code) {
    index = (index << 1U) | (bit >= 0.5 ? 1U : 0U);
  }
  return index;
}

EncodedTrace::EncodedTrace(std::size_t max_len, std::size_t dim)
    : activity_ids(max_len, kPadActivity), features(max_len * dim, 0.0), dim(dim) {}

void EncodedTrace::normalize() noexcept {
  const auto first_pad = std::find(activity_ids.begin(), activity_ids.end(), kPadActivity);
  valid_len = static_cast<std::size_t>(first_pad - activity_ids.begin());
  std::fill(first_pad, activity_ids.end(), kPadActivity);
  std::fill(features.begin() + static_cast<std::ptrdiff_t>(valid_len * dim), features.end(), 0.0);
}

bool satisfies_invariants(const EncodedTrace& trace, std::size_t vocab_size) noexcept {
  const std::size_t max_len = trace.max_len();
  if (trace.features.size() != max_len * trace.dim) {
    return false;
  }
  if (trace.valid_len < 1 || trace.valid_len > max_len) {
    return false;
  }
  for (std::size_t t = 0; t < max_len; ++t) {
    const int id = trace.activity_ids[t];
    const auto row = trace.row(t);
    if (t < trace.valid_len) {
      if (id < 1 || static_cast<std::size_t>(id) > vocab_size) {
        return false;
      }
      for (const double v : row) {
        if (!(v >= 0.0 && v <= 1.0)) {
          return false;
        }
      }
    } else {
      if (id != kPadActivity) {
        return false;
      }
      for (const double v : row) {
        if (v != 0.0) {
          return false;
        }
      }
    }
  }
  return true;
}

void EncoderSpec::index_activities() {
  activity_ids_.clear();
  for (std::size_t i = 0; i < activities_.size(); ++i) {
    activity_ids_.emplace(activities_[i], static_cast<int>(i + 1));
  }
}

EncoderSpec EncoderSpec::fit(const EventLog& train, std::size_t max_len) {
  if (train.empty()) {
    throw EmptyLogError("cannot fit an encoder on an empty log");
  }
  EncoderSpec spec;
  spec.activities_ = train.activity_vocabulary;
  spec.index_activities();

  std::size_t offset = 0;
  for (const auto& schema : train.schemas) {
    AttributeSlot slot;
    slot.name = schema.name;
    slot.kind = schema.kind;
    slot.offset = offset;
    if (schema.kind == AttributeKind::Categorical) {
      slot.categories = schema.categories;
      slot.width = binary_code_width(schema.categories.size());
    } else {
      slot.width = 1;
      bool seen = false;
      for (const auto& trace : train.traces) {
        for (const auto& event : trace.events) {
          const auto it = event.attributes.find(schema.name);
          if (it == event.attributes.end()) {
            continue;
          }
          const double v = std::get<double>(it->second);
          slot.min = seen ? std::min(slot.min, v) : v;
          slot.max = seen ? std::max(slot.max, v) : v;
          seen = true;
        }
      }
    }
    offset += slot.width;
    spec.layout_.slots.push_back(std::move(slot));
  }
  spec.layout_.dim = offset;

  spec.max_len_ = max_len;
  for (const auto& trace : train.traces) {
    spec.max_len_ = std::max(spec.max_len_, trace.size());
  }
  return spec;
}

int EncoderSpec::activity_id(std::string_view activity) const {
  const auto it = activity_ids_.find(std::string{activity});
  if (it == activity_ids_.end()) {
    throw VocabularyError(fmt::format("unknown activity '{}'", activity));
  }
  return it->second;
}

const std::string& EncoderSpec::activity_name(int id) const {
  if (id < 1 || static_cast<std::size_t>(id) > activities_.size()) {
    throw VocabularyError(fmt::format("activity id {} outside [1, {}]", id, activities_.size()));
  }
  return activities_[static_cast<std::size_t>(id - 1)];
}

EncodedTrace EncoderSpec::encode(const Trace& trace) const {
  if (trace.events.empty()) {
    throw DataError(fmt::format("case '{}' has no events", trace.case_id));
  }
  if (trace.size() > max_len_) {
    throw VocabularyError(fmt::format("case '{}' has {} events, encoder max_len is {}", trace.case_id,
                                      trace.size(), max_len_));
  }
  EncodedTrace out{max_len_, layout_.dim};
  out.case_id = trace.case_id;
  out.outcome = trace.outcome;
  out.valid_len = trace.size();
  for (std::size_t t = 0; t < trace.size(); ++t) {
    const auto& event = trace.events[t];
    out.activity_ids[t] = activity_id(event.activity);
    auto row = out.row(t);
    for (const auto& slot : layout_.slots) {
      const auto it = event.attributes.find(slot.name);
      auto cell = row.subspan(slot.offset, slot.width);
      if (slot.kind == AttributeKind::Numeric) {
        if (it == event.attributes.end()) {
          throw DataError(fmt::format("case '{}' event {} lacks numeric attribute '{}'",
                                      trace.case_id, t, slot.name));
        }
        const double v = std::get<double>(it->second);
        const double span = slot.max - slot.min;
        cell[0] = span > 0.0 ? std::clamp((v - slot.min) / span, 0.0, 1.0) : 0.0;
      } else if (it != event.attributes.end()) {
        const auto& value = std::get<std::string>(it->second);
        const auto pos = std::find(slot.categories.begin(), slot.categories.end(), value);
        if (pos == slot.categories.end()) {
          throw VocabularyError(
              fmt::format("unknown category '{}' for attribute '{}'", value, slot.name));
        }
        write_category_code(cell, static_cast<std::size_t>(pos - slot.categories.begin()) + 1);
      }
    }
  }
  return out;
}

std::map<std::string, AttributeValue> EncoderSpec::decode_row(std::span<const double> row) const {
  std::map<std::string, AttributeValue> attributes;
  for (const auto& slot : layout_.slots) {
    const auto cell = row.subspan(slot.offset, slot.width);
    if (slot.kind == AttributeKind::Numeric) {
      attributes.emplace(slot.name, slot.min + cell[0] * (slot.max - slot.min));
    } else {
      const std::size_t index = read_category_code(cell);
      if (index >= 1 && index <= slot.categories.size()) {
        attributes.emplace(slot.name, slot.categories[index - 1]);
      }
    }
  }
  return attributes;
}

Trace EncoderSpec::decode(const EncodedTrace& encoded) const {
  if (encoded.valid_len > encoded.max_len()) {
    throw ArgumentError("decode: valid_len exceeds max_len");
  }
  if (encoded.dim != layout_.dim) {
    throw ConfigurationError("decode: feature dimension does not match the encoder");
  }
  Trace trace;
  trace.case_id = encoded.case_id;
  trace.outcome = encoded.outcome;
  for (std::size_t t = 0; t < encoded.valid_len; ++t) {
    Event event;
    event.activity = activity_name(encoded.activity_ids[t]);
    event.attributes = decode_row(encoded.row(t));
    trace.events.push_back(std::move(event));
  }
  return trace;
}

std::vector<EncodedTrace> EncoderSpec::encode_all(const EventLog& log) const {
  std::vector<EncodedTrace> out;
  out.reserve(log.size());
  for (const auto& trace : log.traces) {
    out.push_back(encode(trace));
  }
  return out;
}

std::string EncoderSpec::to_json() const {
  nlohmann::json doc;
  doc["activities"] = activities_;
  doc["max_len"] = max_len_;
  doc["dim"] = layout_.dim;
  doc["attributes"] = nlohmann::json::array();
  for (const auto& slot : layout_.slots) {
    nlohmann::json s{{"name", slot.name},
                     {"kind", std::string{to_string(slot.kind)}},
                     {"offset", slot.offset},
                     {"width", slot.width}};
    if (slot.kind == AttributeKind::Categorical) {
      s["categories"] = slot.categories;
    } else {
      s["min"] = slot.min;
      s["max"] = slot.max;
    }
    doc["attributes"].push_back(std::move(s));
  }
  return doc.dump(2);
}

EncoderSpec EncoderSpec::from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    EncoderSpec spec;
    spec.activities_ = doc.at("activities").get<std::vector<std::string>>();
    spec.max_len_ = doc.at("max_len").get<std::size_t>();
    spec.layout_.dim = doc.at("dim").get<std::size_t>();
    for (const auto& s : doc.at("attributes")) {
      AttributeSlot slot;
      slot.name = s.at("name").get<std::string>();
      const auto kind = s.at("kind").get<std::string>();
      slot.kind = kind == "numeric" ? AttributeKind::Numeric : AttributeKind::Categorical;
      slot.offset = s.at("offset").get<std::size_t>();
      slot.width = s.at("width").get<std::size_t>();
      if (slot.kind == AttributeKind::Categorical) {
        slot.categories = s.at("categories").get<std::vector<std::string>>();
      } else {
        slot.min = s.at("min").get<double>();
        slot.max = s.at("max").get<double>();
      }
      spec.layout_.slots.push_back(std::move(slot));
    }
    spec.index_activities();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("invalid encoder JSON: {}", e.what()));
  }
}

}  // namespace cfseq
