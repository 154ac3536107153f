#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cfseq/encoded_trace.hpp"
#include "cfseq/event_log.hpp"

namespace cfseq {

/// Label encoding for activities plus per-attribute encoders:
/// numeric -> min-max scaling (clipped to [0,1]), categorical -> minimal binary code.
class EncoderSpec {
 public:
  EncoderSpec() = default;

  /// Activity ids follow the log vocabulary order (1..K, 0 = PAD); numeric
  /// ranges come from `train` only; max_len is the longest training trace
  /// unless a larger `max_len` is given.
  static EncoderSpec fit(const EventLog& train, std::size_t max_len = 0);

  EncodedTrace encode(const Trace& trace) const;
  Trace decode(const EncodedTrace& encoded) const;

  std::vector<EncodedTrace> encode_all(const EventLog& log) const;

  int activity_id(std::string_view activity) const;
  const std::string& activity_name(int id) const;

  std::size_t vocab_size() const noexcept { return activities_.size(); }
  std::size_t feature_dim() const noexcept { return layout_.dim; }
  std::size_t max_len() const noexcept { return max_len_; }
  const FeatureLayout& layout() const noexcept { return layout_; }
  const std::vector<std::string>& activities() const noexcept { return activities_; }

  /// Decodes a single feature row into named attribute values.
  std::map<std::string, AttributeValue> decode_row(std::span<const double> row) const;

  std::string to_json() const;
  static EncoderSpec from_json(std::string_view text);

  friend bool operator==(const EncoderSpec& a, const EncoderSpec& b) {
    return a.activities_ == b.activities_ && a.layout_ == b.layout_ && a.max_len_ == b.max_len_;
  }

 private:
  void index_activities();

  std::vector<std::string> activities_;
  std::unordered_map<std::string, int> activity_ids_;
  FeatureLayout layout_;
  std::size_t max_len_ = 0;
};

}  // namespace cfseq
