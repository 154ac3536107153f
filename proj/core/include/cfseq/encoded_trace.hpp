#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cfseq/event_log.hpp"

namespace cfseq {

/// Reserved activity id for padding positions.
inline constexpr int kPadActivity = 0;

/// Where one attribute lives inside an encoded feature row.
struct AttributeSlot {
  std::string name;
  AttributeKind kind = AttributeKind::Numeric;
  std::size_t offset = 0;
  std::size_t width = 1;
  /// Categorical only; category index c (1-based) is written as its binary code.
  std::vector<std::string> categories;
  /// Numeric only; training range used for min-max scaling.
  double min = 0.0;
  double max = 0.0;

  friend bool operator==(const AttributeSlot&, const AttributeSlot&) = default;
};

/// Column layout of the encoded feature matrix, shared by every component that
/// reads encoded traces.
struct FeatureLayout {
  std::vector<AttributeSlot> slots;
  std::size_t dim = 0;

  std::size_t n_attributes() const noexcept { return slots.size(); }
  friend bool operator==(const FeatureLayout&, const FeatureLayout&) = default;
};

/// Width of the binary code for `n_categories` (all-zeros reserved for absent).
std::size_t binary_code_width(std::size_t n_categories) noexcept;

/// Writes category index `index` (0 = absent) as a most-significant-bit-first code.
void write_category_code(std::span<double> out, std::size_t index) noexcept;

/// Reads a code back, thresholding each bit at 0.5. The result may exceed the
/// number of categories when the row was not produced by write_category_code.
std::size_t read_category_code(std::span<const double> code) noexcept;

/// Fixed-width numeric genome: label-encoded activities plus a max_len x dim
/// feature matrix in row-major order. Rows at and beyond valid_len are padding.
struct EncodedTrace {
  std::vector<int> activity_ids;
  std::vector<double> features;
  std::size_t valid_len = 0;
  std::size_t dim = 0;
  int outcome = 0;
  std::string case_id;

  EncodedTrace() = default;
  EncodedTrace(std::size_t max_len, std::size_t dim);

  std::size_t max_len() const noexcept { return activity_ids.size(); }

  std::span<const double> row(std::size_t t) const noexcept {
    return {features.data() + t * dim, dim};
  }
  std::span<double> row(std::size_t t) noexcept { return {features.data() + t * dim, dim}; }

  /// Truncates at the first PAD activity and zeroes everything after it.
  void normalize() noexcept;

  friend bool operator==(const EncodedTrace&, const EncodedTrace&) = default;
};

/// Checks padding discipline, feature range and 1 <= valid_len <= max_len.
/// Activity ids of real events must lie in [1, vocab_size].
bool satisfies_invariants(const EncodedTrace& trace, std::size_t vocab_size) noexcept;

}  // namespace cfseq
