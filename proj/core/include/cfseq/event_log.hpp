#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace cfseq {

enum class AttributeKind { Numeric, Categorical };

std::string_view to_string(AttributeKind kind) noexcept;

/// Per-event attribute declaration. Categories are filled when the log is
/// loaded; the observed range is filled when an encoder is fitted.
struct AttributeSchema {
  std::string name;
  AttributeKind kind = AttributeKind::Numeric;
  std::vector<std::string> categories;
  double observed_min = 0.0;
  double observed_max = 0.0;

  friend bool operator==(const AttributeSchema&, const AttributeSchema&) = default;
};

using AttributeValue = std::variant<double, std::string>;

struct Event {
  std::string activity;
  std::optional<std::int64_t> timestamp;
  /// Absent categorical values are simply missing from the map.
  std::map<std::string, AttributeValue> attributes;

  friend bool operator==(const Event&, const Event&) = default;
};

struct Trace {
  std::string case_id;
  std::vector<Event> events;
  int outcome = 0;

  std::size_t size() const noexcept { return events.size(); }
  friend bool operator==(const Trace&, const Trace&) = default;
};

struct EventLog {
  std::vector<Trace> traces;
  std::vector<AttributeSchema> schemas;
  std::vector<std::string> activity_vocabulary;

  std::size_t size() const noexcept { return traces.size(); }
  bool empty() const noexcept { return traces.empty(); }
  const AttributeSchema* find_schema(std::string_view name) const noexcept;
  friend bool operator==(const EventLog&, const EventLog&) = default;
};

/// Declared attribute columns of an input CSV.
struct SchemaConfig {
  std::vector<std::pair<std::string, AttributeKind>> attributes;

  /// Parses `{"attributes":[{"name":...,"kind":"numeric"|"categorical"}]}`.
  static SchemaConfig from_json(std::string_view text);
  static SchemaConfig load(const std::filesystem::path& path);
  std::string to_json() const;
};

SchemaConfig schema_config_of(const EventLog& log);

/// Throws DataError / SchemaError on the first violated invariant.
void validate(const EventLog& log);

/// Reads an event log CSV with columns `case_id,activity,outcome`, an optional
/// `timestamp` (integer ordinal or ISO-8601) and the declared attribute columns.
/// Cases keep the order of their first row; events are stably ordered by
/// timestamp when present.
EventLog read_csv(std::istream& in, const SchemaConfig& schema);
EventLog load_csv(const std::filesystem::path& path, const SchemaConfig& schema);

/// Writes the log in the format accepted by read_csv. Timestamps are emitted
/// as integer ordinals when every event carries one.
void write_csv(const EventLog& log, std::ostream& out);
void save_csv(const EventLog& log, const std::filesystem::path& path);

/// Parses an integer ordinal or an ISO-8601 date/date-time into seconds.
std::optional<std::int64_t> parse_timestamp(std::string_view text);

/// Drops traces longer than `max_len`.
EventLog preprocess(const EventLog& log, std::size_t max_len = 25);

/// Seeded case-level partition into (train, test). Both sides keep the full
/// vocabulary and schemas of the input.
std::pair<EventLog, EventLog> split_train_test(const EventLog& log, double test_fraction,
                                               std::uint64_t seed);

}  // namespace cfseq
