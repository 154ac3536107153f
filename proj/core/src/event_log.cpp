#include "cfseq/event_log.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>
#include <json.hpp>

#include "cfseq/csv.hpp"
#include "cfseq/errors.hpp"
#include "cfseq/rng.hpp"

namespace cfseq {

namespace {

using nlohmann::json;

AttributeKind parse_kind(std::string_view text) {
  if (text == "numeric") {
    return AttributeKind::Numeric;
  }
  if (text == "categorical") {
    return AttributeKind::Categorical;
  }
  throw SchemaError(fmt::format("unknown attribute kind '{}'", text));
}

std::optional<double> parse_double(std::string_view text) {
  while (!text.empty() && text.front() == ' ') {
    text.remove_prefix(1);
  }
  while (!text.empty() && text.back() == ' ') {
    text.remove_suffix(1);
  }
  if (text.empty()) {
    return std::nullopt;
  }
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

template <typename Int>
std::optional<Int> parse_int(std::string_view text) {
  Int value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    return std::nullopt;
  }
  return value;
}

}  // namespace

std::string_view to_string(AttributeKind kind) noexcept {
  return kind == AttributeKind::Numeric ? "numeric" : "categorical";
}

const AttributeSchema* EventLog::find_schema(std::string_view name) const noexcept {
  for (const auto& schema : schemas) {
    if (schema.name == name) {
      return &schema;
    }
  }
  return nullptr;
}

SchemaConfig SchemaConfig::from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError(fmt::format("schema config is not valid JSON: {}", e.what()));
  }
  if (!doc.is_object() || !doc.contains("attributes") || !doc["attributes"].is_array()) {
    throw SchemaError("schema config must be an object with an 'attributes' array");
  }
  SchemaConfig config;
  std::set<std::string> seen;
  for (const auto& entry : doc["attributes"]) {
    if (!entry.contains("name") || !entry.contains("kind")) {
      throw SchemaError("every attribute needs 'name' and 'kind'");
    }
    auto name = entry["name"].get<std::string>();
    if (name == "case_id" || name == "activity" || name == "outcome" || name == "timestamp") {
      throw SchemaError(fmt::format("attribute name '{}' collides with a reserved column", name));
    }
    if (!seen.insert(name).second) {
      throw SchemaError(fmt::format("duplicate attribute '{}'", name));
    }
    config.attributes.emplace_back(std::move(name), parse_kind(entry["kind"].get<std::string>()));
  }
  return config;
}

SchemaConfig SchemaConfig::load(const std::filesystem::path& path) {
  std::ifstream in{path};
  if (!in) {
    throw SchemaError(fmt::format("cannot open schema config '{}'", path.string()));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

std::string SchemaConfig::to_json() const {
  json doc;
  doc["attributes"] = json::array();
  for (const auto& [name, kind] : attributes) {
    doc["attributes"].push_back({{"name", name}, {"kind", std::string{cfseq::to_string(kind)}}});
  }
  return doc.dump(2);
}

SchemaConfig schema_config_of(const EventLog& log) {
  SchemaConfig config;
  for (const auto& schema : log.schemas) {
    config.attributes.emplace_back(schema.name, schema.kind);
  }
  return config;
}

void validate(const EventLog& log) {
  std::set<std::string> vocabulary(log.activity_vocabulary.begin(), log.activity_vocabulary.end());
  if (vocabulary.size() != log.activity_vocabulary.size()) {
    throw DataError("activity vocabulary contains duplicates");
  }
  for (const auto& schema : log.schemas) {
    if (schema.kind == AttributeKind::Categorical) {
      if (schema.categories.empty()) {
        throw SchemaError(fmt::format("categorical attribute '{}' has no categories", schema.name));
      }
      std::set<std::string> unique(schema.categories.begin(), schema.categories.end());
      if (unique.size() != schema.categories.size()) {
        throw SchemaError(fmt::format("categorical attribute '{}' repeats a category", schema.name));
      }
    } else if (schema.observed_min > schema.observed_max) {
      throw SchemaError(fmt::format("numeric attribute '{}' has min > max", schema.name));
    }
  }
  std::set<std::string> case_ids;
  for (const auto& trace : log.traces) {
    if (!case_ids.insert(trace.case_id).second) {
      throw DataError(fmt::format("duplicate case id '{}'", trace.case_id));
    }
    if (trace.events.empty()) {
      throw DataError(fmt::format("case '{}' has no events", trace.case_id));
    }
    if (trace.outcome != 0 && trace.outcome != 1) {
      throw DataError(fmt::format("case '{}' has non-binary outcome", trace.case_id));
    }
    std::optional<std::int64_t> previous;
    for (const auto& event : trace.events) {
      if (!vocabulary.contains(event.activity)) {
        throw DataError(fmt::format("case '{}' uses activity '{}' outside the vocabulary",
                                    trace.case_id, event.activity));
      }
      if (event.timestamp && previous && *event.timestamp < *previous) {
        throw DataError(fmt::format("case '{}' is not ordered by timestamp", trace.case_id));
      }
      previous = event.timestamp;
      for (const auto& [name, value] : event.attributes) {
        const auto* schema = log.find_schema(name);
        if (schema == nullptr) {
          throw SchemaError(fmt::format("undeclared attribute '{}'", name));
        }
        const bool numeric = std::holds_alternative<double>(value);
        if (numeric != (schema->kind == AttributeKind::Numeric)) {
          throw DataError(fmt::format("attribute '{}' in case '{}' has the wrong kind", name,
                                      trace.case_id));
        }
      }
    }
  }
}

std::optional<std::int64_t> parse_timestamp(std::string_view text) {
  if (text.empty()) {
    return std::nullopt;
  }
  if (auto ordinal = parse_int<std::int64_t>(text)) {
    return ordinal;
  }
  // YYYY-MM-DD[(T| )HH:MM[:SS[.fff]]][Z]
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') {
    return std::nullopt;
  }
  const auto year = parse_int<int>(text.substr(0, 4));
  const auto month = parse_int<unsigned>(text.substr(5, 2));
  const auto day = parse_int<unsigned>(text.substr(8, 2));
  if (!year || !month || !day) {
    return std::nullopt;
  }
  const std::chrono::year_month_day date{std::chrono::year{*year}, std::chrono::month{*month},
                                         std::chrono::day{*day}};
  if (!date.ok()) {
    return std::nullopt;
  }
  std::int64_t seconds =
      std::chrono::duration_cast<std::chrono::seconds>(std::chrono::sys_days{date}.time_since_epoch())
          .count();
  if (text.size() == 10) {
    return seconds;
  }
  if ((text[10] != 'T' && text[10] != ' ') || text.size() < 16 || text[13] != ':') {
    return std::nullopt;
  }
  const auto hour = parse_int<int>(text.substr(11, 2));
  const auto minute = parse_int<int>(text.substr(14, 2));
  if (!hour || !minute || *hour > 23 || *minute > 59) {
    return std::nullopt;
  }
  int second = 0;
  if (text.size() >= 19 && text[16] == ':') {
    const auto parsed = parse_int<int>(text.substr(17, 2));
    if (!parsed || *parsed > 60) {
      return std::nullopt;
    }
    second = *parsed;
  }
  seconds += *hour * 3600 + *minute * 60 + second;
  return seconds;
}

EventLog read_csv(std::istream& in, const SchemaConfig& schema) {
  const auto rows = csv::read_rows(in);
  if (rows.empty()) {
    throw SchemaError("event log CSV has no header row");
  }
  const auto& header = rows.front();
  auto column = [&header](std::string_view name) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      return std::nullopt;
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  auto required = [&](std::string_view name) {
    const auto index = column(name);
    if (!index) {
      throw SchemaError(fmt::format("missing required column '{}'", name));
    }
    return *index;
  };

  const std::size_t case_col = required("case_id");
  const std::size_t activity_col = required("activity");
  const std::size_t outcome_col = required("outcome");
  const auto timestamp_col = column("timestamp");
  std::vector<std::size_t> attribute_cols;
  for (const auto& [name, kind] : schema.attributes) {
    attribute_cols.push_back(required(name));
  }

  EventLog log;
  for (const auto& [name, kind] : schema.attributes) {
    log.schemas.push_back(AttributeSchema{name, kind, {}, 0.0, 0.0});
  }
  std::vector<std::set<std::string>> categories(schema.attributes.size());
  std::set<std::string> vocabulary;
  std::unordered_map<std::string, std::size_t> case_index;

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t line = r + 1;
    if (row.size() != header.size()) {
      throw DataError(fmt::format("row {} has {} fields, header has {}", line, row.size(),
                                  header.size()));
    }
    const std::string& case_id = row[case_col];
    if (case_id.empty()) {
      throw DataError(fmt::format("row {} has an empty case_id", line));
    }
    const std::string& activity = row[activity_col];
    if (activity.empty()) {
      throw DataError(fmt::format("row {} has an empty activity", line));
    }
    const auto outcome = parse_int<int>(row[outcome_col]);
    if (!outcome || (*outcome != 0 && *outcome != 1)) {
      throw DataError(fmt::format("row {} has outcome '{}', expected 0 or 1", line, row[outcome_col]));
    }

    Event event;
    event.activity = activity;
    if (timestamp_col && !row[*timestamp_col].empty()) {
      event.timestamp = parse_timestamp(row[*timestamp_col]);
      if (!event.timestamp) {
        throw DataError(fmt::format("row {} has unparseable timestamp '{}'", line, row[*timestamp_col]));
      }
    }
    for (std::size_t a = 0; a < schema.attributes.size(); ++a) {
      const auto& [name, kind] = schema.attributes[a];
      const std::string& cell = row[attribute_cols[a]];
      if (kind == AttributeKind::Numeric) {
        const auto value = parse_double(cell);
        if (!value) {
          throw DataError(
              fmt::format("row {} has unparseable numeric value '{}' in column '{}'", line, cell, name));
        }
        event.attributes.emplace(name, *value);
      } else if (!cell.empty()) {
        categories[a].insert(cell);
        event.attributes.emplace(name, cell);
      }
    }
    vocabulary.insert(activity);

    auto [it, inserted] = case_index.emplace(case_id, log.traces.size());
    if (inserted) {
      log.traces.push_back(Trace{case_id, {}, *outcome});
    }
    auto& trace = log.traces[it->second];
    if (trace.outcome != *outcome) {
      throw DataError(fmt::format("case '{}' has inconsistent outcomes (row {})", case_id, line));
    }
    trace.events.push_back(std::move(event));
  }

  for (auto& trace : log.traces) {
    const bool all_stamped = std::all_of(trace.events.begin(), trace.events.end(),
                                         [](const Event& e) { return e.timestamp.has_value(); });
    if (all_stamped) {
      std::stable_sort(trace.events.begin(), trace.events.end(),
                       [](const Event& a, const Event& b) { return *a.timestamp < *b.timestamp; });
    }
  }
  log.activity_vocabulary.assign(vocabulary.begin(), vocabulary.end());
  for (std::size_t a = 0; a < log.schemas.size(); ++a) {
    log.schemas[a].categories.assign(categories[a].begin(), categories[a].end());
    if (log.schemas[a].kind == AttributeKind::Categorical && log.schemas[a].categories.empty()) {
      throw SchemaError(fmt::format("categorical attribute '{}' has no values", log.schemas[a].name));
    }
  }
  return log;
}

EventLog load_csv(const std::filesystem::path& path, const SchemaConfig& schema) {
  std::ifstream in{path, std::ios::binary};
  if (!in) {
    throw DataError(fmt::format("cannot open event log '{}'", path.string()));
  }
  return read_csv(in, schema);
}

void write_csv(const EventLog& log, std::ostream& out) {
  bool stamped = true;
  for (const auto& trace : log.traces) {
    for (const auto& event : trace.events) {
      stamped = stamped && event.timestamp.has_value();
    }
  }
  std::vector<std::string> header{"case_id", "activity", "outcome"};
  if (stamped) {
    header.emplace_back("timestamp");
  }
  for (const auto& schema : log.schemas) {
    header.push_back(schema.name);
  }
  out << csv::join(header) << '\n';
  for (const auto& trace : log.traces) {
    for (const auto& event : trace.events) {
      std::vector<std::string> row{trace.case_id, event.activity, std::to_string(trace.outcome)};
      if (stamped) {
        row.push_back(std::to_string(*event.timestamp));
      }
      for (const auto& schema : log.schemas) {
        const auto it = event.attributes.find(schema.name);
        if (it == event.attributes.end()) {
          row.emplace_back();
        } else if (const auto* number = std::get_if<double>(&it->second)) {
          row.push_back(fmt::format("{}", *number));
        } else {
          row.push_back(std::get<std::string>(it->second));
        }
      }
      out << csv::join(row) << '\n';
    }
  }
}

void save_csv(const EventLog& log, const std::filesystem::path& path) {
  std::ofstream out{path, std::ios::binary};
  if (!out) {
    throw DataError(fmt::format("cannot write event log '{}'", path.string()));
  }
  write_csv(log, out);
}

EventLog preprocess(const EventLog& log, std::size_t max_len) {
  if (max_len < 1) {
    throw ArgumentError("preprocess: max_len must be at least 1");
  }
  EventLog out;
  out.schemas = log.schemas;
  out.activity_vocabulary = log.activity_vocabulary;
  std::copy_if(log.traces.begin(), log.traces.end(), std::back_inserter(out.traces),
               [max_len](const Trace& t) { return t.size() <= max_len; });
  if (out.traces.empty()) {
    throw EmptyLogError(fmt::format("no trace has at most {} events", max_len));
  }
  return out;
}

std::pair<EventLog, EventLog> split_train_test(const EventLog& log, double test_fraction,
                                               std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ArgumentError("split_train_test: test_fraction must lie in (0, 1)");
  }
  const std::size_t n = log.size();
  if (n < 2) {
    throw SplitError(fmt::format("cannot split {} trace(s) into two non-empty parts", n));
  }
  auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng{derive_seed(seed, {0x5B117ULL})};
  for (std::size_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i)));
    std::swap(order[i], order[j]);
  }
  std::vector<bool> is_test(n, false);
  for (std::size_t i = 0; i < n_test; ++i) {
    is_test[order[i]] = true;
  }

  EventLog train;
  EventLog test;
  for (auto* part : {&train, &test}) {
    part->schemas = log.schemas;
    part->activity_vocabulary = log.activity_vocabulary;
  }
  for (std::size_t i = 0; i < n; ++i) {
    (is_test[i] ? test : train).traces.push_back(log.traces[i]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace cfseq
