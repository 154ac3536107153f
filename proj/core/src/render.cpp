#include "cfseq/render.hpp"

#include <cmath>
#include <set>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "cfseq/errors.hpp"

namespace cfseq {

namespace {

constexpr const char* kGap = "-";

std::string format_value(const AttributeValue& value) {
  if (const auto* d = std::get_if<double>(&value)) {
    return fmt::format("{:.4g}", *d);
  }
  return std::get<std::string>(value);
}

bool same_value(const Event& a, const Event& b, const std::string& name, double tolerance) {
  const auto ia = a.attributes.find(name);
  const auto ib = b.attributes.find(name);
  if (ia == a.attributes.end() || ib == b.attributes.end()) {
    return (ia == a.attributes.end()) == (ib == b.attributes.end());
  }
  const auto* da = std::get_if<double>(&ia->second);
  const auto* db = std::get_if<double>(&ib->second);
  if (da != nullptr && db != nullptr) {
    return std::abs(*da - *db) <= tolerance;
  }
  return ia->second == ib->second;
}

std::string cell(const Event* event, const std::string& name, const Event* other, double tolerance) {
  if (event == nullptr) {
    return kGap;
  }
  const auto it = event->attributes.find(name);
  const std::string text = it == event->attributes.end() ? std::string{} : format_value(it->second);
  const bool changed = other == nullptr || !same_value(*event, *other, name, tolerance);
  return changed && !text.empty() ? fmt::format("**{}**", text) : text;
}

const Event* event_at(const Trace& trace, std::ptrdiff_t index) {
  if (index < 0) {
    return nullptr;
  }
  const auto i = static_cast<std::size_t>(index);
  if (i >= trace.events.size()) {
    throw ArgumentError(fmt::format("alignment index {} outside trace '{}'", index, trace.case_id));
  }
  return &trace.events[i];
}

}  // namespace

std::string render_counterfactual(const Trace& factual, const Trace& counterfactual,
                                  const EditAlignment& alignment, const RenderOptions& options) {
  std::set<std::string> names;
  for (const auto* trace : {&factual, &counterfactual}) {
    for (const auto& event : trace->events) {
      for (const auto& [name, value] : event.attributes) {
        names.insert(name);
      }
    }
  }

  std::string md;
  if (options.factual_probability || options.counterfactual_probability) {
    const auto show = [](const std::optional<double>& p) {
      return p ? fmt::format("{:.4f}", *p) : std::string{"n/a"};
    };
    md += fmt::format("P(outcome = 1): factual {}, counterfactual {}\n\n", show(options.factual_probability),
                      show(options.counterfactual_probability));
  }

  md += "| step | op | factual activity |";
  for (const auto& name : names) {
    md += fmt::format(" {} |", name);
  }
  md += " counterfactual activity |";
  for (const auto& name : names) {
    md += fmt::format(" {} |", name);
  }
  md += "\n|---:|---|---|";
  for (std::size_t i = 0; i < 2 * names.size() + 1; ++i) {
    md += "---|";
  }
  md += '\n';

  std::size_t step = 0;
  const auto row = [&](std::string_view op, const Event* a, const Event* b) {
    md += fmt::format("| {} | {} | {} |", ++step, op, a ? a->activity : kGap);
    for (const auto& name : names) {
      md += fmt::format(" {} |", cell(a, name, b, options.tolerance));
    }
    const bool renamed = a != nullptr && b != nullptr && a->activity != b->activity;
    md += fmt::format(" {} |", b == nullptr ? std::string{kGap}
                                            : (renamed ? fmt::format("**{}**", b->activity) : b->activity));
    for (const auto& name : names) {
      md += fmt::format(" {} |", cell(b, name, a, options.tolerance));
    }
    md += '\n';
  };

  for (const auto& op : alignment.ops) {
    const auto name = to_string(op.kind);
    switch (op.kind) {
      case EditOpKind::Match:
      case EditOpKind::Substitute:
        row(name, event_at(factual, op.a_index), event_at(counterfactual, op.b_index));
        break;
      case EditOpKind::Delete:
        row(name, event_at(factual, op.a_index), nullptr);
        break;
      case EditOpKind::Insert:
        row(name, nullptr, event_at(counterfactual, op.b_index));
        break;
      case EditOpKind::Transpose:
        row(name, event_at(factual, op.a_index), event_at(counterfactual, op.b_index + 1));
        row(name, event_at(factual, op.a_index + 1), event_at(counterfactual, op.b_index));
        break;
    }
  }
  return md;
}

}  // namespace cfseq
