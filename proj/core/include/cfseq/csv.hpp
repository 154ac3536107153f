#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace cfseq::csv {

/// RFC 4180 style reader: quoted fields, doubled quotes, CRLF tolerant.
/// Returns one vector of fields per non-empty record.
std::vector<std::vector<std::string>> read_rows(std::istream& in);

/// Quotes a field when it contains a separator, quote or newline.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string>& fields);

}  // namespace cfseq::csv
