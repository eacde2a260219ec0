#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace instsupp::csv {

using Row = std::vector<std::string>;

/// RFC 4180 reader: quoted fields, doubled quotes, CRLF or LF line ends.
std::vector<Row> parse(std::string_view text);

/// Quotes a field only when it contains a comma, quote, newline, or
/// leading/trailing whitespace.
std::string escape(std::string_view field);
std::string format_row(const Row& row);

/// Shortest text that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

}  // namespace instsupp::csv
