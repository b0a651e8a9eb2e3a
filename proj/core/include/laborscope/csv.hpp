#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace laborscope::csv {

/// Splits one CSV record (RFC 4180 quoting, no embedded newlines).
std::vector<std::string> split_line(std::string_view line, char delim = ',');

/// Quotes a field only when it contains the delimiter, a quote or whitespace edges.
std::string escape(std::string_view field, char delim = ',');

std::string join(const std::vector<std::string>& fields, char delim = ',');

/// Reads the next non-empty line, stripping a trailing '\r' and a leading UTF-8 BOM
/// on the first line. Returns nullopt at EOF.
std::optional<std::string> next_line(std::istream& in, bool& first_line);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

/// Parses a real number, accepting thousands separators ("1,234.5").
std::optional<double> parse_number(std::string_view text);

std::string trim(std::string_view text);

}  // namespace laborscope::csv
