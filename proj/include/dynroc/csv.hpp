#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dynroc::csv {

/// A parsed CSV table. The header row is mandatory; `line` numbers are 1-based
/// file lines so diagnostics can point at the offending row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line;

  /// Index of a header column, if present.
  std::optional<std::size_t> column(std::string_view name) const;
};

Table read(std::istream& in, std::string_view source);
Table read_file(const std::string& path);

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);

std::optional<double> parse_double(std::string_view text);

std::string join(const std::vector<std::string>& fields);

}  // namespace dynroc::csv
