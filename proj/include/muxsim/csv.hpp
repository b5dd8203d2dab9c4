#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace muxsim::csv {

/// RFC 4180 quoting: fields containing a comma, quote, CR or LF are quoted,
/// embedded quotes doubled. Rows end with CRLF-free "\n".
std::string quote(std::string_view field);

/// Shortest-stable numeric text ("%.12g"); empty string for nullopt.
std::string number(double value);
std::string number(std::optional<double> value);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws ParseError if absent.
  std::size_t column(std::string_view name) const;
};

/// Parses RFC 4180 text with one header row.
Table parse(std::string_view text);

}  // namespace muxsim::csv
