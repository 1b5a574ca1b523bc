#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace archint::csv {

/// One parsed row plus the 1-based physical line it started on.
struct Row {
    std::vector<std::string> cells;
    std::size_t line = 0;
};

/// RFC 4180 reader: quoted cells may contain the delimiter, doubled quotes
/// and line breaks. Blank lines are skipped. Throws Error{"csv-parse-error"}
/// on an unterminated quote.
std::vector<Row> parse(std::string_view text, char delimiter = ',');

/// Quotes the cell only when needed.
std::string escape_cell(std::string_view cell, char delimiter = ',');
/// One line including the trailing newline.
std::string format_row(const std::vector<std::string>& cells, char delimiter = ',');

}  // namespace archint::csv
