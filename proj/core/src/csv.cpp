#include "archint/csv.hpp"

#include "archint/error.hpp"

namespace archint::csv {

std::vector<Row> parse(std::string_view text, char delimiter) {
    std::vector<Row> rows;
    if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

    Row current;
    std::string cell;
    bool in_quotes = false;
    bool row_has_content = false;
    std::size_t line = 1;
    current.line = 1;

    auto end_cell = [&] {
        current.cells.push_back(std::move(cell));
        cell.clear();
    };
    auto end_row = [&] {
        end_cell();
        if (row_has_content) rows.push_back(std::move(current));
        current = Row{};
        row_has_content = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                cell.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            in_quotes = true;
            row_has_content = true;
        } else if (c == delimiter) {
            row_has_content = true;
            end_cell();
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            end_row();
            ++line;
            current.line = line;
        } else {
            row_has_content = true;
            cell.push_back(c);
        }
    }
    if (in_quotes)
        throw Error("csv-parse-error", "unterminated quoted cell starting near line " + std::to_string(current.line),
                    {{"line", current.line}});
    end_row();
    return rows;
}

std::string escape_cell(std::string_view cell, char delimiter) {
    bool needs_quotes = cell.find_first_of(std::string{'"', '\n', '\r', delimiter}) != std::string_view::npos;
    if (!needs_quotes) return std::string(cell);
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string format_row(const std::vector<std::string>& cells, char delimiter) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out.push_back(delimiter);
        out += escape_cell(cells[i], delimiter);
    }
    out.push_back('\n');
    return out;
}

}  // namespace archint::csv
