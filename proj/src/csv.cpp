#include "crashcause/csv.hpp"

#include <algorithm>

#include "crashcause/util.hpp"

namespace crashcause::csv {

namespace {

struct Cursor {
    std::string_view text;
    std::size_t pos = 0;
    std::size_t line = 1;

    bool done() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }
    char take() {
        const char c = text[pos++];
        if (c == '\n') ++line;
        return c;
    }
};

// Parses one record; returns false at end of input.
bool parse_record(Cursor& cur, std::vector<std::string>& out, std::size_t& line_out) {
    out.clear();
    // skip blank lines
    while (!cur.done() && (cur.peek() == '\n' || cur.peek() == '\r')) cur.take();
    if (cur.done()) return false;
    line_out = cur.line;
    std::string field;
    bool in_quotes = false;
    while (true) {
        if (cur.done()) {
            out.push_back(std::move(field));
            if (in_quotes) throw ParseError("csv: unterminated quote at line " + std::to_string(line_out));
            return true;
        }
        const char c = cur.take();
        if (in_quotes) {
            if (c == '"') {
                if (!cur.done() && cur.peek() == '"') {
                    field.push_back('"');
                    cur.take();
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            out.push_back(std::move(field));
            return true;
        } else {
            field.push_back(c);
        }
    }
}

}  // namespace

std::size_t Table::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError("csv: no column named '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

const std::string& Table::at(std::size_t row, const std::string& name) const {
    return rows.at(row).at(column(name));
}

Table parse(std::string_view text) {
    Table t;
    Cursor cur{text};
    std::size_t line = 0;
    if (!parse_record(cur, t.header, line)) {
        throw ParseError("csv: empty input (missing header row)");
    }
    std::vector<std::string> row;
    while (parse_record(cur, row, line)) {
        if (row.size() != t.header.size()) {
            throw ParseError("csv: line " + std::to_string(line) + " has " +
                             std::to_string(row.size()) + " fields, expected " +
                             std::to_string(t.header.size()));
        }
        t.rows.push_back(row);
        t.row_lines.push_back(line);
    }
    return t;
}

Table load(const std::string& path) {
    try {
        return parse(read_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void require_columns(const Table& t, const std::vector<std::string>& names,
                     const std::string& context) {
    std::string missing;
    for (const auto& n : names) {
        if (std::find(t.header.begin(), t.header.end(), n) == t.header.end()) {
            if (!missing.empty()) missing += ", ";
            missing += n;
        }
    }
    if (!missing.empty()) {
        throw ParseError(context + ": missing column(s): " + missing);
    }
}

std::string escape(std::string_view field) {
    const bool needs_quotes =
        field.find_first_of(",\"\n\r") != std::string_view::npos;
    if (!needs_quotes) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

std::string write_row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += escape(fields[i]);
    }
    out.push_back('\n');
    return out;
}

}  // namespace crashcause::csv
