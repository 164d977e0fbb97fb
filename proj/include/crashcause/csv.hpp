#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace crashcause::csv {

// RFC 4180-ish CSV: quoted fields, embedded commas/newlines/"" escapes.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> row_lines;  // 1-based source line of each row

    std::size_t column(const std::string& name) const;  // throws ParseError
    const std::string& at(std::size_t row, const std::string& name) const;
};

Table parse(std::string_view text);
Table load(const std::string& path);

// Requires that every named column exists; error message lists what is missing.
void require_columns(const Table& t, const std::vector<std::string>& names,
                     const std::string& context);

std::string escape(std::string_view field);
std::string write_row(const std::vector<std::string>& fields);

}  // namespace crashcause::csv
