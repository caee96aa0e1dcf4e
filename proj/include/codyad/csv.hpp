#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace codyad {

/// Comma-separated table with a header row. Fields are trimmed; double-quoted
/// fields may contain commas. No embedded newlines.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::size_t> column(std::string_view name) const;
    std::size_t require_column(std::string_view name, const std::string& module) const;
};

/// Throws IoError if the file cannot be opened.
CsvTable read_csv(const std::string& path);

/// Parses a finite or non-finite double; empty/`NA`/`nan` yield NaN. Throws DomainError otherwise.
double parse_double(std::string_view field, std::string_view context);

/// Shortest text that round-trips through parse_double.
std::string format_double(double v);

}  // namespace codyad
