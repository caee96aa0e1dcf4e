#include "codyad/csv.hpp"

#include "codyad/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>

namespace codyad {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.emplace_back(trim(field));
            field.clear();
        } else {
            field += c;
        }
    }
    out.emplace_back(trim(field));
    return out;
}

}  // namespace

std::optional<std::size_t> CsvTable::column(std::string_view name) const {
    for (std::size_t c = 0; c < header.size(); ++c)
        if (header[c] == name) return c;
    return std::nullopt;
}

std::size_t CsvTable::require_column(std::string_view name, const std::string& module) const {
    if (auto c = column(name)) return *c;
    throw ValidationError(module, "missing required column '" + std::string(name) + "'");
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("io", "cannot open '" + path + "'");
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (first) {
            // UTF-8 byte order mark
            if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
            table.header = split_line(line);
            first = false;
            continue;
        }
        if (trim(line).empty()) continue;
        auto fields = split_line(line);
        if (fields.size() != table.header.size())
            throw IoError("io", path + ": row " + std::to_string(table.rows.size() + 2) + " has " +
                                    std::to_string(fields.size()) + " fields, header has " +
                                    std::to_string(table.header.size()));
        table.rows.push_back(std::move(fields));
    }
    if (first) throw IoError("io", "'" + path + "' is empty");
    return table;
}

double parse_double(std::string_view field, std::string_view context) {
    field = trim(field);
    if (field.empty() || field == "NA" || field == "nan" || field == "NaN")
        return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const char* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (ec != std::errc() || ptr != end)
        throw DomainError("io", std::string(context) + ": cannot parse '" + std::string(field) + "' as a number");
    return v;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "NA";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

}  // namespace codyad
