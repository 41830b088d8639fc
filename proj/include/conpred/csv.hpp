#pragma once

#include "conpred/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace conpred {

// Minimal comma-separated reader: no quoting, header row required.
struct csv_table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> lines;  // 1-based source line of each row

    [[nodiscard]] std::optional<std::size_t> find_column(std::string_view name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            return std::nullopt;
        }
        return static_cast<std::size_t>(it - header.begin());
    }

    [[nodiscard]] std::size_t column(std::string_view name) const {
        if (const auto c = find_column(name)) {
            return *c;
        }
        throw parse_error(1, "missing column '" + std::string(name) + "'");
    }

    [[nodiscard]] std::size_t line_of(std::size_t row) const { return lines[row]; }
};

/// Quotes a field for writing when it holds a comma or quote.
inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) {
        return std::string(s);
    }
    std::string out = "\"";
    for (const char c : s) {
        out += c == '"' ? "\"\"" : std::string(1, c);
    }
    return out + "\"";
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        std::string_view field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) {
            field.remove_prefix(1);
        }
        while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
            field.remove_suffix(1);
        }
        fields.emplace_back(field);
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return fields;
}

inline csv_table parse_csv(std::istream &in) {
    csv_table table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        auto fields = split_csv_line(line);
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw parse_error(line_no, "expected " + std::to_string(table.header.size()) + " fields, found " + std::to_string(fields.size()));
        }
        table.rows.push_back(std::move(fields));
        table.lines.push_back(line_no);
    }
    if (!have_header) {
        throw empty_file_error("empty CSV input");
    }
    return table;
}

inline csv_table read_csv(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw data_error("cannot open '" + path + "'");
    }
    return parse_csv(in);
}

inline double parse_double(std::string_view s, std::size_t line, std::string_view what) {
    double v = 0.0;
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        throw parse_error(line, "non-numeric " + std::string(what) + " '" + std::string(s) + "'");
    }
    return v;
}

inline long parse_long(std::string_view s, std::size_t line, std::string_view what) {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        throw parse_error(line, "non-integer " + std::string(what) + " '" + std::string(s) + "'");
    }
    return v;
}

}  // namespace conpred
