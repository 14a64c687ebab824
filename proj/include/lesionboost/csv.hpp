#pragma once
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "lesionboost/errors.hpp"

namespace lesionboost {

// Comma-delimited, UTF-8, first row is the header. Quoted fields may contain
// commas, doubled quotes and newlines.
struct csv_table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::optional<size_t> find(const std::string& name) const {
        for (size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        return std::nullopt;
    }

    size_t require(const std::string& name) const {
        auto idx = find(name);
        if (!idx) throw schema_error("missing required column '" + name + "'");
        return *idx;
    }
};

inline csv_table parse_csv(const std::string& text, const std::string& origin = "<string>") {
    csv_table table;
    std::vector<std::string> row;
    std::string cell;
    bool quoted = false;
    bool row_has_data = false;

    auto end_cell = [&] {
        row.push_back(std::move(cell));
        cell.clear();
    };
    auto end_row = [&] {
        end_cell();
        if (table.header.empty()) {
            table.header = std::move(row);
        } else {
            if (row.size() != table.header.size()) {
                throw io_error(origin + ": row " + std::to_string(table.rows.size() + 1) +
                               " has " + std::to_string(row.size()) + " cells, expected " +
                               std::to_string(table.header.size()));
            }
            table.rows.push_back(std::move(row));
        }
        row.clear();
        row_has_data = false;
    };

    for (size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"': quoted = true; row_has_data = true; break;
            case ',': end_cell(); row_has_data = true; break;
            case '\r': break;
            case '\n':
                if (row_has_data || !cell.empty() || !row.empty()) end_row();
                break;
            default: cell.push_back(c); row_has_data = true; break;
        }
    }
    if (quoted) throw io_error(origin + ": unterminated quoted field");
    if (row_has_data || !cell.empty() || !row.empty()) end_row();
    if (table.header.empty()) throw io_error(origin + ": empty file");
    return table;
}

inline csv_table read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), path);
}

inline std::string csv_escape(const std::string& field) {
    bool needs_quotes = field.find_first_of(",\"\n\r") != std::string::npos;
    if (!needs_quotes) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write '" + path + "'");
    auto emit = [&](const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) out << ',';
            out << csv_escape(cells[i]);
        }
        out << '\n';
    };
    emit(header);
    for (const auto& r : rows) emit(r);
}

// Locale-independent double parse. Empty or unparseable input -> nullopt.
inline std::optional<double> parse_double(std::string_view s) {
    size_t b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return std::nullopt;
    size_t e = s.find_last_not_of(" \t");
    s = s.substr(b, e - b + 1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    if (!std::isfinite(value)) return std::nullopt;
    return value;
}

inline std::string format_double(double v, int precision = 10) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    return buf;
}

} // namespace lesionboost
