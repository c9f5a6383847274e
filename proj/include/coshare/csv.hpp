#pragma once

// Minimal delimiter-separated reader/writer. Fields may be double-quoted;
// quoted fields can contain the delimiter, doubled quotes and newlines.

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "coshare/error.hpp"

namespace coshare::csv {

struct Row {
    std::size_t line = 0; // 1-based line where the record starts
    std::vector<std::string> fields;
};

/// Reads one record. Returns nullopt at end of input.
inline std::optional<Row> read_row(std::istream& in, std::size_t& line, char delim = ',') {
    if (in.peek() == std::char_traits<char>::eof())
        return std::nullopt;
    Row row;
    row.line = ++line;
    std::string field;
    bool quoted = false;
    bool field_was_quoted = false;
    char c;
    while (in.get(c)) {
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n')
                    ++line;
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && field.empty() && !field_was_quoted) {
            quoted = true;
            field_was_quoted = true;
        } else if (c == delim) {
            row.fields.push_back(std::move(field));
            field.clear();
            field_was_quoted = false;
        } else if (c == '\n') {
            break;
        } else if (c == '\r') {
            if (in.peek() == '\n')
                continue;
            break;
        } else {
            field.push_back(c);
        }
    }
    if (quoted)
        throw InputError("unterminated quoted field starting at line " + std::to_string(row.line));
    row.fields.push_back(std::move(field));
    return row;
}

inline bool is_blank(const Row& r) {
    return r.fields.size() == 1 && r.fields[0].find_first_not_of(" \t") == std::string::npos;
}

/// Header-indexed reader over a whole stream.
class Table {
  public:
    explicit Table(std::istream& in, char delim = ',') {
        std::size_t line = 0;
        auto header = read_row(in, line, delim);
        if (!header || is_blank(*header))
            throw InputError("missing header row");
        for (std::size_t i = 0; i < header->fields.size(); ++i) {
            std::string name = header->fields[i];
            if (i == 0 && name.rfind("\xEF\xBB\xBF", 0) == 0)
                name.erase(0, 3);
            while (!name.empty() && (name.back() == ' ' || name.back() == '\t'))
                name.pop_back();
            while (!name.empty() && (name.front() == ' ' || name.front() == '\t'))
                name.erase(name.begin());
            columns_[name] = i;
        }
        width_ = header->fields.size();
        while (auto r = read_row(in, line, delim)) {
            if (is_blank(*r))
                continue;
            rows_.push_back(std::move(*r));
        }
    }

    [[nodiscard]] bool has_column(std::string_view name) const {
        return columns_.count(std::string(name)) != 0;
    }

    [[nodiscard]] std::size_t column(std::string_view name) const {
        auto it = columns_.find(std::string(name));
        if (it == columns_.end())
            throw InputError("line 1: missing required column '" + std::string(name) + "'");
        return it->second;
    }

    [[nodiscard]] const std::vector<Row>& rows() const { return rows_; }
    [[nodiscard]] std::size_t width() const { return width_; }

    /// Field access that reports the offending line when the row is short.
    [[nodiscard]] static const std::string& field(const Row& r, std::size_t col) {
        if (col >= r.fields.size())
            throw InputError("line " + std::to_string(r.line) + ": expected at least " +
                             std::to_string(col + 1) + " fields, found " +
                             std::to_string(r.fields.size()));
        return r.fields[col];
    }

  private:
    std::map<std::string, std::size_t> columns_;
    std::vector<Row> rows_;
    std::size_t width_ = 0;
};

inline std::string quote(std::string_view s, char delim = ',') {
    if (s.find_first_of(std::string{delim, '"', '\n', '\r'}) == std::string_view::npos)
        return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += "\"\"";
        else
            out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline void write_row(std::ostream& out, const std::vector<std::string>& fields, char delim = ',') {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i)
            out.put(delim);
        out << quote(fields[i], delim);
    }
    out.put('\n');
}

} // namespace coshare::csv
