#include "feast/csv.hpp"

#include "feast/types.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace feast {

std::optional<std::size_t> CsvTable::column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
}

std::size_t CsvTable::require_column(const std::string& name) const {
    auto idx = column(name);
    if (!idx) throw InputError("missing required column '" + name + "'");
    return *idx;
}

namespace {

// State machine over the raw text; emits one record per CSV row.
CsvTable parse_impl(const std::string& text, const std::string& origin) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        // A lone blank line is not a record.
        if (record.size() == 1 && record[0].empty()) {
            record.clear();
            return;
        }
        records.push_back(std::move(record));
        record.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
        case '"':
            if (!field_started || field.empty()) {
                in_quotes = true;
                field_started = true;
            } else {
                field += c;  // stray quote mid-field, keep verbatim
            }
            break;
        case ',':
            end_field();
            break;
        case '\r':
            if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
            end_record();
            break;
        case '\n':
            end_record();
            break;
        default:
            field += c;
            field_started = true;
            break;
        }
    }
    if (in_quotes) throw InputError(origin + ": unterminated quoted field");
    if (field_started || !field.empty() || !record.empty()) end_record();

    CsvTable table;
    if (records.empty()) throw InputError(origin + ": empty file, expected a header row");
    table.header = std::move(records.front());
    table.rows.assign(std::make_move_iterator(records.begin() + 1),
                      std::make_move_iterator(records.end()));
    return table;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_impl(buf.str(), path.string());
}

CsvTable parse_csv(const std::string& text, const std::string& origin) {
    return parse_impl(text, origin);
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

std::string format_double(double v) {
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(buf, "%lf", &back);
        if (back == v) break;
    }
    return buf;
}

}  // namespace feast
