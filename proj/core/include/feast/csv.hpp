#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace feast {

/// A parsed CSV file: header row plus data records.
/// Records keep their 1-based file position (header is record 1) so parse
/// errors can cite the offending row.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::size_t> column(const std::string& name) const;

    /// Column index or InputError naming the missing column.
    std::size_t require_column(const std::string& name) const;
};

/// RFC 4180 reader: quoted fields, doubled quotes, commas and newlines
/// inside quotes, LF or CRLF terminators. Throws InputError.
CsvTable read_csv(const std::filesystem::path& path);

/// Parse CSV from an in-memory string (same rules as read_csv).
CsvTable parse_csv(const std::string& text, const std::string& origin = "<string>");

/// Quote a field if it contains a delimiter, quote, or newline.
std::string csv_escape(const std::string& field);

/// Shortest round-trippable decimal form of a double.
std::string format_double(double v);

}  // namespace feast
