#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ensopon::csv {

/// A header-first comma-delimited table. Quoted fields follow RFC 4180.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Case- and whitespace-insensitive header lookup.
    std::optional<size_t> column(std::string_view name) const;
};

Table parse(std::string_view text);
Table read_file(const std::filesystem::path& path);

/// Quotes a field if it contains a delimiter, quote, or newline.
std::string escape(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest round-trippable decimal representation.
std::string format_double(double v);

std::string normalize_name(std::string_view name);
std::string_view trim(std::string_view s);
std::optional<double> parse_double(std::string_view s);

}  // namespace ensopon::csv
