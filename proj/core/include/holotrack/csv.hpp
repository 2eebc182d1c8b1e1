#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace holotrack::csv {

/// Shortest representation that round-trips through from_chars.
std::string format_number(double v);
/// Empty string for std::nullopt (undefined metrics serialize as empty cells).
std::string format_optional(const std::optional<double>& v);

std::vector<std::string> split_line(std::string_view line);

/// A parsed CSV file. The first non-empty line is the header.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name; throws DataError if absent.
    std::size_t column(std::string_view name) const;
};

Table read(const std::filesystem::path& path);

double parse_double(const std::string& field, const std::filesystem::path& file, std::size_t line);
long long parse_int(const std::string& field, const std::filesystem::path& file, std::size_t line);

}  // namespace holotrack::csv
