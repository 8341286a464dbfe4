#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flowdiff::data {

/// Header-first CSV table (RFC 4180 quoting, UTF-8).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index of `name`; throws when `required` and absent.
    std::optional<std::size_t> column(std::string_view name, bool required = true) const;
};

CsvTable parse_csv(std::string_view text, const std::string& source = "<memory>");
CsvTable read_csv(const std::filesystem::path& path);

std::string csv_field(std::string_view value);

double parse_double(std::string_view s, std::string_view what);
long long parse_int(std::string_view s, std::string_view what);

/// Seconds since the Unix epoch (UTC). Accepts integer seconds or
/// "YYYY-MM-DD[ T]HH[:MM[:SS]]".
std::int64_t parse_timestamp(std::string_view s);

std::string read_text(const std::filesystem::path& path);

}  // namespace flowdiff::data
