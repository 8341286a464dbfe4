#pragma once

#include <filesystem>
#include <string_view>

namespace flowdiff::data {

/// Writes `bytes` to a sibling temp file and renames it over `path`.
/// Parent directories are created as needed.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace flowdiff::data
