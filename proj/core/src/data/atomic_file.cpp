#include "flowdiff/data/atomic_file.hpp"

#include <fstream>
#include <system_error>

#include "flowdiff/error.hpp"

namespace flowdiff::data {

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail("io", "cannot write '" + tmp.string() + "'");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) fail("io", "short write to '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) fail("io", "cannot rename '" + tmp.string() + "' -> '" + path.string() + "': " + ec.message());
}

}  // namespace flowdiff::data
