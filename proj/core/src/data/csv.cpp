#include "flowdiff/data/csv.hpp"

#include <charconv>
#include <chrono>
#include <fstream>
#include <sstream>

#include "flowdiff/error.hpp"

namespace flowdiff::data {

std::optional<std::size_t> CsvTable::column(std::string_view name, bool required) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    if (required) fail("data", "CSV is missing required column '" + std::string(name) + "'");
    return std::nullopt;
}

CsvTable parse_csv(std::string_view text, const std::string& source) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    std::size_t i = 0;
    if (text.starts_with("\xEF\xBB\xBF")) i = 3;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
        record.clear();
    };

    for (; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && !field_started) {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            end_record();
        } else if (c == '\r') {
            // tolerate CRLF
        } else {
            field.push_back(c);
            field_started = true;
        }
    }
    if (quoted) fail("data", source + ": unterminated quoted field");
    if (!field.empty() || !record.empty()) end_record();

    if (records.empty()) fail("data", source + ": missing header row");
    CsvTable table;
    table.header = std::move(records.front());
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != table.header.size()) {
            fail("data", source + ": row " + std::to_string(r + 1) + " has " +
                             std::to_string(records[r].size()) + " fields, header has " +
                             std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(records[r]));
    }
    return table;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("data", "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CsvTable read_csv(const std::filesystem::path& path) {
    return parse_csv(read_text(path), path.string());
}

std::string csv_field(std::string_view value) {
    if (value.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(value);
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

double parse_double(std::string_view s, std::string_view what) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        fail("data", "invalid number '" + std::string(s) + "' for " + std::string(what));
    }
    return v;
}

long long parse_int(std::string_view s, std::string_view what) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        fail("data", "invalid integer '" + std::string(s) + "' for " + std::string(what));
    }
    return v;
}

std::int64_t parse_timestamp(std::string_view s) {
    if (!s.empty() && s.find('-') == std::string_view::npos) {
        return parse_int(s, "timestamp");
    }
    auto num = [&](std::size_t pos, std::size_t len) -> int {
        if (pos + len > s.size()) fail("data", "malformed timestamp '" + std::string(s) + "'");
        return static_cast<int>(parse_int(s.substr(pos, len), "timestamp"));
    };
    // YYYY-MM-DD[ T]HH[:MM[:SS]]
    if (s.size() < 10 || s[4] != '-' || s[7] != '-') {
        fail("data", "malformed timestamp '" + std::string(s) + "'");
    }
    const int y = num(0, 4), mo = num(5, 2), d = num(8, 2);
    int hh = 0, mm = 0, ss = 0;
    if (s.size() > 10) {
        if (s[10] != ' ' && s[10] != 'T') fail("data", "malformed timestamp '" + std::string(s) + "'");
        hh = num(11, 2);
        if (s.size() > 13) mm = num(14, 2);
        if (s.size() > 16) ss = num(17, 2);
    }
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60) {
        fail("data", "invalid date in timestamp '" + std::string(s) + "'");
    }
    const sys_seconds t = sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss};
    return t.time_since_epoch().count();
}

}  // namespace flowdiff::data
