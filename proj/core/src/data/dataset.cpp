#include "flowdiff/data/dataset.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "flowdiff/data/atomic_file.hpp"
#include "flowdiff/data/csv.hpp"
#include "flowdiff/error.hpp"
#include "flowdiff/ukg/io.hpp"

namespace flowdiff::data {
namespace {

constexpr std::int64_t kDay = 86400;
constexpr std::int64_t kHour = 3600;
constexpr std::size_t kHoursPerDay = 24;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

}  // namespace

int weekday_of(std::int64_t timestamp) {
    using namespace std::chrono;
    const sys_days day{days{floor_div(timestamp, kDay)}};
    const unsigned iso = weekday{day}.iso_encoding();  // Monday = 1
    return static_cast<int>(iso) - 1;
}

std::string date_label(std::int64_t timestamp) {
    using namespace std::chrono;
    const year_month_day ymd{sys_days{days{floor_div(timestamp, kDay)}}};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::vector<std::string> Dataset::ids(const std::vector<std::size_t>& regions) const {
    std::vector<std::string> out;
    for (auto r : regions) out.push_back(region_ids.at(r));
    return out;
}

Matrix Dataset::features_of(const std::vector<std::size_t>& regions) const {
    Matrix m(static_cast<Eigen::Index>(regions.size()), features.cols());
    for (std::size_t i = 0; i < regions.size(); ++i) {
        m.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(regions[i]));
    }
    return m;
}

std::vector<FlowTensor> Dataset::raw_days(const std::vector<std::size_t>& regions) const {
    std::vector<FlowTensor> out;
    for (const auto& d : days) out.push_back(d.select_regions(regions));
    return out;
}

std::vector<FlowTensor> Dataset::normalized_days(const std::vector<std::size_t>& regions) const {
    auto out = raw_days(regions);
    for (auto& d : out) {
        for (double& v : d.values()) v = (v - flow_norm.mean) / flow_norm.std;
        d.set_space(FlowSpace::Normalized);
    }
    return out;
}

std::string Dataset::to_json() const {
    nlohmann::json j;
    j["region_ids"] = region_ids;
    j["feature_names"] = feature_names;
    std::vector<std::vector<double>> feats;
    for (Eigen::Index r = 0; r < features.rows(); ++r) {
        feats.emplace_back(features.row(r).data(), features.row(r).data() + features.cols());
    }
    j["features"] = feats;
    j["feature_stats"] = {{"mean", feature_stats.mean}, {"std", feature_stats.std}};
    j["channels"] = channels;
    j["day_labels"] = day_labels;
    std::vector<std::vector<double>> day_values;
    for (const auto& d : days) day_values.push_back(d.storage());
    j["days"] = day_values;
    j["train_regions"] = train_regions;
    j["test_regions"] = test_regions;
    j["flow_norm"] = {{"mean", flow_norm.mean}, {"std", flow_norm.std}};
    j["dropped_days"] = dropped_days;
    return j.dump();
}

Dataset assemble_dataset(std::vector<std::string> region_ids, std::vector<std::string> feature_names,
                         const Matrix& raw_features, std::vector<std::string> channels,
                         std::vector<std::string> day_labels, std::vector<FlowTensor> days,
                         const std::vector<std::string>& test_ids) {
    const std::size_t R = region_ids.size();
    if (R == 0) fail("data", "dataset has no regions");
    if (static_cast<std::size_t>(raw_features.rows()) != R) fail("data", "feature rows do not match regions");
    if (static_cast<std::size_t>(raw_features.cols()) != feature_names.size()) {
        fail("data", "feature names do not match feature columns");
    }
    if (day_labels.size() != days.size()) fail("data", "day labels do not match days");
    for (const auto& d : days) {
        if (d.regions() != R || d.channels() != channels.size()) fail("data", "day tensor shape mismatch");
        if (!d.same_shape(days.front())) fail("data", "days differ in shape");
        for (double v : d.values()) {
            if (!std::isfinite(v) || v < 0.0) fail("data", "raw flow must be finite and non-negative");
        }
    }

    Dataset ds;
    ds.region_ids = std::move(region_ids);
    ds.feature_names = std::move(feature_names);
    ds.channels = std::move(channels);
    ds.day_labels = std::move(day_labels);
    ds.days = std::move(days);
    for (auto& d : ds.days) d.set_space(FlowSpace::Raw);

    const auto cols = raw_features.cols();
    ds.features.resize(static_cast<Eigen::Index>(R), cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        const double mean = raw_features.col(c).mean();
        const double var = (raw_features.col(c).array() - mean).square().mean();
        const double sd = std::sqrt(var);
        ds.feature_stats.mean.push_back(mean);
        ds.feature_stats.std.push_back(sd);
        ds.features.col(c) = (raw_features.col(c).array() - mean) / std::max(sd, kStdGuard);
    }

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < R; ++i) {
        if (!index.emplace(ds.region_ids[i], i).second) fail("data", "duplicate region id '" + ds.region_ids[i] + "'");
    }
    std::set<std::size_t> test;
    for (const auto& id : test_ids) {
        auto it = index.find(id);
        if (it == index.end()) fail("data", "split lists unknown region '" + id + "'");
        test.insert(it->second);
    }
    for (std::size_t i = 0; i < R; ++i) (test.count(i) ? ds.test_regions : ds.train_regions).push_back(i);
    if (ds.train_regions.empty()) fail("data", "split leaves no training regions");

    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (const auto& d : ds.days) {
        for (auto r : ds.train_regions) {
            for (std::size_t t = 0; t < d.horizon(); ++t) {
                for (std::size_t c = 0; c < d.channels(); ++c) {
                    sum += d(r, t, c);
                    ++n;
                }
            }
        }
    }
    if (n > 0) {
        const double mean = sum / static_cast<double>(n);
        for (const auto& d : ds.days) {
            for (auto r : ds.train_regions) {
                for (std::size_t t = 0; t < d.horizon(); ++t) {
                    for (std::size_t c = 0; c < d.channels(); ++c) sq += (d(r, t, c) - mean) * (d(r, t, c) - mean);
                }
            }
        }
        ds.flow_norm.mean = mean;
        ds.flow_norm.std = std::max(std::sqrt(sq / static_cast<double>(n)), kStdGuard);
    }
    return ds;
}

std::vector<std::string> read_split(const std::filesystem::path& split_file) {
    std::istringstream in(read_text(split_file));
    std::vector<std::string> ids;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto b = line.find_first_not_of(" \t");
        if (b == std::string::npos || line[b] == '#') continue;
        line = line.substr(b, line.find_last_not_of(" \t") - b + 1);
        if (first && line == "region_id") {
            first = false;
            continue;
        }
        first = false;
        ids.push_back(line);
    }
    return ids;
}

void write_split(const std::vector<std::string>& test_ids, const std::filesystem::path& split_file) {
    std::string text = "region_id\n";
    for (const auto& id : test_ids) text += id + "\n";
    write_file_atomic(split_file, text);
}

Dataset ingest(const std::filesystem::path& flow_csv, const std::filesystem::path& features_csv,
               const std::filesystem::path& geo_file, const std::filesystem::path& split_file) {
    std::set<std::string> geometry_ids;
    for (const auto& g : ukg::read_geojson(geo_file)) geometry_ids.insert(g.id);

    const auto feat_table = read_csv(features_csv);
    const auto id_col = *feat_table.column("region_id");
    std::vector<std::string> feature_names;
    std::vector<std::size_t> feature_cols;
    for (std::size_t c = 0; c < feat_table.header.size(); ++c) {
        if (c == id_col) continue;
        feature_names.push_back(feat_table.header[c]);
        feature_cols.push_back(c);
    }
    std::map<std::string, std::vector<double>> feature_rows;
    for (const auto& row : feat_table.rows) {
        std::vector<double> v;
        for (auto c : feature_cols) v.push_back(parse_double(row[c], feat_table.header[c]));
        if (!feature_rows.emplace(row[id_col], std::move(v)).second) {
            fail("data", "features list region '" + row[id_col] + "' twice");
        }
    }

    const auto flow = read_csv(flow_csv);
    const auto rc = *flow.column("region_id");
    const auto tc = *flow.column("timestamp");
    const auto cc = *flow.column("channel");
    const auto vc = *flow.column("value");
    struct Row {
        std::string region;
        std::int64_t day;
        std::size_t hour;
        std::string channel;
        double value;
    };
    std::vector<Row> rows;
    std::set<std::string> region_set, channel_set;
    for (const auto& row : flow.rows) {
        const auto& region = row[rc];
        if (!geometry_ids.count(region)) fail("data", "flow region '" + region + "' is not in the geometry file");
        const auto ts = parse_timestamp(row[tc]);
        if (floor_div(ts, kHour) * kHour != ts) fail("data", "timestamp '" + row[tc] + "' is not on the hour");
        const double value = parse_double(row[vc], "value");
        if (!std::isfinite(value) || value < 0.0) {
            fail("data", "flow value for region '" + region + "' at '" + row[tc] + "' must be finite and >= 0");
        }
        const std::int64_t day = floor_div(ts, kDay);
        rows.push_back({region, day, static_cast<std::size_t>((ts - day * kDay) / kHour), row[cc], value});
        region_set.insert(region);
        channel_set.insert(row[cc]);
    }
    std::vector<std::string> regions(region_set.begin(), region_set.end());
    std::sort(regions.begin(), regions.end(), [](const auto& a, const auto& b) { return ukg::id_less(a, b); });
    std::vector<std::string> channels(channel_set.begin(), channel_set.end());
    std::map<std::string, std::size_t> rix, cix;
    for (std::size_t i = 0; i < regions.size(); ++i) rix[regions[i]] = i;
    for (std::size_t i = 0; i < channels.size(); ++i) cix[channels[i]] = i;

    Matrix raw_features(static_cast<Eigen::Index>(regions.size()), static_cast<Eigen::Index>(feature_names.size()));
    for (std::size_t i = 0; i < regions.size(); ++i) {
        auto it = feature_rows.find(regions[i]);
        if (it == feature_rows.end()) fail("data", "region '" + regions[i] + "' has no features");
        for (std::size_t c = 0; c < feature_names.size(); ++c) {
            raw_features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = it->second[c];
        }
    }

    struct DayBuffer {
        FlowTensor values;
        std::vector<char> seen;
    };
    std::map<std::int64_t, DayBuffer> by_day;
    const std::size_t R = regions.size(), F = channels.size();
    for (const auto& row : rows) {
        auto [it, fresh] = by_day.try_emplace(row.day);
        if (fresh) {
            it->second.values = FlowTensor(R, kHoursPerDay, F, 0.0, FlowSpace::Raw);
            it->second.seen.assign(R * kHoursPerDay * F, 0);
        }
        const std::size_t r = rix[row.region], c = cix[row.channel];
        const std::size_t k = (r * kHoursPerDay + row.hour) * F + c;
        if (it->second.seen[k]) {
            fail("data", "duplicate flow row for region '" + row.region + "' channel '" + row.channel + "' on " +
                             date_label(row.day * kDay));
        }
        it->second.seen[k] = 1;
        it->second.values(r, row.hour, c) = row.value;
    }

    std::vector<FlowTensor> days;
    std::vector<std::string> labels, dropped;
    std::size_t weekend = 0;
    for (auto& [day, buf] : by_day) {
        const std::int64_t ts = day * kDay;
        if (weekday_of(ts) >= 5) {
            ++weekend;
            continue;
        }
        if (std::find(buf.seen.begin(), buf.seen.end(), 0) != buf.seen.end()) {
            dropped.push_back(date_label(ts));
            continue;
        }
        labels.push_back(date_label(ts));
        days.push_back(std::move(buf.values));
    }
    if (weekend > 0) spdlog::info("data: skipped {} weekend day(s)", weekend);
    if (!dropped.empty()) spdlog::warn("data: dropped {} day(s) with missing hours", dropped.size());

    auto ds = assemble_dataset(std::move(regions), std::move(feature_names), raw_features, std::move(channels),
                               std::move(labels), std::move(days), read_split(split_file));
    ds.dropped_days = std::move(dropped);
    return ds;
}

}  // namespace flowdiff::data
