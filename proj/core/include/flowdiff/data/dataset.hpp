#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "flowdiff/flow_tensor.hpp"

namespace flowdiff::data {

struct FlowNormalization {
    double mean = 0.0;
    double std = 1.0;
};

struct FeatureNormalization {
    std::vector<double> mean;
    std::vector<double> std;  // population std, before the 1e-8 guard
};

inline constexpr double kStdGuard = 1e-8;

struct Dataset {
    std::vector<std::string> region_ids;
    std::vector<std::string> feature_names;
    Matrix features;  // regions x features, z-scored across regions
    FeatureNormalization feature_stats;
    std::vector<std::string> channels;
    std::vector<std::string> day_labels;  // YYYY-MM-DD
    std::vector<FlowTensor> days;         // raw flow, one tensor per kept weekday
    std::vector<std::size_t> train_regions;
    std::vector<std::size_t> test_regions;
    FlowNormalization flow_norm;  // from train regions only
    std::vector<std::string> dropped_days;

    std::size_t horizon() const { return days.empty() ? 0 : days.front().horizon(); }
    std::vector<std::string> ids(const std::vector<std::size_t>& regions) const;
    Matrix features_of(const std::vector<std::size_t>& regions) const;
    /// Raw days restricted to `regions`.
    std::vector<FlowTensor> raw_days(const std::vector<std::size_t>& regions) const;
    /// Z-scored days restricted to `regions`.
    std::vector<FlowTensor> normalized_days(const std::vector<std::size_t>& regions) const;

    /// Deterministic JSON text of every field.
    std::string to_json() const;
};

/// Builds a dataset from in-memory parts. `test_ids` selects the test split;
/// all other regions train.
Dataset assemble_dataset(std::vector<std::string> region_ids, std::vector<std::string> feature_names,
                         const Matrix& raw_features, std::vector<std::string> channels,
                         std::vector<std::string> day_labels, std::vector<FlowTensor> days,
                         const std::vector<std::string>& test_ids);

/// Flow CSV (region_id, timestamp, channel, value), features CSV (region_id +
/// numeric columns), region GeoJSON and a split file listing test region ids.
/// Days are 24 hourly steps (UTC). Weekends are dropped, as are days with any
/// missing hour.
Dataset ingest(const std::filesystem::path& flow_csv, const std::filesystem::path& features_csv,
               const std::filesystem::path& geo_file, const std::filesystem::path& split_file);

std::vector<std::string> read_split(const std::filesystem::path& split_file);
void write_split(const std::vector<std::string>& test_ids, const std::filesystem::path& split_file);

/// 0 = Monday ... 6 = Sunday for seconds since the epoch (UTC).
int weekday_of(std::int64_t timestamp);
std::string date_label(std::int64_t timestamp);

}  // namespace flowdiff::data
