#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "flowdiff/data/dataset.hpp"
#include "flowdiff/flow_tensor.hpp"
#include "flowdiff/ukg/builders.hpp"

namespace flowdiff::data {

/// Grid city whose flow per region and channel c is
///   A (1 + modulation sin(2 pi t / 24 + phase + c pi / 2)
///        + coupling * mean over rook neighbors of the same sine) + noise A eta,
/// clamped at zero. eta is an AR(1) stream across consecutive hours with unit
/// marginal variance (independent when ar_coefficient is 0).
struct SyntheticConfig {
    int num_regions = 8;
    int horizon = 24;
    int num_days = 40;
    std::uint64_t seed = 0;
    double amplitude_min = 10.0;
    double amplitude_max = 100.0;
    double modulation = 0.5;
    double coupling = 0.25;
    double noise = 0.05;
    double ar_coefficient = 0.0;
    int noise_features = 2;
    int channels = 2;
    /// Test split size; negative means num_regions / 4.
    int test_regions = -1;
    int pois_per_region = 6;
    int users = 20;
    int checkins_per_user = 12;
    double cell_degrees = 0.01;

    void validate() const;
};

struct SyntheticTruth {
    std::vector<double> amplitude;
    std::vector<double> phase;
    /// Mean flow per region and channel over a day, equal to the amplitude
    /// when the horizon is a multiple of 24 hours.
    Matrix true_volume;
    std::vector<std::vector<int>> neighbors;
};

struct SyntheticData {
    SyntheticConfig config;
    std::vector<std::string> region_ids;
    std::vector<ukg::RegionGeometry> geometry;
    std::vector<ukg::Poi> pois;
    std::vector<ukg::Checkin> checkins;
    std::vector<std::string> feature_names;
    Matrix raw_features;  // amplitude, cos(phase), sin(phase), then noise columns
    std::vector<std::string> channels;
    std::vector<std::string> day_labels;
    std::vector<std::int64_t> day_starts;  // seconds since the epoch
    std::vector<FlowTensor> days;          // raw
    std::vector<std::string> test_ids;
    SyntheticTruth truth;

    Dataset dataset() const;
    std::string truth_json() const;
};

SyntheticData make_synthetic(const SyntheticConfig& config);

/// flows.csv, features.csv, regions.geojson, pois.csv, checkins.csv,
/// split.txt and ground_truth.json. Requires a 24-step horizon.
void write_synthetic(const SyntheticData& data, const std::filesystem::path& dir);

void write_flow_csv(const std::vector<std::string>& region_ids, const std::vector<std::string>& channels,
                    const std::vector<std::int64_t>& day_starts, const std::vector<FlowTensor>& days,
                    const std::filesystem::path& path);
void write_features_csv(const std::vector<std::string>& region_ids, const std::vector<std::string>& names,
                        const Matrix& features, const std::filesystem::path& path);

}  // namespace flowdiff::data
