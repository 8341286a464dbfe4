#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "flowdiff/flow_tensor.hpp"

namespace flowdiff::diffusion {

struct SampleMetadata {
    std::uint64_t seed = 0;
    int steps = 0;
    double beta_start = 0.0;
    double beta_end = 0.0;
    double flow_mean = 0.0;
    double flow_std = 1.0;
    std::vector<std::string> region_ids;
    std::vector<std::string> channels;
    FlowSpace space = FlowSpace::Raw;
};

/// Writes a gzip-compressed .npy float64 array shaped
/// (samples, regions, horizon, channels) to `path` and the metadata to
/// `path` with its extension chain replaced by ".json".
void write_samples(const std::filesystem::path& path, const std::vector<FlowTensor>& samples,
                   const SampleMetadata& meta);

struct SampleSet {
    std::vector<FlowTensor> samples;
    SampleMetadata meta;
};

SampleSet read_samples(const std::filesystem::path& path);

std::filesystem::path sample_sidecar_path(const std::filesystem::path& path);

/// FNV-1a over the sample values (bytes, in order).
std::uint64_t sample_hash(const std::vector<FlowTensor>& samples);

}  // namespace flowdiff::diffusion
