#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flowdiff/diffusion/sampler.hpp"
#include "flowdiff/diffusion/schedule.hpp"
#include "flowdiff/trainer/trainer.hpp"

namespace flowdiff::trainer {

struct CheckpointManifest {
    std::string mode = "generative";  // or "predictive"
    ModelConfig model;
    int steps = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    double flow_mean = 0.0;
    double flow_std = 1.0;
    std::optional<diffusion::ClipRange> clip_x0;
    std::vector<std::string> channels;
    std::vector<std::string> feature_names;
    int history = 0;
    int future = 0;
    std::uint64_t seed = 0;

    diffusion::NoiseSchedule schedule() const;
};

struct Checkpoint {
    CheckpointManifest manifest;
    Model model;
};

/// Binary container: magic, JSON manifest, then named float64 parameter blobs.
void save_checkpoint(const std::filesystem::path& path, const CheckpointManifest& manifest, const Model& model);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::uint64_t file_hash(const std::filesystem::path& path);

}  // namespace flowdiff::trainer
