#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "flowdiff/data/synthetic.hpp"
#include "flowdiff/diffusion/schedule.hpp"
#include "flowdiff/kge/tucker.hpp"
#include "flowdiff/trainer/predictive.hpp"
#include "flowdiff/trainer/trainer.hpp"
#include "flowdiff/ukg/builders.hpp"

namespace flowdiff::data {

/// Input files. Empty paths fall back to the synthetic set under <out>/data.
struct DataPaths {
    std::string flows;
    std::string features;
    std::string regions;
    std::string pois;
    std::string checkins;
    std::string business_areas;
    std::string split;
};

struct DiffusionSettings {
    int steps = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    /// Clip the x0 estimate to +-clip_sigma in normalized units; 0 disables.
    double clip_sigma = 6.0;
};

struct SamplingSettings {
    /// 0 means one sample per real day.
    int num_samples = 0;
    int batch_size = 16;
};

struct PredictSettings {
    trainer::WindowConfig windows;
    int samples = 8;
    int epochs = 200;
};

struct RunConfig {
    std::uint64_t seed = 0;
    DataPaths data;
    SyntheticConfig synth;
    ukg::KgBuildConfig kg;
    kge::KgeConfig kge;
    DiffusionSettings diffusion;
    trainer::ModelConfig model;
    trainer::TrainConfig train;
    SamplingSettings sampling;
    PredictSettings predict;

    /// Checks every module's preconditions.
    void validate() const;
    /// Copies the top-level seed into the per-module seeds.
    void apply_seed(std::uint64_t value);
    diffusion::NoiseSchedule schedule() const;
};

/// Missing keys keep their defaults; unknown keys are errors. `alternation`
/// accepts an integer or the string "none".
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_json(const RunConfig& config);

}  // namespace flowdiff::data
