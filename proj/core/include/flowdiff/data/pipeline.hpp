#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "flowdiff/data/config.hpp"
#include "flowdiff/data/dataset.hpp"
#include "flowdiff/kge/tucker.hpp"
#include "flowdiff/metrics/metrics.hpp"
#include "flowdiff/trainer/trainer.hpp"
#include "flowdiff/ukg/urban_kg.hpp"

namespace flowdiff::data {

/// Layout of a run directory.
struct RunPaths {
    std::filesystem::path out;

    std::filesystem::path data_dir() const { return out / "data"; }
    std::filesystem::path kg_dir() const { return out / "kg"; }
    std::filesystem::path embeddings() const { return kg_dir() / "embeddings.bin"; }
    std::filesystem::path kge_log() const { return kg_dir() / "kge_log.csv"; }
    std::filesystem::path config() const { return out / "config.json"; }
    std::filesystem::path checkpoint() const { return out / "checkpoint.bin"; }
    std::filesystem::path train_log() const { return out / "train_log.csv"; }
    std::filesystem::path samples() const { return out / "samples.npy.gz"; }
    std::filesystem::path figures() const { return out / "figures"; }
    std::filesystem::path predict_checkpoint() const { return out / "predict_checkpoint.bin"; }
    std::filesystem::path predict_log() const { return out / "predict_log.csv"; }
    std::filesystem::path predict_metrics() const { return out / "predict_metrics.json"; }
};

struct InputFiles {
    std::filesystem::path flows, features, regions, pois, checkins, business_areas, split;
};

/// Configured paths, or the synthetic files under <out>/data for unset ones.
InputFiles resolve_inputs(const RunConfig& config, const RunPaths& paths);
Dataset load_dataset(const RunConfig& config, const RunPaths& paths);

/// Regions scored by generate and evaluate: the test split, or every region
/// when the split is empty.
std::vector<std::size_t> target_regions(const Dataset& dataset);

void run_synth(const RunConfig& config, const RunPaths& paths);
ukg::UrbanKG run_build_kg(const RunConfig& config, const RunPaths& paths);
kge::KGEmbeddingSet run_train_kge(const RunConfig& config, const RunPaths& paths);
trainer::TrainResult run_train(const RunConfig& config, const RunPaths& paths);
std::vector<FlowTensor> run_generate(const RunConfig& config, const RunPaths& paths);
metrics::EvalReport run_evaluate(const RunConfig& config, const RunPaths& paths);

struct PredictReport {
    double mae = 0.0;           // raw units, future steps
    double baseline_mae = 0.0;  // copy-last-value
    std::size_t train_windows = 0;
    std::size_t test_windows = 0;
};
PredictReport run_predict(const RunConfig& config, const RunPaths& paths);

/// Persists the resolved configuration into the run directory.
void save_run_config(const RunConfig& config, const RunPaths& paths);

}  // namespace flowdiff::data
