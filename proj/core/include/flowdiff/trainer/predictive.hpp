#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "flowdiff/diffusion/sampler.hpp"
#include "flowdiff/trainer/trainer.hpp"

namespace flowdiff::trainer {

struct WindowConfig {
    int history = 12;
    int future = 12;
    int stride = 4;
};

/// Concatenates days along time and cuts windows of history + future steps.
std::vector<FlowTensor> make_windows(const std::vector<FlowTensor>& days, const WindowConfig& config);

/// [R, T, F + 1]: observed values for the first `history` steps and zeros
/// after, plus a final channel that is 1 where observed.
FlowTensor masked_window(const FlowTensor& window, int history);

struct PredictiveData {
    std::vector<FlowTensor> windows;  // normalized
    Matrix kg;
    ukg::RegionSubgraph graph;
    int history = 12;

    void validate() const;
};

/// Vanilla diffusion (zero guide) conditioned on the masked window.
class PredictiveTrainer {
public:
    PredictiveTrainer(Model& model, const PredictiveData& data, const diffusion::NoiseSchedule& schedule,
                      TrainConfig config);
    double epoch();
    TrainResult run();

private:
    Model& model_;
    const PredictiveData& data_;
    const diffusion::NoiseSchedule& schedule_;
    TrainConfig config_;
    nn::Adam adam_;
    std::mt19937_64 rng_;
    nn::Tensor kg_;
};

/// Mean over `num_samples` sampled windows given the observed history.
FlowTensor predict_window(const Model& model, const diffusion::NoiseSchedule& schedule, const FlowTensor& window,
                          int history, const Matrix& kg, const ukg::RegionSubgraph& graph, std::size_t num_samples,
                          std::uint64_t seed, const diffusion::SamplerOptions& options = {});

/// Mean absolute error over the future steps of `truth`.
double future_mae(const FlowTensor& prediction, const FlowTensor& truth, int history);
/// Baseline that repeats the last observed value across the future.
FlowTensor copy_last_prediction(const FlowTensor& window, int history);

}  // namespace flowdiff::trainer
