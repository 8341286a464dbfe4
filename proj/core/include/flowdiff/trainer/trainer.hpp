#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "flowdiff/denoiser/denoiser.hpp"
#include "flowdiff/denoiser/volume_estimator.hpp"
#include "flowdiff/diffusion/schedule.hpp"
#include "flowdiff/flow_tensor.hpp"
#include "flowdiff/nn/optim.hpp"
#include "flowdiff/ukg/subgraph.hpp"

namespace flowdiff::trainer {

struct TrainConfig {
    /// Full-batch estimator steps before diffusion training.
    int pretrain_epochs = 100;
    /// Diffusion epochs between estimator-only steps; nullopt means the
    /// estimator is frozen after pretraining.
    std::optional<int> alternation = 10;
    double learning_rate = 1e-3;
    /// Diffusion epochs; each visits every training day once.
    int epochs = 200;
    int batch_size = 8;
    std::uint64_t seed = 0;
    double max_grad_norm = 0.0;

    void validate() const;
};

enum class Phase { Pretrain, Diffusion, Volume };
const char* phase_name(Phase p);

struct EpochRecord {
    int epoch = 0;  // 1-based, monotone across phases
    Phase phase = Phase::Diffusion;
    double l1 = 0.0;  // NaN when the phase has no diffusion loss
    double l2 = 0.0;  // NaN when the phase has no volume loss
    double seconds = 0.0;
    double phi_grad_norm = 0.0;
};

struct TrainLog {
    std::vector<EpochRecord> records;
    std::string to_csv() const;
};

/// Denoiser plus volume estimator. With `use_guide` off the process is the
/// vanilla one: the guide is identically zero and the estimator is unused.
struct Model {
    denoiser::Denoiser denoiser;
    denoiser::VolumeEstimator estimator;
    bool use_guide = true;

    /// Estimator output [R, flow_dims], or zeros without the guide.
    nn::Tensor guide_scalars(const nn::Tensor& features) const;
    nn::ParameterSet all_parameters() const;
};

struct ModelConfig {
    denoiser::DenoiserConfig denoiser;
    int volume_hidden = 32;
    bool use_guide = true;
};

Model make_model(const ModelConfig& config, std::uint64_t seed);

/// Normalized-space training inputs for one split.
struct TrainingData {
    std::vector<FlowTensor> days;  // regions x horizon x channels each
    Matrix features;               // regions x d_fea
    Matrix kg;                     // regions x d_kg
    ukg::RegionSubgraph graph;

    void validate() const;
    std::size_t regions() const { return graph.size(); }
};

/// Per region and channel horizon mean, averaged across days: [R, F].
Matrix mean_true_volume(const std::vector<FlowTensor>& days);

nn::Tensor matrix_tensor(const Matrix& m);
/// Stacks same-shape tensors into [B, R, T, F].
nn::Tensor stack_flows(const std::vector<const FlowTensor*>& flows);

struct TrainResult {
    TrainLog log;
    bool aborted = false;
    std::string abort_reason;
};

class Trainer {
public:
    Trainer(Model& model, const TrainingData& data, const diffusion::NoiseSchedule& schedule, TrainConfig config);

    /// One full-batch estimator step on the volume loss; returns the loss.
    double volume_step();
    /// One pass over all training days (shuffled); returns mean diffusion loss.
    double diffusion_epoch();
    /// Algorithm: pretraining, then diffusion epochs with periodic estimator steps.
    TrainResult run();

    /// Largest estimator gradient norm seen in the last diffusion epoch.
    double last_phi_grad_norm() const { return last_phi_grad_norm_; }

private:
    bool record(TrainResult& result, Phase phase, double l1, double l2, double seconds);

    Model& model_;
    const TrainingData& data_;
    const diffusion::NoiseSchedule& schedule_;
    TrainConfig config_;
    nn::Adam adam_;
    std::mt19937_64 rng_;
    nn::Tensor features_;
    nn::Tensor kg_;
    nn::Tensor volume_target_;
    std::vector<double> last_finite_;
    double last_phi_grad_norm_ = 0.0;
    int epoch_counter_ = 0;
};

}  // namespace flowdiff::trainer
