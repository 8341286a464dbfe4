#include "flowdiff/trainer/generate.hpp"

#include <algorithm>

#include "flowdiff/error.hpp"
#include "flowdiff/nn/ops.hpp"

namespace flowdiff::trainer {

diffusion::VolumeGuide generation_guide(const Model& model, const GenerationInputs& inputs) {
    nn::NoGradGuard no_grad;
    const auto g = model.guide_scalars(matrix_tensor(inputs.features));
    return diffusion::expand_volume(denoiser::to_matrix(g), inputs.horizon);
}

std::vector<FlowTensor> generate_normalized(const Model& model, const diffusion::NoiseSchedule& schedule,
                                            const GenerationInputs& inputs, std::size_t num_samples,
                                            std::uint64_t seed, const diffusion::SamplerOptions& options) {
    const auto& cfg = model.denoiser.config();
    if (cfg.condition != denoiser::ConditionKind::RegionFeatures) {
        fail("trainer", "generation needs a region-feature conditioned model");
    }
    if (inputs.features.cols() != cfg.feature_dim) {
        fail("trainer", "feature dimension " + std::to_string(inputs.features.cols()) +
                            " does not match the checkpoint (" + std::to_string(cfg.feature_dim) + ")");
    }
    if (static_cast<std::size_t>(inputs.features.rows()) != inputs.graph.size() ||
        inputs.kg.rows() != inputs.features.rows()) {
        fail("trainer", "features, KG embeddings and subgraph disagree on region count");
    }
    nn::NoGradGuard no_grad;
    const auto features = matrix_tensor(inputs.features);
    const auto kg = matrix_tensor(inputs.kg);
    const auto scalars = model.guide_scalars(features);
    const auto guide = diffusion::expand_volume(denoiser::to_matrix(scalars), inputs.horizon);
    const auto cond = model.denoiser.condition_vector(features, scalars, kg);

    diffusion::NoisePredictor predictor = [&](const std::vector<FlowTensor>& x, int n) {
        std::vector<const FlowTensor*> ptrs;
        for (const auto& t : x) ptrs.push_back(&t);
        const auto batch = stack_flows(ptrs);
        const auto eps = model.denoiser.forward(batch, std::vector<int>(x.size(), n), kg, cond, inputs.graph);
        std::vector<FlowTensor> out;
        const std::size_t per = x.front().size();
        for (std::size_t s = 0; s < x.size(); ++s) {
            FlowTensor e = x[s];
            std::copy_n(eps.value().begin() + static_cast<std::ptrdiff_t>(s * per), per, e.values().begin());
            out.push_back(std::move(e));
        }
        return out;
    };
    return diffusion::sample(predictor, guide, schedule, num_samples, seed, options);
}

FlowTensor denormalize(const FlowTensor& normalized, double mean, double std) {
    FlowTensor out = normalized;
    for (double& v : out.values()) v = std::max(0.0, v * std + mean);
    out.set_space(FlowSpace::Raw);
    return out;
}

std::vector<FlowTensor> generate_for_regions(const Checkpoint& checkpoint, const GenerationInputs& inputs,
                                             std::size_t num_samples, std::uint64_t seed,
                                             std::size_t batch_size) {
    const auto& m = checkpoint.manifest;
    diffusion::SamplerOptions options;
    options.clip_x0 = m.clip_x0;
    options.batch_size = batch_size;
    auto samples = generate_normalized(checkpoint.model, m.schedule(), inputs, num_samples, seed, options);
    for (auto& s : samples) s = denormalize(s, m.flow_mean, m.flow_std);
    return samples;
}

}  // namespace flowdiff::trainer
