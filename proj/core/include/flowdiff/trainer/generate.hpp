#pragma once

#include <cstdint>
#include <vector>

#include "flowdiff/diffusion/sampler.hpp"
#include "flowdiff/trainer/checkpoint.hpp"
#include "flowdiff/trainer/trainer.hpp"

namespace flowdiff::trainer {

/// Normalized-space inputs for the regions to generate.
struct GenerationInputs {
    Matrix features;  // regions x d_fea (z-scored)
    Matrix kg;        // regions x d_kg
    ukg::RegionSubgraph graph;
    std::size_t horizon = 24;
};

/// Guide broadcast over the horizon (zeros when the model has no guide).
diffusion::VolumeGuide generation_guide(const Model& model, const GenerationInputs& inputs);

/// Samples in normalized space.
std::vector<FlowTensor> generate_normalized(const Model& model, const diffusion::NoiseSchedule& schedule,
                                            const GenerationInputs& inputs, std::size_t num_samples,
                                            std::uint64_t seed, const diffusion::SamplerOptions& options = {});

/// v * std + mean, clamped at zero, tagged raw.
FlowTensor denormalize(const FlowTensor& normalized, double mean, double std);

/// Generation from a checkpoint, returned in raw flow units.
std::vector<FlowTensor> generate_for_regions(const Checkpoint& checkpoint, const GenerationInputs& inputs,
                                             std::size_t num_samples, std::uint64_t seed,
                                             std::size_t batch_size = 16);

}  // namespace flowdiff::trainer
