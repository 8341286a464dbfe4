#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "flowdiff/diffusion/process.hpp"

namespace flowdiff::diffusion {

/// Noise estimates for a batch of states, all at step n.
using NoisePredictor = std::function<std::vector<FlowTensor>(const std::vector<FlowTensor>& x_n, int n)>;

struct ClipRange {
    double low;
    double high;
};

struct SamplerOptions {
    std::optional<ClipRange> clip_x0;
    std::size_t batch_size = 16;
};

/// Reverse chain from x_N ~ N(guide, I). Steps N..2 draw from the posterior;
/// step 1 returns the x0 estimate. Each sample owns a random stream derived
/// from (seed, sample index), so results do not depend on batch size.
std::vector<FlowTensor> sample(const NoisePredictor& predictor, const VolumeGuide& guide,
                               const NoiseSchedule& schedule, std::size_t num_samples,
                               std::uint64_t seed, const SamplerOptions& options = {});

/// Seeded standard normal tensor shaped like `like`.
template <class Rng>
FlowTensor standard_normal_like(const FlowTensor& like, Rng& rng);

}  // namespace flowdiff::diffusion

#include <random>

namespace flowdiff::diffusion {

template <class Rng>
FlowTensor standard_normal_like(const FlowTensor& like, Rng& rng) {
    FlowTensor out(like.regions(), like.horizon(), like.channels(), 0.0, like.space());
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : out.values()) v = normal(rng);
    return out;
}

}  // namespace flowdiff::diffusion
