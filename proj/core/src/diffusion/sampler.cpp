#include "flowdiff/diffusion/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "flowdiff/error.hpp"

namespace flowdiff::diffusion {
namespace {

bool all_finite(const FlowTensor& t) {
    return std::all_of(t.values().begin(), t.values().end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

std::vector<FlowTensor> sample(const NoisePredictor& predictor, const VolumeGuide& guide,
                               const NoiseSchedule& schedule, std::size_t num_samples,
                               std::uint64_t seed, const SamplerOptions& options) {
    std::vector<FlowTensor> out;
    if (num_samples == 0) return out;
    if (schedule.steps() < 1) fail("diffusion", "empty schedule");
    const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
    const int N = schedule.steps();

    for (std::size_t first = 0; first < num_samples; first += batch) {
        const std::size_t count = std::min(batch, num_samples - first);
        std::vector<std::mt19937_64> rngs;
        std::vector<FlowTensor> x;
        for (std::size_t s = 0; s < count; ++s) {
            std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                              static_cast<std::uint32_t>(first + s)};
            rngs.emplace_back(seq);
            FlowTensor start = standard_normal_like(guide, rngs.back());
            auto v = start.values();
            auto g = guide.values();
            for (std::size_t i = 0; i < v.size(); ++i) v[i] += g[i];
            x.push_back(std::move(start));
        }
        for (int n = N; n >= 1; --n) {
            auto eps = predictor(x, n);
            if (eps.size() != count) fail("diffusion", "noise predictor returned a wrong batch size");
            for (std::size_t s = 0; s < count; ++s) {
                FlowTensor x0 = predict_x0(x[s], eps[s], guide, n, schedule);
                if (options.clip_x0) {
                    for (double& v : x0.values()) v = std::clamp(v, options.clip_x0->low, options.clip_x0->high);
                }
                if (n == 1) {
                    x[s] = std::move(x0);
                } else {
                    FlowTensor mean = posterior_mean(x[s], x0, guide, n, schedule);
                    const double sd = std::sqrt(schedule.posterior_variance(n));
                    FlowTensor z = standard_normal_like(guide, rngs[s]);
                    auto m = mean.values();
                    auto zv = z.values();
                    for (std::size_t i = 0; i < m.size(); ++i) m[i] += sd * zv[i];
                    x[s] = std::move(mean);
                }
                if (!all_finite(x[s])) {
                    fail("diffusion", "non-finite value while sampling at step " + std::to_string(n));
                }
            }
        }
        for (auto& t : x) out.push_back(std::move(t));
    }
    return out;
}

}  // namespace flowdiff::diffusion
