#include "flowdiff/nn/optim.hpp"

#include <cmath>

namespace flowdiff::nn {

void Adam::step(const std::vector<Tensor>& params) {
    double clip = 1.0;
    if (options_.max_grad_norm > 0.0) {
        double sq = 0.0;
        for (const auto& p : params) {
            if (!p.has_grad()) continue;
            for (double g : p.grad()) sq += g * g;
        }
        const double norm = std::sqrt(sq);
        if (norm > options_.max_grad_norm) clip = options_.max_grad_norm / norm;
    }

    for (const auto& p : params) {
        if (!p.has_grad()) continue;
        State& s = state_[p.node()];
        const std::size_t n = p.numel();
        if (s.m.empty()) {
            s.m.assign(n, 0.0);
            s.v.assign(n, 0.0);
        }
        ++s.steps;
        const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(s.steps));
        const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(s.steps));
        auto g = p.grad();
        auto w = p.node()->value.data();
        for (std::size_t i = 0; i < n; ++i) {
            const double gi = g[i] * clip;
            s.m[i] = options_.beta1 * s.m[i] + (1.0 - options_.beta1) * gi;
            s.v[i] = options_.beta2 * s.v[i] + (1.0 - options_.beta2) * gi * gi;
            const double mhat = s.m[i] / bc1;
            const double vhat = s.v[i] / bc2;
            w[i] -= options_.lr * mhat / (std::sqrt(vhat) + options_.eps);
        }
    }
}

}  // namespace flowdiff::nn
