#include "flowdiff/denoiser/step_embedding.hpp"

#include <cmath>

#include "flowdiff/error.hpp"

namespace flowdiff::denoiser {

std::array<double, kStepEmbeddingDim> step_embedding(double n) {
    if (n < 0.0) fail("denoiser", "diffusion step must be non-negative");
    constexpr int half = kStepEmbeddingDim / 2;
    std::array<double, kStepEmbeddingDim> out{};
    for (int j = 0; j < half; ++j) {
        const double arg = std::pow(10.0, j * 4.0 / (half - 1)) * n;
        out[static_cast<std::size_t>(j)] = std::sin(arg);
        out[static_cast<std::size_t>(j + half)] = std::cos(arg);
    }
    return out;
}

std::vector<double> horizon_encoding(int horizon, int dim) {
    if (horizon < 0 || dim < 0) fail("denoiser", "horizon encoding needs non-negative sizes");
    std::vector<double> out(static_cast<std::size_t>(horizon) * static_cast<std::size_t>(dim));
    for (int t = 0; t < horizon; ++t) {
        for (int i = 0; i < dim; ++i) {
            const double freq = std::pow(10000.0, -static_cast<double>(i - i % 2) / dim);
            out[static_cast<std::size_t>(t) * dim + i] = i % 2 == 0 ? std::sin(t * freq) : std::cos(t * freq);
        }
    }
    return out;
}

}  // namespace flowdiff::denoiser
