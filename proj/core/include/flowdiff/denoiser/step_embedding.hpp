#pragma once

#include <array>
#include <span>
#include <vector>

namespace flowdiff::denoiser {

inline constexpr int kStepEmbeddingDim = 128;

/// [sin(10^(j*4/63) n)]_{j<64} followed by [cos(10^(j*4/63) n)]_{j<64}.
std::array<double, kStepEmbeddingDim> step_embedding(double n);

/// Transformer-style position table, row-major [horizon, dim]: entry (t, 2i) is
/// sin(t / 10000^(2i/dim)) and (t, 2i+1) the matching cosine.
std::vector<double> horizon_encoding(int horizon, int dim);

}  // namespace flowdiff::denoiser
