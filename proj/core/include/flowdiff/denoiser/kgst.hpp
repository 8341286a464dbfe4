#pragma once

#include <array>
#include <vector>

#include "flowdiff/nn/autograd.hpp"
#include "flowdiff/ukg/subgraph.hpp"

namespace flowdiff::denoiser {

// Hidden tensors are [B, R, T, d]: batch, regions, horizon, width.

struct SpatialParams {
    std::array<nn::Tensor, ukg::kRegionRelations.size()> relation;  // [d, d] each
    nn::Tensor self;                                                // [d, d]
};

/// ReLU(sum_r sum_{j in N_r(l)} h_j W_r + h_l W_0). Neighbor sums are
/// unnormalized unless `degree_normalize`.
nn::Tensor rgcn_spatial(const nn::Tensor& h, const ukg::RegionSubgraph& graph, const SpatialParams& params,
                        bool degree_normalize = false);

struct TemporalParams {
    nn::Tensor ln1_gamma, ln1_beta;
    nn::Tensor qkv_w, qkv_b;  // [d, 3d], [3d]
    nn::Tensor out_w, out_b;  // [d, d], [d]
    nn::Tensor ln2_gamma, ln2_beta;
    nn::Tensor ffn_w1, ffn_b1;  // [d, f], [f]
    nn::Tensor ffn_w2, ffn_b2;  // [f, d], [d]
    int heads = 4;
};

/// Pre-norm Transformer encoder layer along the horizon, per region.
/// `attention_out` receives [B*R, heads, T, T] weights when given.
nn::Tensor temporal_block(const nn::Tensor& h, const TemporalParams& params,
                          std::vector<double>* attention_out = nullptr);

struct FusionParams {
    nn::Tensor w_q;  // [d_kg, d]
    nn::Tensor w_k;  // [d, d]
    nn::Tensor w_v;  // [d, d]
    nn::Tensor w_o;  // [d, d]
};

/// Per-region spatial weight alpha_s (alpha_t = 1 - alpha_s), shape [B, R].
struct FusionWeights {
    std::vector<double> spatial;
};

/// Attention over the two branches with the region KG embedding as the query.
/// Keys are mean-pooled over the horizon, so each region gets one weight pair.
nn::Tensor kgst_fuse(const nn::Tensor& h_spatial, const nn::Tensor& h_temporal, const nn::Tensor& kg,
                     const FusionParams& params, FusionWeights* weights_out = nullptr);

}  // namespace flowdiff::denoiser
