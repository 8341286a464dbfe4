#include "flowdiff/denoiser/kgst.hpp"

#include <cmath>

#include "flowdiff/error.hpp"
#include "flowdiff/nn/ops.hpp"

namespace flowdiff::denoiser {

nn::Tensor rgcn_spatial(const nn::Tensor& h, const ukg::RegionSubgraph& graph, const SpatialParams& params,
                        bool degree_normalize) {
    if (h.rank() != 4) fail("denoiser", "rgcn_spatial expects [B,R,T,d], got " + nn::shape_string(h.shape()));
    if (static_cast<std::size_t>(h.dim(1)) != graph.size()) {
        fail("denoiser", "subgraph has " + std::to_string(graph.size()) + " regions, input has " +
                             std::to_string(h.dim(1)));
    }
    nn::Tensor pre = nn::matmul(h, params.self);
    for (std::size_t k = 0; k < params.relation.size(); ++k) {
        if (graph.adjacency[k].empty()) continue;
        bool any = false;
        for (const auto& nb : graph.adjacency[k]) any = any || !nb.empty();
        if (!any) continue;
        auto agg = nn::region_aggregate(h, graph.adjacency[k], degree_normalize);
        pre = nn::add(pre, nn::matmul(agg, params.relation[k]));
    }
    return nn::relu(pre);
}

nn::Tensor temporal_block(const nn::Tensor& h, const TemporalParams& p, std::vector<double>* attention_out) {
    if (h.rank() != 4) fail("denoiser", "temporal_block expects [B,R,T,d]");
    const int B = h.dim(0), R = h.dim(1), T = h.dim(2), d = h.dim(3);
    if (d % p.heads != 0) fail("denoiser", "hidden width must be divisible by the head count");
    auto a = nn::layer_norm(h, p.ln1_gamma, p.ln1_beta);
    auto qkv = nn::linear(a, p.qkv_w, p.qkv_b);
    const nn::Shape seq{B * R, T, d};
    auto q = nn::reshape(nn::slice_last(qkv, 0, d), seq);
    auto k = nn::reshape(nn::slice_last(qkv, d, 2 * d), seq);
    auto v = nn::reshape(nn::slice_last(qkv, 2 * d, 3 * d), seq);
    auto att = nn::reshape(nn::attention(q, k, v, p.heads, attention_out), h.shape());
    auto h1 = nn::add(h, nn::linear(att, p.out_w, p.out_b));
    auto f = nn::layer_norm(h1, p.ln2_gamma, p.ln2_beta);
    auto ff = nn::linear(nn::relu(nn::linear(f, p.ffn_w1, p.ffn_b1)), p.ffn_w2, p.ffn_b2);
    return nn::add(h1, ff);
}

nn::Tensor kgst_fuse(const nn::Tensor& h_spatial, const nn::Tensor& h_temporal, const nn::Tensor& kg,
                     const FusionParams& p, FusionWeights* weights_out) {
    if (h_spatial.shape() != h_temporal.shape() || h_spatial.rank() != 4) {
        fail("denoiser", "kgst_fuse: branch shapes differ");
    }
    const int B = h_spatial.dim(0), R = h_spatial.dim(1), d = h_spatial.dim(3);
    if (kg.rank() != 2 || kg.dim(0) != R) {
        fail("denoiser", "kgst_fuse: KG embeddings " + nn::shape_string(kg.shape()) + " do not match " +
                             std::to_string(R) + " regions");
    }
    const nn::Shape pooled{B, R, 1, d};
    auto query = nn::broadcast_to(nn::reshape(nn::matmul(kg, p.w_q), {1, R, 1, d}), pooled);
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(d));
    auto logit = [&](const nn::Tensor& branch) {
        auto key = nn::matmul(nn::mean_axis(branch, 2), p.w_k);
        return nn::scale(nn::sum_last(nn::mul(key, query)), inv_sqrt);  // [B,R,1,1]
    };
    // softmax over two logits == sigmoid of their difference
    auto alpha_s = nn::sigmoid(nn::sub(logit(h_spatial), logit(h_temporal)));
    auto alpha_t = nn::affine(alpha_s, -1.0, 1.0);
    if (weights_out) weights_out->spatial.assign(alpha_s.value().begin(), alpha_s.value().end());
    const auto& full = h_spatial.shape();
    auto mixed = nn::add(nn::mul(nn::broadcast_to(alpha_s, full), nn::matmul(h_spatial, p.w_v)),
                         nn::mul(nn::broadcast_to(alpha_t, full), nn::matmul(h_temporal, p.w_v)));
    return nn::matmul(mixed, p.w_o);
}

}  // namespace flowdiff::denoiser
