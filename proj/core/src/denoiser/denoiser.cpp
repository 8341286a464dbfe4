#include "flowdiff/denoiser/denoiser.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "flowdiff/denoiser/step_embedding.hpp"
#include "flowdiff/error.hpp"
#include "flowdiff/nn/ops.hpp"

namespace flowdiff::denoiser {
namespace {

using nn::Tensor;

constexpr std::array<const char*, 3> kRelationKernelNames{"w_border", "w_nearby", "w_similar"};

std::string layer_prefix(int l) { return "layer" + std::to_string(l) + "."; }

int step_width(const DenoiserConfig& c) { return 4 * c.hidden; }

}  // namespace

void DenoiserConfig::validate() const {
    if (flow_dims < 1) fail("denoiser", "flow_dims must be >= 1");
    if (hidden < 1 || layers < 1) fail("denoiser", "hidden width and layer count must be >= 1");
    if (heads < 1 || hidden % heads != 0) fail("denoiser", "hidden width must be divisible by heads");
    if (ffn_multiplier < 1) fail("denoiser", "ffn_multiplier must be >= 1");
    if (kg_dim < 1) fail("denoiser", "kg_dim must be >= 1");
    if (condition == ConditionKind::RegionFeatures && feature_dim < 0) fail("denoiser", "feature_dim must be >= 0");
    if (condition == ConditionKind::MaskedSequence && kg_in_condition) {
        fail("denoiser", "kg_in_condition is only supported with region-feature conditions");
    }
}

int DenoiserConfig::condition_input_dim() const {
    if (condition == ConditionKind::MaskedSequence) return flow_dims + 1;
    return feature_dim + flow_dims + (kg_in_condition ? kg_dim : 0);
}

Denoiser::Denoiser(DenoiserConfig config, std::mt19937_64& rng) : config_(config) {
    config_.validate();
    const int d = config_.hidden;
    const int F = config_.flow_dims;
    const int ds = step_width(config_);
    const int ff = config_.ffn_multiplier * d;
    const int cin = config_.condition_input_dim();
    auto dense = [&](const std::string& name, int in, int out) {
        params_.add(name + ".w", nn::uniform_fan_in({in, out}, in, rng));
        params_.add(name + ".b", nn::uniform_fan_in({out}, in, rng));
    };

    dense("input", F, d);
    params_.add("step.w1", nn::uniform_fan_in({kStepEmbeddingDim, ds}, kStepEmbeddingDim, rng));
    params_.add("step.b1", nn::uniform_fan_in({ds}, kStepEmbeddingDim, rng));
    params_.add("step.w2", nn::uniform_fan_in({ds, ds}, ds, rng));
    params_.add("step.b2", nn::uniform_fan_in({ds}, ds, rng));
    params_.add("condition.w1", nn::uniform_fan_in({cin, d}, cin, rng));
    params_.add("condition.b1", nn::uniform_fan_in({d}, cin, rng));
    params_.add("condition.w2", nn::uniform_fan_in({d, d}, d, rng));
    params_.add("condition.b2", nn::uniform_fan_in({d}, d, rng));

    for (int l = 0; l < config_.layers; ++l) {
        const std::string p = layer_prefix(l);
        dense(p + "step", ds, d);
        if (config_.use_spatial) {
            for (const char* k : kRelationKernelNames) {
                params_.add(p + "spatial." + k, nn::uniform_fan_in({d, d}, d, rng));
            }
            params_.add(p + "spatial.w_self", nn::uniform_fan_in({d, d}, d, rng));
        }
        params_.add(p + "temporal.ln1.gamma", nn::ones_parameter({d}));
        params_.add(p + "temporal.ln1.beta", nn::zeros_parameter({d}));
        dense(p + "temporal.qkv", d, 3 * d);
        dense(p + "temporal.attn_out", d, d);
        params_.add(p + "temporal.ln2.gamma", nn::ones_parameter({d}));
        params_.add(p + "temporal.ln2.beta", nn::zeros_parameter({d}));
        dense(p + "temporal.ffn1", d, ff);
        dense(p + "temporal.ffn2", ff, d);
        if (config_.use_spatial) {
            params_.add(p + "fusion.w_q", nn::uniform_fan_in({config_.kg_dim, d}, config_.kg_dim, rng));
            params_.add(p + "fusion.w_k", nn::uniform_fan_in({d, d}, d, rng));
            params_.add(p + "fusion.w_v", nn::uniform_fan_in({d, d}, d, rng));
            params_.add(p + "fusion.w_o", nn::uniform_fan_in({d, d}, d, rng));
        }
        dense(p + "cond", d, d);
        dense(p + "gate", d, 2 * d);
        dense(p + "out", d, 2 * d);
    }
    dense("output1", d, d);
    params_.add("output2.w", nn::zeros_parameter({d, F}));
    params_.add("output2.b", nn::zeros_parameter({F}));
    bind_layers();
}

Denoiser::Denoiser(DenoiserConfig config, nn::ParameterSet params)
    : config_(config), params_(std::move(params)) {
    config_.validate();
    std::mt19937_64 unused(0);
    Denoiser reference(config_, unused);
    const auto& want = reference.parameters().entries();
    const auto& have = params_.entries();
    if (want.size() != have.size()) {
        fail("denoiser", "checkpoint has " + std::to_string(have.size()) + " tensors, model expects " +
                             std::to_string(want.size()));
    }
    for (std::size_t i = 0; i < want.size(); ++i) {
        if (want[i].name != have[i].name || want[i].tensor.shape() != have[i].tensor.shape()) {
            fail("denoiser", "parameter mismatch at '" + have[i].name + "' (expected '" + want[i].name + "' " +
                                 nn::shape_string(want[i].tensor.shape()) + ")");
        }
    }
    bind_layers();
}

void Denoiser::bind_layers() {
    layers_.clear();
    const int ff_heads = config_.heads;
    for (int l = 0; l < config_.layers; ++l) {
        const std::string p = layer_prefix(l);
        auto get = [&](const std::string& name) { return params_.get(p + name); };
        ResidualLayerParams L;
        L.step_w = get("step.w");
        L.step_b = get("step.b");
        if (config_.use_spatial) {
            for (std::size_t k = 0; k < kRelationKernelNames.size(); ++k) {
                L.spatial.relation[k] = get(std::string("spatial.") + kRelationKernelNames[k]);
            }
            L.spatial.self = get("spatial.w_self");
            L.fusion = {get("fusion.w_q"), get("fusion.w_k"), get("fusion.w_v"), get("fusion.w_o")};
        }
        L.temporal = {get("temporal.ln1.gamma"), get("temporal.ln1.beta"), get("temporal.qkv.w"),
                      get("temporal.qkv.b"),      get("temporal.attn_out.w"), get("temporal.attn_out.b"),
                      get("temporal.ln2.gamma"), get("temporal.ln2.beta"), get("temporal.ffn1.w"),
                      get("temporal.ffn1.b"),     get("temporal.ffn2.w"),    get("temporal.ffn2.b"),
                      ff_heads};
        L.cond_w = get("cond.w");
        L.cond_b = get("cond.b");
        L.gate_w = get("gate.w");
        L.gate_b = get("gate.b");
        L.out_w = get("out.w");
        L.out_b = get("out.b");
        layers_.push_back(std::move(L));
    }
}

Tensor Denoiser::condition_vector(const Tensor& features, const Tensor& guide_scalars, const Tensor& kg) const {
    if (config_.condition != ConditionKind::RegionFeatures) fail("denoiser", "model expects a masked-sequence condition");
    if (features.rank() != 2 || features.dim(1) != config_.feature_dim) {
        fail("denoiser", "feature dimension mismatch: model expects " + std::to_string(config_.feature_dim) +
                             ", got " + nn::shape_string(features.shape()));
    }
    const int R = features.dim(0);
    if (guide_scalars.shape() != nn::Shape{R, config_.flow_dims}) fail("denoiser", "guide scalars shape mismatch");
    std::vector<Tensor> parts{features, guide_scalars};
    if (config_.kg_in_condition) {
        if (kg.shape() != nn::Shape{R, config_.kg_dim}) fail("denoiser", "KG embedding shape mismatch");
        parts.push_back(kg);
    }
    auto in = config_.feature_dim == 0 && !config_.kg_in_condition ? guide_scalars : nn::concat_last(parts);
    auto h = nn::relu(nn::linear(in, params_.get("condition.w1"), params_.get("condition.b1")));
    auto out = nn::linear(h, params_.get("condition.w2"), params_.get("condition.b2"));
    return nn::reshape(out, {1, R, 1, config_.hidden});
}

Tensor Denoiser::condition_sequence(const Tensor& masked_window) const {
    if (config_.condition != ConditionKind::MaskedSequence) fail("denoiser", "model expects a region-feature condition");
    if (masked_window.rank() != 4 || masked_window.dim(3) != config_.flow_dims + 1) {
        fail("denoiser", "masked window must be [B,R,T,flow_dims+1], got " + nn::shape_string(masked_window.shape()));
    }
    auto h = nn::relu(nn::linear(masked_window, params_.get("condition.w1"), params_.get("condition.b1")));
    return nn::linear(h, params_.get("condition.w2"), params_.get("condition.b2"));
}

Tensor Denoiser::forward(const Tensor& x_n, const std::vector<int>& steps, const Tensor& kg,
                         const Tensor& condition, const ukg::RegionSubgraph& graph, ForwardTrace* trace) const {
    if (x_n.rank() != 4 || x_n.dim(3) != config_.flow_dims) {
        fail("denoiser", "input must be [B,R,T," + std::to_string(config_.flow_dims) + "], got " +
                             nn::shape_string(x_n.shape()));
    }
    for (double v : x_n.value()) {
        if (!std::isfinite(v)) fail("denoiser", "non-finite value in the noisy input");
    }
    const int B = x_n.dim(0), R = x_n.dim(1), T = x_n.dim(2), d = config_.hidden;
    if (static_cast<int>(steps.size()) != B) fail("denoiser", "one diffusion step per batch element required");
    if (config_.use_spatial && (kg.rank() != 2 || kg.dim(0) != R || kg.dim(1) != config_.kg_dim)) {
        fail("denoiser", "KG embeddings must be [" + std::to_string(R) + "," + std::to_string(config_.kg_dim) +
                             "], got " + nn::shape_string(kg.shape()));
    }
    const nn::Shape full{B, R, T, d};

    std::vector<double> emb;
    emb.reserve(static_cast<std::size_t>(B) * kStepEmbeddingDim);
    for (int n : steps) {
        auto e = step_embedding(n);
        emb.insert(emb.end(), e.begin(), e.end());
    }
    auto step = nn::Tensor::constant({B, kStepEmbeddingDim}, std::move(emb));
    step = nn::silu(nn::linear(step, params_.get("step.w1"), params_.get("step.b1")));
    step = nn::silu(nn::linear(step, params_.get("step.w2"), params_.get("step.b2")));

    auto h = nn::relu(nn::linear(x_n, params_.get("input.w"), params_.get("input.b")));
    const auto position =
        nn::broadcast_to(nn::Tensor::constant({1, 1, T, d}, horizon_encoding(T, d)), full);
    Tensor skip;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (const auto& L : layers_) {
        auto s = nn::broadcast_to(nn::reshape(nn::linear(step, L.step_w, L.step_b), {B, 1, 1, d}), full);
        auto y = nn::add(h, s);
        auto fused = temporal_block(nn::add(y, position), L.temporal);
        if (config_.use_spatial) {
            auto hs = rgcn_spatial(y, graph, L.spatial, config_.degree_normalize);
            FusionWeights w;
            fused = kgst_fuse(hs, fused, kg, L.fusion, trace ? &w : nullptr);
            if (trace) trace->fusion.push_back(std::move(w));
        }
        auto c = nn::linear(condition, L.cond_w, L.cond_b);
        if (c.shape() != full) c = nn::broadcast_to(c, full);
        auto z = nn::linear(nn::add(fused, c), L.gate_w, L.gate_b);
        auto g = nn::mul(nn::tanh(nn::slice_last(z, 0, d)), nn::sigmoid(nn::slice_last(z, d, 2 * d)));
        auto o = nn::linear(g, L.out_w, L.out_b);
        h = nn::scale(nn::add(h, nn::slice_last(o, 0, d)), inv_sqrt2);
        auto sk = nn::slice_last(o, d, 2 * d);
        skip = skip.defined() ? nn::add(skip, sk) : sk;
    }
    auto out = nn::scale(skip, 1.0 / std::sqrt(static_cast<double>(config_.layers)));
    out = nn::relu(nn::linear(out, params_.get("output1.w"), params_.get("output1.b")));
    return nn::linear(out, params_.get("output2.w"), params_.get("output2.b"));
}

void Denoiser::randomize_output_head(std::mt19937_64& rng) {
    const int d = config_.hidden;
    for (const char* name : {"output2.w", "output2.b"}) {
        auto& t = params_.get(name);
        auto fresh = nn::uniform_fan_in(t.shape(), d, rng);
        std::copy(fresh.value().begin(), fresh.value().end(), t.mutable_value().begin());
    }
}

std::string parameter_group(const std::string& name) {
    const auto dot = name.find('.');
    const std::string first = name.substr(0, dot);
    const bool layered = first.size() > 5 && first.rfind("layer", 0) == 0 &&
                         std::all_of(first.begin() + 5, first.end(),
                                     [](unsigned char c) { return std::isdigit(c) != 0; });
    if (!layered || dot == std::string::npos) return first;
    const auto rest = name.substr(dot + 1);
    return "layer." + rest.substr(0, rest.find('.'));
}

Tensor broadcast_guide(const Tensor& guide_scalars, int batch, int horizon) {
    if (guide_scalars.rank() != 2) fail("denoiser", "guide scalars must be [R, flow_dims]");
    const int R = guide_scalars.dim(0), F = guide_scalars.dim(1);
    return nn::broadcast_to(nn::reshape(guide_scalars, {1, R, 1, F}), {batch, R, horizon, F});
}

}  // namespace flowdiff::denoiser
