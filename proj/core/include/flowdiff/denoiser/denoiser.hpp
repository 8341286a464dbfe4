#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "flowdiff/denoiser/kgst.hpp"
#include "flowdiff/nn/params.hpp"
#include "flowdiff/ukg/subgraph.hpp"

namespace flowdiff::denoiser {

enum class ConditionKind {
    /// Region features plus the guide scalars, constant over the horizon.
    RegionFeatures,
    /// A [B, R, T, flow_dims] window with masked steps zeroed, plus a mask channel.
    MaskedSequence,
};

struct DenoiserConfig {
    int flow_dims = 2;
    int hidden = 64;
    int layers = 5;
    int kg_dim = 32;
    int heads = 4;
    int ffn_multiplier = 4;
    int feature_dim = 0;
    ConditionKind condition = ConditionKind::RegionFeatures;
    /// Spatial R-GCN branch and KG-queried fusion; off leaves the temporal branch alone.
    bool use_spatial = true;
    bool degree_normalize = false;
    /// Also feed the region KG embedding into the condition vector.
    bool kg_in_condition = false;

    void validate() const;
    int condition_input_dim() const;
};

struct ResidualLayerParams {
    nn::Tensor step_w, step_b;
    SpatialParams spatial;
    TemporalParams temporal;
    FusionParams fusion;
    nn::Tensor cond_w, cond_b;
    nn::Tensor gate_w, gate_b;  // [d, 2d]
    nn::Tensor out_w, out_b;    // [d, 2d]: residual half, skip half
};

/// Per-layer diagnostics from a forward pass.
struct ForwardTrace {
    std::vector<FusionWeights> fusion;
};

class Denoiser {
public:
    Denoiser() = default;
    Denoiser(DenoiserConfig config, std::mt19937_64& rng);
    /// Rebuilds a network around loaded parameters; names and shapes must match.
    Denoiser(DenoiserConfig config, nn::ParameterSet params);

    const DenoiserConfig& config() const { return config_; }
    nn::ParameterSet& parameters() { return params_; }
    const nn::ParameterSet& parameters() const { return params_; }

    /// RegionFeatures condition: [R, d_fea] features and [R, flow_dims] guide
    /// scalars (plus [R, d_kg] embeddings when configured) -> [1, R, 1, d_h].
    nn::Tensor condition_vector(const nn::Tensor& features, const nn::Tensor& guide_scalars,
                                const nn::Tensor& kg) const;
    /// MaskedSequence condition: [B, R, T, flow_dims + 1] -> [B, R, T, d_h].
    nn::Tensor condition_sequence(const nn::Tensor& masked_window) const;

    /// Noise estimate for x_n [B, R, T, flow_dims] at per-sample steps.
    /// `condition` comes from condition_vector or condition_sequence.
    nn::Tensor forward(const nn::Tensor& x_n, const std::vector<int>& steps, const nn::Tensor& kg,
                       const nn::Tensor& condition, const ukg::RegionSubgraph& graph,
                       ForwardTrace* trace = nullptr) const;

    /// Gives the final output kernel random values (gradient checks need a
    /// non-degenerate head).
    void randomize_output_head(std::mt19937_64& rng);

private:
    void bind_layers();

    DenoiserConfig config_;
    nn::ParameterSet params_;
    std::vector<ResidualLayerParams> layers_;
};

/// Group label used for per-group gradient checks: the parameter name with its
/// layer index removed and its last component dropped, e.g. "layer.temporal".
std::string parameter_group(const std::string& name);

/// [R, flow_dims] guide scalars to a [B, R, T, flow_dims] tensor.
nn::Tensor broadcast_guide(const nn::Tensor& guide_scalars, int batch, int horizon);

}  // namespace flowdiff::denoiser
