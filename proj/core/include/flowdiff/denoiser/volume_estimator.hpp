#pragma once

#include <cstdint>
#include <random>

#include "flowdiff/diffusion/process.hpp"
#include "flowdiff/flow_tensor.hpp"
#include "flowdiff/nn/params.hpp"

namespace flowdiff::denoiser {

inline constexpr double kVolumeLeakySlope = 0.01;

/// Two affine maps with a leaky ReLU between, shared by all regions:
/// features [R, d_fea] -> volume [R, flow_dims].
class VolumeEstimator {
public:
    VolumeEstimator() = default;
    VolumeEstimator(int feature_dim, int hidden, int flow_dims, std::mt19937_64& rng);
    /// Adopts existing tensors named volume.w1, volume.b1, volume.w2, volume.b2.
    explicit VolumeEstimator(nn::ParameterSet params);

    nn::Tensor forward(const nn::Tensor& features) const;

    nn::ParameterSet& parameters() { return params_; }
    const nn::ParameterSet& parameters() const { return params_; }
    int feature_dim() const;
    int flow_dims() const;
    int hidden() const;

private:
    nn::ParameterSet params_;
};

nn::Tensor features_tensor(const Matrix& features);
Matrix to_matrix(const nn::Tensor& t);

/// Estimator output for `features`, broadcast over `horizon` steps.
diffusion::VolumeGuide estimate_volume(const VolumeEstimator& estimator, const Matrix& features,
                                       std::size_t horizon);

}  // namespace flowdiff::denoiser
