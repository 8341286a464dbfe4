#include "flowdiff/denoiser/volume_estimator.hpp"

#include "flowdiff/error.hpp"
#include "flowdiff/nn/ops.hpp"

namespace flowdiff::denoiser {

VolumeEstimator::VolumeEstimator(int feature_dim, int hidden, int flow_dims, std::mt19937_64& rng) {
    if (feature_dim < 1 || hidden < 1 || flow_dims < 1) fail("denoiser", "volume estimator sizes must be positive");
    params_.add("volume.w1", nn::uniform_fan_in({feature_dim, hidden}, feature_dim, rng));
    params_.add("volume.b1", nn::uniform_fan_in({hidden}, feature_dim, rng));
    params_.add("volume.w2", nn::uniform_fan_in({hidden, flow_dims}, hidden, rng));
    params_.add("volume.b2", nn::uniform_fan_in({flow_dims}, hidden, rng));
}

VolumeEstimator::VolumeEstimator(nn::ParameterSet params) : params_(std::move(params)) {
    for (const char* name : {"volume.w1", "volume.b1", "volume.w2", "volume.b2"}) {
        if (!params_.contains(name)) fail("denoiser", std::string("volume estimator is missing ") + name);
    }
}

nn::Tensor VolumeEstimator::forward(const nn::Tensor& features) const {
    if (features.rank() != 2 || features.dim(1) != feature_dim()) {
        fail("denoiser", "volume estimator expects [regions, " + std::to_string(feature_dim()) +
                             "] features, got " + nn::shape_string(features.shape()));
    }
    auto h = nn::leaky_relu(nn::linear(features, params_.get("volume.w1"), params_.get("volume.b1")),
                            kVolumeLeakySlope);
    return nn::linear(h, params_.get("volume.w2"), params_.get("volume.b2"));
}

int VolumeEstimator::feature_dim() const { return params_.get("volume.w1").dim(0); }
int VolumeEstimator::hidden() const { return params_.get("volume.w1").dim(1); }
int VolumeEstimator::flow_dims() const { return params_.get("volume.w2").dim(1); }

nn::Tensor features_tensor(const Matrix& features) {
    return nn::Tensor::constant({static_cast<int>(features.rows()), static_cast<int>(features.cols())},
                                std::vector<double>(features.data(), features.data() + features.size()));
}

Matrix to_matrix(const nn::Tensor& t) {
    if (t.rank() != 2) fail("denoiser", "to_matrix expects a rank-2 tensor");
    Matrix m(t.dim(0), t.dim(1));
    std::copy(t.value().begin(), t.value().end(), m.data());
    return m;
}

diffusion::VolumeGuide estimate_volume(const VolumeEstimator& estimator, const Matrix& features,
                                       std::size_t horizon) {
    nn::NoGradGuard no_grad;
    return diffusion::expand_volume(to_matrix(estimator.forward(features_tensor(features))), horizon);
}

}  // namespace flowdiff::denoiser
