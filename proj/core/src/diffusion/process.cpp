#include "flowdiff/diffusion/process.hpp"

#include <cmath>

#include "flowdiff/error.hpp"

namespace flowdiff::diffusion {

FlowTensor forward_marginal(const FlowTensor& x0, const VolumeGuide& guide, int n,
                            const NoiseSchedule& schedule, const FlowTensor& noise) {
    schedule.require_step(n);
    require_same_shape(x0, guide, "diffusion");
    require_same_shape(x0, noise, "diffusion");
    const double ab = schedule.alpha_bar(n);
    const double a = std::sqrt(ab);
    const double b = 1.0 - a;
    const double c = std::sqrt(1.0 - ab);
    FlowTensor out = x0;
    auto o = out.values();
    auto x = x0.values();
    auto g = guide.values();
    auto e = noise.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = a * x[i] + b * g[i] + c * e[i];
    return out;
}

FlowTensor posterior_mean(const FlowTensor& x_n, const FlowTensor& x0_hat, const VolumeGuide& guide,
                          int n, const NoiseSchedule& schedule) {
    require_same_shape(x_n, x0_hat, "diffusion");
    require_same_shape(x_n, guide, "diffusion");
    const auto c = schedule.posterior_coefficients(n);
    FlowTensor out = x_n;
    auto o = out.values();
    auto xn = x_n.values();
    auto x0 = x0_hat.values();
    auto g = guide.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = c.x0 * x0[i] + c.xn * xn[i] + c.guide * g[i];
    return out;
}

FlowTensor predict_x0(const FlowTensor& x_n, const FlowTensor& predicted_noise, const VolumeGuide& guide,
                      int n, const NoiseSchedule& schedule) {
    schedule.require_step(n);
    require_same_shape(x_n, predicted_noise, "diffusion");
    require_same_shape(x_n, guide, "diffusion");
    const double ab = schedule.alpha_bar(n);
    const double a = std::sqrt(ab);
    const double b = 1.0 - a;
    const double c = std::sqrt(1.0 - ab);
    FlowTensor out = x_n;
    auto o = out.values();
    auto xn = x_n.values();
    auto e = predicted_noise.values();
    auto g = guide.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = (xn[i] - b * g[i] - c * e[i]) / a;
    return out;
}

double diffusion_loss(const FlowTensor& predicted_noise, const FlowTensor& true_noise) {
    require_same_shape(predicted_noise, true_noise, "diffusion");
    if (predicted_noise.empty()) return 0.0;
    double s = 0.0;
    auto a = predicted_noise.values();
    auto b = true_noise.values();
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s / static_cast<double>(a.size());
}

double volume_loss(const VolumeGuide& predicted, const VolumeGuide& truth) {
    require_same_shape(predicted, truth, "diffusion");
    if (predicted.empty()) return 0.0;
    double s = 0.0;
    auto a = predicted.values();
    auto b = truth.values();
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s / static_cast<double>(a.size());
}

VolumeGuide true_volume(const FlowTensor& x0) {
    if (x0.horizon() == 0) fail("diffusion", "true_volume needs a horizon of at least 1");
    VolumeGuide out = x0;
    for (std::size_t r = 0; r < x0.regions(); ++r) {
        for (std::size_t c = 0; c < x0.channels(); ++c) {
            double s = 0.0;
            for (std::size_t t = 0; t < x0.horizon(); ++t) s += x0(r, t, c);
            s /= static_cast<double>(x0.horizon());
            for (std::size_t t = 0; t < x0.horizon(); ++t) out(r, t, c) = s;
        }
    }
    return out;
}

VolumeGuide expand_volume(const Matrix& per_region, std::size_t horizon) {
    VolumeGuide out(static_cast<std::size_t>(per_region.rows()), horizon,
                    static_cast<std::size_t>(per_region.cols()));
    for (std::size_t r = 0; r < out.regions(); ++r) {
        for (std::size_t t = 0; t < horizon; ++t) {
            for (std::size_t c = 0; c < out.channels(); ++c) {
                out(r, t, c) = per_region(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
            }
        }
    }
    return out;
}

}  // namespace flowdiff::diffusion
