#pragma once

#include "flowdiff/diffusion/schedule.hpp"
#include "flowdiff/flow_tensor.hpp"

namespace flowdiff::diffusion {

/// The guide is a FlowTensor that is constant along the horizon axis.
using VolumeGuide = FlowTensor;

/// sqrt(ab) x0 + (1 - sqrt(ab)) guide + sqrt(1 - ab) noise, ab = alpha_bar(n).
FlowTensor forward_marginal(const FlowTensor& x0, const VolumeGuide& guide, int n,
                            const NoiseSchedule& schedule, const FlowTensor& noise);

/// Posterior mean of x_{n-1} given x_n, the x0 estimate and the guide (n >= 2).
FlowTensor posterior_mean(const FlowTensor& x_n, const FlowTensor& x0_hat, const VolumeGuide& guide,
                          int n, const NoiseSchedule& schedule);

/// Inverse of forward_marginal for a noise estimate.
FlowTensor predict_x0(const FlowTensor& x_n, const FlowTensor& predicted_noise, const VolumeGuide& guide,
                      int n, const NoiseSchedule& schedule);

/// Mean absolute deviation.
double diffusion_loss(const FlowTensor& predicted_noise, const FlowTensor& true_noise);
/// Mean squared deviation.
double volume_loss(const VolumeGuide& predicted, const VolumeGuide& truth);

/// Per region and channel mean over the horizon, broadcast back over it.
VolumeGuide true_volume(const FlowTensor& x0);

/// Broadcasts a (regions x channels) matrix over `horizon` steps.
VolumeGuide expand_volume(const Matrix& per_region, std::size_t horizon);

}  // namespace flowdiff::diffusion
