#pragma once

#include <vector>

namespace flowdiff::diffusion {

/// Weights of x0_hat, x_n and the guide in the posterior mean at step n.
struct PosteriorCoefficients {
    double x0 = 0.0;
    double xn = 0.0;
    double guide = 0.0;
};

/// Steps are 1-based: beta(1) .. beta(N).
class NoiseSchedule {
public:
    NoiseSchedule() = default;
    explicit NoiseSchedule(std::vector<double> betas);

    int steps() const noexcept { return static_cast<int>(betas_.size()); }
    double beta(int n) const { return betas_.at(index(n)); }
    double alpha(int n) const { return alphas_.at(index(n)); }
    double alpha_bar(int n) const { return alpha_bars_.at(index(n)); }
    /// alpha_bar(n - 1), with alpha_bar(0) = 1.
    double alpha_bar_prev(int n) const { return n == 1 ? 1.0 : alpha_bar(n - 1); }

    const std::vector<double>& betas() const noexcept { return betas_; }
    const std::vector<double>& alphas() const noexcept { return alphas_; }
    const std::vector<double>& alpha_bars() const noexcept { return alpha_bars_; }

    /// Defined for n in [2, N].
    PosteriorCoefficients posterior_coefficients(int n) const;
    /// beta_tilde(n) = (1 - alpha_bar(n-1)) / (1 - alpha_bar(n)) * beta(n).
    double posterior_variance(int n) const;

    void require_step(int n, int first = 1) const;

private:
    std::size_t index(int n) const;

    std::vector<double> betas_;
    std::vector<double> alphas_;
    std::vector<double> alpha_bars_;
};

NoiseSchedule make_linear_schedule(int steps, double beta_start, double beta_end);

}  // namespace flowdiff::diffusion
