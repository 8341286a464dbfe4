#include "flowdiff/diffusion/schedule.hpp"

#include <cmath>
#include <string>

#include "flowdiff/error.hpp"

namespace flowdiff::diffusion {

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
    if (betas_.empty()) fail("diffusion", "schedule needs at least one step");
    double prod = 1.0;
    for (double b : betas_) {
        if (!(b > 0.0 && b < 1.0)) fail("diffusion", "beta values must lie in (0, 1)");
        alphas_.push_back(1.0 - b);
        prod *= 1.0 - b;
        alpha_bars_.push_back(prod);
    }
}

std::size_t NoiseSchedule::index(int n) const {
    require_step(n);
    return static_cast<std::size_t>(n - 1);
}

void NoiseSchedule::require_step(int n, int first) const {
    if (n < first || n > steps()) {
        fail("diffusion", "step " + std::to_string(n) + " outside [" + std::to_string(first) + ", " +
                              std::to_string(steps()) + "]");
    }
}

PosteriorCoefficients NoiseSchedule::posterior_coefficients(int n) const {
    require_step(n, 2);
    const double ab = alpha_bar(n);
    const double ab_prev = alpha_bar(n - 1);
    const double a = alpha(n);
    const double denom = 1.0 - ab;
    PosteriorCoefficients c;
    c.x0 = std::sqrt(ab_prev) * beta(n) / denom;
    c.xn = std::sqrt(a) * (1.0 - ab_prev) / denom;
    c.guide = 1.0 + (std::sqrt(ab) - 1.0) * (std::sqrt(a) + std::sqrt(ab_prev)) / denom;
    return c;
}

double NoiseSchedule::posterior_variance(int n) const {
    require_step(n, 2);
    return (1.0 - alpha_bar(n - 1)) / (1.0 - alpha_bar(n)) * beta(n);
}

NoiseSchedule make_linear_schedule(int steps, double beta_start, double beta_end) {
    if (steps < 1) fail("diffusion", "schedule needs N >= 1");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
        fail("diffusion", "need 0 < beta_start <= beta_end < 1");
    }
    std::vector<double> betas(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) {
        const double t = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
        betas[static_cast<std::size_t>(i)] = beta_start + t * (beta_end - beta_start);
    }
    return NoiseSchedule(std::move(betas));
}

}  // namespace flowdiff::diffusion
