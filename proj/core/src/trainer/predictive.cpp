#include "flowdiff/trainer/predictive.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include <spdlog/spdlog.h>

#include "flowdiff/error.hpp"
#include "flowdiff/nn/ops.hpp"

namespace flowdiff::trainer {

std::vector<FlowTensor> make_windows(const std::vector<FlowTensor>& days, const WindowConfig& config) {
    if (config.history < 1 || config.future < 1 || config.stride < 1) {
        fail("trainer", "history, future and stride must be >= 1");
    }
    if (days.empty()) fail("trainer", "no days to cut windows from");
    const auto& f = days.front();
    const std::size_t R = f.regions(), F = f.channels();
    const std::size_t total = f.horizon() * days.size();
    const std::size_t len = static_cast<std::size_t>(config.history + config.future);
    if (total < len) {
        fail("trainer", "series of " + std::to_string(total) + " steps is shorter than a window of " +
                            std::to_string(len));
    }
    auto at = [&](std::size_t r, std::size_t t, std::size_t c) {
        return days[t / f.horizon()](r, t % f.horizon(), c);
    };
    std::vector<FlowTensor> out;
    for (std::size_t start = 0; start + len <= total; start += static_cast<std::size_t>(config.stride)) {
        FlowTensor w(R, len, F, 0.0, f.space());
        for (std::size_t r = 0; r < R; ++r) {
            for (std::size_t t = 0; t < len; ++t) {
                for (std::size_t c = 0; c < F; ++c) w(r, t, c) = at(r, start + t, c);
            }
        }
        out.push_back(std::move(w));
    }
    return out;
}

FlowTensor masked_window(const FlowTensor& window, int history) {
    if (history < 0 || static_cast<std::size_t>(history) > window.horizon()) {
        fail("trainer", "history longer than the window");
    }
    const std::size_t F = window.channels();
    FlowTensor out(window.regions(), window.horizon(), F + 1, 0.0, window.space());
    for (std::size_t r = 0; r < window.regions(); ++r) {
        for (std::size_t t = 0; t < static_cast<std::size_t>(history); ++t) {
            for (std::size_t c = 0; c < F; ++c) out(r, t, c) = window(r, t, c);
            out(r, t, F) = 1.0;
        }
    }
    return out;
}

void PredictiveData::validate() const {
    if (windows.empty()) fail("trainer", "no prediction windows");
    for (const auto& w : windows) {
        if (!w.same_shape(windows.front())) fail("trainer", "windows differ in shape");
    }
    if (windows.front().regions() != graph.size()) fail("trainer", "windows and subgraph disagree on regions");
    if (history < 1 || static_cast<std::size_t>(history) >= windows.front().horizon()) {
        fail("trainer", "history must leave at least one future step");
    }
}

PredictiveTrainer::PredictiveTrainer(Model& model, const PredictiveData& data,
                                     const diffusion::NoiseSchedule& schedule, TrainConfig config)
    : model_(model),
      data_(data),
      schedule_(schedule),
      config_(config),
      adam_({.lr = config.learning_rate, .max_grad_norm = config.max_grad_norm}),
      rng_(config.seed) {
    config_.validate();
    data_.validate();
    if (model_.denoiser.config().condition != denoiser::ConditionKind::MaskedSequence) {
        fail("trainer", "prediction mode needs a masked-sequence conditioned model");
    }
    if (model_.use_guide) fail("trainer", "prediction mode uses the vanilla process (no guide)");
    kg_ = matrix_tensor(data_.kg);
}

double PredictiveTrainer::epoch() {
    const auto& windows = data_.windows;
    std::vector<std::size_t> order(windows.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng_);
    std::uniform_int_distribution<int> step_dist(1, schedule_.steps());
    std::normal_distribution<double> normal(0.0, 1.0);
    auto& theta = model_.denoiser.parameters();
    const auto trainable = theta.tensors();
    const std::size_t per = windows.front().size();

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config_.batch_size)) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config_.batch_size));
        const std::size_t B = end - start;
        std::vector<int> steps(B);
        for (int& n : steps) n = step_dist(rng_);
        std::vector<double> eps(B * per);
        for (double& e : eps) e = normal(rng_);
        std::vector<double> noisy(B * per);
        std::vector<FlowTensor> masks;
        std::vector<const FlowTensor*> mask_ptrs;
        masks.reserve(B);
        for (std::size_t b = 0; b < B; ++b) {
            const auto& w = windows[order[start + b]];
            const double ab = schedule_.alpha_bar(steps[b]);
            const double a = std::sqrt(ab), c = std::sqrt(1.0 - ab);
            for (std::size_t i = 0; i < per; ++i) noisy[b * per + i] = a * w.values()[i] + c * eps[b * per + i];
            masks.push_back(masked_window(w, data_.history));
        }
        for (const auto& m : masks) mask_ptrs.push_back(&m);
        const auto& f = windows.front();
        const nn::Shape full{static_cast<int>(B), static_cast<int>(f.regions()), static_cast<int>(f.horizon()),
                             static_cast<int>(f.channels())};
        theta.zero_grad();
        auto cond = model_.denoiser.condition_sequence(stack_flows(mask_ptrs));
        auto eps_hat = model_.denoiser.forward(nn::Tensor::constant(full, std::move(noisy)), steps, kg_, cond,
                                               data_.graph);
        auto loss = nn::mean_abs_error(eps_hat, nn::Tensor::constant(full, std::move(eps)));
        const double value = loss.item();
        if (!std::isfinite(value)) return value;
        loss.backward();
        adam_.step(trainable);
        loss_sum += value;
        ++batches;
    }
    return loss_sum / static_cast<double>(batches);
}

TrainResult PredictiveTrainer::run() {
    using clock = std::chrono::steady_clock;
    TrainResult result;
    auto params = model_.denoiser.parameters();
    auto last_finite = params.snapshot();
    for (int e = 1; e <= config_.epochs; ++e) {
        const auto t0 = clock::now();
        const double l1 = epoch();
        if (!std::isfinite(l1) || !params.all_finite()) {
            params.restore(last_finite);
            result.aborted = true;
            result.abort_reason = "non-finite loss in diffusion epoch " + std::to_string(e) +
                                  "; restored the last finite parameters";
            spdlog::error("trainer: {}", result.abort_reason);
            return result;
        }
        last_finite = params.snapshot();
        EpochRecord rec;
        rec.epoch = e;
        rec.phase = Phase::Diffusion;
        rec.l1 = l1;
        rec.l2 = std::numeric_limits<double>::quiet_NaN();
        rec.seconds = std::chrono::duration<double>(clock::now() - t0).count();
        result.log.records.push_back(rec);
        if (e % 10 == 0 || e == 1) spdlog::info("trainer: predictive epoch {}/{} L1 {:.5f}", e, config_.epochs, l1);
    }
    return result;
}

FlowTensor predict_window(const Model& model, const diffusion::NoiseSchedule& schedule, const FlowTensor& window,
                          int history, const Matrix& kg, const ukg::RegionSubgraph& graph, std::size_t num_samples,
                          std::uint64_t seed, const diffusion::SamplerOptions& options) {
    if (num_samples == 0) fail("trainer", "prediction needs at least one sample");
    nn::NoGradGuard no_grad;
    const auto kg_t = matrix_tensor(kg);
    const FlowTensor mask = masked_window(window, history);
    const FlowTensor zero_guide(window.regions(), window.horizon(), window.channels(), 0.0, window.space());

    diffusion::NoisePredictor predictor = [&](const std::vector<FlowTensor>& x, int n) {
        std::vector<const FlowTensor*> ptrs, mask_ptrs;
        for (const auto& t : x) {
            ptrs.push_back(&t);
            mask_ptrs.push_back(&mask);
        }
        const auto cond = model.denoiser.condition_sequence(stack_flows(mask_ptrs));
        const auto eps = model.denoiser.forward(stack_flows(ptrs), std::vector<int>(x.size(), n), kg_t, cond, graph);
        std::vector<FlowTensor> out;
        const std::size_t per = x.front().size();
        for (std::size_t s = 0; s < x.size(); ++s) {
            FlowTensor e = x[s];
            std::copy_n(eps.value().begin() + static_cast<std::ptrdiff_t>(s * per), per, e.values().begin());
            out.push_back(std::move(e));
        }
        return out;
    };
    const auto samples = diffusion::sample(predictor, zero_guide, schedule, num_samples, seed, options);
    FlowTensor mean = zero_guide;
    for (const auto& s : samples) {
        for (std::size_t i = 0; i < mean.size(); ++i) mean.values()[i] += s.values()[i];
    }
    for (double& v : mean.values()) v /= static_cast<double>(samples.size());
    return mean;
}

double future_mae(const FlowTensor& prediction, const FlowTensor& truth, int history) {
    require_same_shape(prediction, truth, "trainer");
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < truth.regions(); ++r) {
        for (std::size_t t = static_cast<std::size_t>(history); t < truth.horizon(); ++t) {
            for (std::size_t c = 0; c < truth.channels(); ++c) {
                s += std::abs(prediction(r, t, c) - truth(r, t, c));
                ++n;
            }
        }
    }
    if (n == 0) fail("trainer", "window has no future steps");
    return s / static_cast<double>(n);
}

FlowTensor copy_last_prediction(const FlowTensor& window, int history) {
    if (history < 1) fail("trainer", "copy-last baseline needs at least one observed step");
    FlowTensor out = window;
    for (std::size_t r = 0; r < window.regions(); ++r) {
        for (std::size_t t = static_cast<std::size_t>(history); t < window.horizon(); ++t) {
            for (std::size_t c = 0; c < window.channels(); ++c) {
                out(r, t, c) = window(r, static_cast<std::size_t>(history - 1), c);
            }
        }
    }
    return out;
}

}  // namespace flowdiff::trainer
