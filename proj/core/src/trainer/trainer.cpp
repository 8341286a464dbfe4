#include "flowdiff/trainer/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "flowdiff/diffusion/sampler.hpp"
#include "flowdiff/error.hpp"
#include "flowdiff/nn/ops.hpp"

namespace flowdiff::trainer {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_number(double v) {
    if (std::isnan(v)) return "";
    std::ostringstream ss;
    ss.precision(10);
    ss << v;
    return ss.str();
}

}  // namespace

void TrainConfig::validate() const {
    if (pretrain_epochs < 0) fail("trainer", "pretrain_epochs must be >= 0");
    if (alternation && *alternation < 1) fail("trainer", "alternation must be >= 1 or none");
    if (!(learning_rate > 0.0)) fail("trainer", "learning rate must be > 0");
    if (epochs < 0) fail("trainer", "epochs must be >= 0");
    if (batch_size < 1) fail("trainer", "batch_size must be >= 1");
}

const char* phase_name(Phase p) {
    switch (p) {
        case Phase::Pretrain: return "pretrain";
        case Phase::Diffusion: return "diffusion";
        case Phase::Volume: return "volume";
    }
    return "?";
}

std::string TrainLog::to_csv() const {
    std::string out = "epoch,phase,l1,l2,seconds,phi_grad_norm\n";
    for (const auto& r : records) {
        out += std::to_string(r.epoch) + ',' + phase_name(r.phase) + ',' + format_number(r.l1) + ',' +
               format_number(r.l2) + ',' + format_number(r.seconds) + ',' + format_number(r.phi_grad_norm) + '\n';
    }
    return out;
}

nn::Tensor Model::guide_scalars(const nn::Tensor& features) const {
    if (use_guide) return estimator.forward(features);
    return nn::Tensor::constant({features.dim(0), denoiser.config().flow_dims}, 0.0);
}

nn::ParameterSet Model::all_parameters() const {
    nn::ParameterSet all = denoiser.parameters();
    all.append(estimator.parameters());
    return all;
}

Model make_model(const ModelConfig& config, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Model m;
    m.denoiser = denoiser::Denoiser(config.denoiser, rng);
    m.estimator = denoiser::VolumeEstimator(std::max(1, config.denoiser.feature_dim), config.volume_hidden,
                                            config.denoiser.flow_dims, rng);
    m.use_guide = config.use_guide;
    return m;
}

void TrainingData::validate() const {
    if (days.empty()) fail("trainer", "no training days");
    const auto R = graph.size();
    for (const auto& d : days) {
        if (!d.same_shape(days.front())) fail("trainer", "training days have inconsistent shapes");
    }
    if (days.front().regions() != R) fail("trainer", "flow tensors and subgraph disagree on region count");
    if (static_cast<std::size_t>(features.rows()) != R) fail("trainer", "feature rows do not match regions");
    if (static_cast<std::size_t>(kg.rows()) != R) fail("trainer", "KG embedding rows do not match regions");
}

Matrix mean_true_volume(const std::vector<FlowTensor>& days) {
    if (days.empty()) fail("trainer", "no flow samples for the volume target");
    const auto& f = days.front();
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(f.regions()), static_cast<Eigen::Index>(f.channels()));
    for (const auto& d : days) {
        for (std::size_t r = 0; r < d.regions(); ++r) {
            for (std::size_t t = 0; t < d.horizon(); ++t) {
                for (std::size_t c = 0; c < d.channels(); ++c) {
                    m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) += d(r, t, c);
                }
            }
        }
    }
    return m / static_cast<double>(days.size() * f.horizon());
}

nn::Tensor matrix_tensor(const Matrix& m) { return denoiser::features_tensor(m); }

nn::Tensor stack_flows(const std::vector<const FlowTensor*>& flows) {
    if (flows.empty()) fail("trainer", "cannot stack an empty batch");
    const auto& f = *flows.front();
    std::vector<double> v;
    v.reserve(flows.size() * f.size());
    for (const auto* x : flows) {
        if (!x->same_shape(f)) fail("trainer", "batch members differ in shape");
        v.insert(v.end(), x->values().begin(), x->values().end());
    }
    return nn::Tensor::constant({static_cast<int>(flows.size()), static_cast<int>(f.regions()),
                                 static_cast<int>(f.horizon()), static_cast<int>(f.channels())},
                                std::move(v));
}

Trainer::Trainer(Model& model, const TrainingData& data, const diffusion::NoiseSchedule& schedule,
                 TrainConfig config)
    : model_(model),
      data_(data),
      schedule_(schedule),
      config_(config),
      adam_({.lr = config.learning_rate, .max_grad_norm = config.max_grad_norm}),
      rng_(config.seed) {
    config_.validate();
    data_.validate();
    if (data_.days.front().channels() != static_cast<std::size_t>(model_.denoiser.config().flow_dims)) {
        fail("trainer", "flow channels do not match the model");
    }
    features_ = matrix_tensor(data_.features);
    kg_ = matrix_tensor(data_.kg);
    volume_target_ = matrix_tensor(mean_true_volume(data_.days));
}

double Trainer::volume_step() {
    auto& phi = model_.estimator.parameters();
    phi.zero_grad();
    auto loss = nn::mean_squared_error(model_.estimator.forward(features_), volume_target_);
    loss.backward();
    adam_.step(phi.tensors());
    return loss.item();
}

double Trainer::diffusion_epoch() {
    const auto& days = data_.days;
    std::vector<std::size_t> order(days.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng_);

    auto& theta = model_.denoiser.parameters();
    auto& phi = model_.estimator.parameters();
    std::vector<nn::Tensor> trainable = theta.tensors();
    if (model_.use_guide) {
        for (const auto& t : phi.tensors()) trainable.push_back(t);
    }
    std::uniform_int_distribution<int> step_dist(1, schedule_.steps());
    std::normal_distribution<double> normal(0.0, 1.0);

    const auto& shape = days.front();
    const int R = static_cast<int>(shape.regions());
    const int T = static_cast<int>(shape.horizon());
    const int F = static_cast<int>(shape.channels());
    const std::size_t per = shape.size();

    double loss_sum = 0.0;
    std::size_t batches = 0;
    last_phi_grad_norm_ = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config_.batch_size)) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config_.batch_size));
        const int B = static_cast<int>(end - start);
        std::vector<int> steps(static_cast<std::size_t>(B));
        for (int& n : steps) n = step_dist(rng_);
        std::vector<double> eps(static_cast<std::size_t>(B) * per);
        for (double& e : eps) e = normal(rng_);

        // x_n = sqrt(ab) x0 + sqrt(1 - ab) eps + (1 - sqrt(ab)) guide; only the
        // guide term carries a gradient.
        std::vector<double> fixed(eps.size());
        std::vector<double> guide_coef(eps.size());
        for (int b = 0; b < B; ++b) {
            const double ab = schedule_.alpha_bar(steps[static_cast<std::size_t>(b)]);
            const double a = std::sqrt(ab), c = std::sqrt(1.0 - ab);
            const auto x0 = days[order[start + static_cast<std::size_t>(b)]].values();
            for (std::size_t i = 0; i < per; ++i) {
                const std::size_t k = static_cast<std::size_t>(b) * per + i;
                fixed[k] = a * x0[i] + c * eps[k];
                guide_coef[k] = 1.0 - a;
            }
        }
        const nn::Shape full{B, R, T, F};
        theta.zero_grad();
        phi.zero_grad();
        auto g = model_.guide_scalars(features_);
        auto cond = model_.denoiser.condition_vector(features_, g, kg_);
        nn::Tensor x_n = nn::Tensor::constant(full, std::move(fixed));
        if (model_.use_guide) {
            x_n = nn::add(x_n, nn::mul(nn::Tensor::constant(full, std::move(guide_coef)),
                                       denoiser::broadcast_guide(g, B, T)));
        }
        auto eps_hat = model_.denoiser.forward(x_n, steps, kg_, cond, data_.graph);
        auto loss = nn::mean_abs_error(eps_hat, nn::Tensor::constant(full, std::move(eps)));
        const double value = loss.item();
        if (!std::isfinite(value)) return value;
        loss.backward();
        if (model_.use_guide) last_phi_grad_norm_ = std::max(last_phi_grad_norm_, phi.grad_norm());
        adam_.step(trainable);
        loss_sum += value;
        ++batches;
    }
    return loss_sum / static_cast<double>(batches);
}

bool Trainer::record(TrainResult& result, Phase phase, double l1, double l2, double seconds) {
    EpochRecord rec;
    rec.epoch = ++epoch_counter_;
    rec.phase = phase;
    rec.l1 = l1;
    rec.l2 = l2;
    rec.seconds = seconds;
    rec.phi_grad_norm = phase == Phase::Diffusion ? last_phi_grad_norm_ : 0.0;
    const double loss = phase == Phase::Diffusion ? l1 : l2;
    auto all = model_.all_parameters();
    if (!std::isfinite(loss) || !all.all_finite()) {
        all.restore(last_finite_);
        result.aborted = true;
        result.abort_reason = std::string("non-finite loss in ") + phase_name(phase) + " epoch " +
                              std::to_string(rec.epoch) + "; restored the last finite parameters";
        spdlog::error("trainer: {}", result.abort_reason);
        return false;
    }
    result.log.records.push_back(rec);
    last_finite_ = all.snapshot();
    return true;
}

TrainResult Trainer::run() {
    using clock = std::chrono::steady_clock;
    auto seconds_since = [](clock::time_point t0) {
        return std::chrono::duration<double>(clock::now() - t0).count();
    };
    TrainResult result;
    last_finite_ = model_.all_parameters().snapshot();

    if (model_.use_guide) {
        for (int e = 0; e < config_.pretrain_epochs; ++e) {
            const auto t0 = clock::now();
            const double l2 = volume_step();
            if (!record(result, Phase::Pretrain, kNaN, l2, seconds_since(t0))) return result;
        }
    }
    for (int e = 1; e <= config_.epochs; ++e) {
        const auto t0 = clock::now();
        const double l1 = diffusion_epoch();
        if (!record(result, Phase::Diffusion, l1, kNaN, seconds_since(t0))) return result;
        if (e % 10 == 0 || e == 1) spdlog::info("trainer: epoch {}/{} L1 {:.5f}", e, config_.epochs, l1);
        if (model_.use_guide && config_.alternation && e % *config_.alternation == 0) {
            const auto t1 = clock::now();
            const double l2 = volume_step();
            if (!record(result, Phase::Volume, kNaN, l2, seconds_since(t1))) return result;
        }
    }
    return result;
}

}  // namespace flowdiff::trainer
