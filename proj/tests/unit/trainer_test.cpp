#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <unistd.h>

#include "flowdiff/data/synthetic.hpp"
#include "flowdiff/denoiser/volume_estimator.hpp"
#include "flowdiff/diffusion/sample_io.hpp"
#include "flowdiff/diffusion/schedule.hpp"
#include "flowdiff/error.hpp"
#include "flowdiff/trainer/checkpoint.hpp"
#include "flowdiff/trainer/generate.hpp"
#include "flowdiff/trainer/predictive.hpp"
#include "flowdiff/trainer/trainer.hpp"
#include "flowdiff/ukg/subgraph.hpp"

using namespace flowdiff;
using namespace flowdiff::trainer;

namespace {

ModelConfig tiny_model(int feature_dim) {
    ModelConfig mc;
    mc.denoiser.flow_dims = 2;
    mc.denoiser.feature_dim = feature_dim;
    mc.denoiser.kg_dim = 4;
    mc.denoiser.hidden = 8;
    mc.denoiser.layers = 1;
    mc.denoiser.heads = 2;
    mc.denoiser.ffn_multiplier = 2;
    mc.volume_hidden = 8;
    return mc;
}

class SyntheticTraining : public ::testing::Test {
protected:
    void SetUp() override {
        data::SyntheticConfig sc;
        sc.num_days = 8;
        sc.test_regions = 0;
        sc.seed = 3;
        synth = data::make_synthetic(sc);
        ds = synth.dataset();
        ids = ds.ids(ds.train_regions);
        td.days = ds.normalized_days(ds.train_regions);
        td.features = ds.features_of(ds.train_regions);
        td.kg = Matrix::Random(static_cast<Eigen::Index>(ids.size()), 4);
        td.graph = ukg::empty_subgraph(ids);
        for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
            td.graph.adjacency[0][i].push_back(static_cast<int>(i + 1));
            td.graph.adjacency[0][i + 1].push_back(static_cast<int>(i));
        }
        for (auto& nb : td.graph.adjacency[0]) std::sort(nb.begin(), nb.end());
    }
    TrainConfig config(int pretrain, std::optional<int> alternation, int epochs) const {
        TrainConfig tc;
        tc.pretrain_epochs = pretrain;
        tc.alternation = alternation;
        tc.epochs = epochs;
        tc.batch_size = 4;
        tc.learning_rate = 2e-3;
        tc.seed = 9;
        return tc;
    }
    GenerationInputs inputs() const { return {td.features, td.kg, td.graph, ds.horizon()}; }

    data::SyntheticData synth;
    data::Dataset ds;
    std::vector<std::string> ids;
    TrainingData td;
    diffusion::NoiseSchedule schedule = diffusion::make_linear_schedule(30, 1e-4, 0.3);
};

}  // namespace

TEST_F(SyntheticTraining, ZeroBudgetsLeaveParametersUnchanged) {
    auto model = make_model(tiny_model(static_cast<int>(td.features.cols())), 1);
    const auto before = model.all_parameters().hash();
    const auto result = Trainer(model, td, schedule, config(0, 10, 0)).run();
    EXPECT_TRUE(result.log.records.empty());
    EXPECT_EQ(model.all_parameters().hash(), before);
}

TEST_F(SyntheticTraining, PretrainingDescends) {
    auto model = make_model(tiny_model(static_cast<int>(td.features.cols())), 1);
    const auto result = Trainer(model, td, schedule, config(30, 10, 0)).run();
    ASSERT_EQ(result.log.records.size(), 30u);
    EXPECT_LE(result.log.records.back().l2, result.log.records.front().l2);
}

TEST_F(SyntheticTraining, PhaseSequenceFollowsAlternation) {
    auto model = make_model(tiny_model(static_cast<int>(td.features.cols())), 1);
    const auto result = Trainer(model, td, schedule, config(3, 2, 5)).run();
    std::vector<Phase> phases;
    for (const auto& r : result.log.records) phases.push_back(r.phase);
    using P = Phase;
    const std::vector<Phase> expected{P::Pretrain,  P::Pretrain,  P::Pretrain, P::Diffusion, P::Diffusion,
                                      P::Volume,    P::Diffusion, P::Diffusion, P::Volume,   P::Diffusion};
    EXPECT_EQ(phases, expected);
    for (std::size_t i = 0; i < result.log.records.size(); ++i) {
        EXPECT_EQ(result.log.records[i].epoch, static_cast<int>(i + 1));
    }
}

TEST_F(SyntheticTraining, FrozenEstimatorSkipsVolumePhases) {
    auto model = make_model(tiny_model(static_cast<int>(td.features.cols())), 1);
    const auto result = Trainer(model, td, schedule, config(2, std::nullopt, 4)).run();
    for (std::size_t i = 2; i < result.log.records.size(); ++i) {
        EXPECT_EQ(result.log.records[i].phase, Phase::Diffusion);
    }
}

TEST_F(SyntheticTraining, DiffusionPhaseUpdatesBothNetworks) {
    auto model = make_model(tiny_model(static_cast<int>(td.features.cols())), 1);
    Trainer t(model, td, schedule, config(0, 1, 1));
    const auto theta = model.denoiser.parameters().hash();
    const auto phi = model.estimator.parameters().hash();
    t.diffusion_epoch();
    EXPECT_GT(t.last_phi_grad_norm(), 0.0);
    EXPECT_NE(model.denoiser.parameters().hash(), theta);
    EXPECT_NE(model.estimator.parameters().hash(), phi);
}

TEST_F(SyntheticTraining, VolumePhaseLeavesDenoiserUntouched) {
    auto model = make_model(tiny_model(static_cast<int>(td.features.cols())), 1);
    Trainer t(model, td, schedule, config(0, 1, 1));
    const auto theta = model.denoiser.parameters().hash();
    const auto phi = model.estimator.parameters().hash();
    t.volume_step();
    EXPECT_EQ(model.denoiser.parameters().hash(), theta);
    EXPECT_NE(model.estimator.parameters().hash(), phi);
}

TEST_F(SyntheticTraining, SeededRunsAreBitwiseIdentical) {
    auto a = make_model(tiny_model(static_cast<int>(td.features.cols())), 4);
    auto b = make_model(tiny_model(static_cast<int>(td.features.cols())), 4);
    Trainer(a, td, schedule, config(2, 2, 3)).run();
    Trainer(b, td, schedule, config(2, 2, 3)).run();
    EXPECT_EQ(a.all_parameters().hash(), b.all_parameters().hash());
}

TEST_F(SyntheticTraining, DiffusionLossDropsWithTraining) {
    auto model = make_model(tiny_model(static_cast<int>(td.features.cols())), 2);
    auto tc = config(10, 10, 400);
    tc.learning_rate = 5e-3;
    const auto result = Trainer(model, td, schedule, tc).run();
    double first = 0.0, last = 0.0;
    for (const auto& r : result.log.records) {
        if (r.phase != Phase::Diffusion) continue;
        if (first == 0.0) first = r.l1;
        last = r.l1;
    }
    EXPECT_LT(last, 0.25 * first) << "first " << first << " last " << last;
}

TEST_F(SyntheticTraining, CheckpointRoundTripReproducesGeneration) {
    auto model = make_model(tiny_model(static_cast<int>(td.features.cols())), 1);
    Trainer(model, td, schedule, config(2, 2, 2)).run();
    CheckpointManifest manifest;
    manifest.model = tiny_model(static_cast<int>(td.features.cols()));
    manifest.steps = 30;
    manifest.beta_end = 0.3;
    manifest.flow_mean = ds.flow_norm.mean;
    manifest.flow_std = ds.flow_norm.std;
    manifest.channels = ds.channels;
    manifest.feature_names = ds.feature_names;
    const auto path = std::filesystem::temp_directory_path() / ("flowdiff_ckpt_" + std::to_string(::getpid()) + ".bin");
    save_checkpoint(path, manifest, model);
    const auto loaded = load_checkpoint(path);
    EXPECT_EQ(loaded.model.all_parameters().hash(), model.all_parameters().hash());

    Checkpoint original{manifest, model};
    const auto a = generate_for_regions(original, inputs(), 2, 17);
    const auto b = generate_for_regions(loaded, inputs(), 2, 17);
    EXPECT_EQ(diffusion::sample_hash(a), diffusion::sample_hash(b));
    for (const auto& s : a) {
        EXPECT_EQ(s.space(), FlowSpace::Raw);
        for (double v : s.values()) EXPECT_GE(v, 0.0);
    }
    std::filesystem::remove(path);
}

TEST_F(SyntheticTraining, GenerationIsSeededAndUsesEstimatorGuide) {
    auto model = make_model(tiny_model(static_cast<int>(td.features.cols())), 1);
    const auto a = generate_normalized(model, schedule, inputs(), 1, 5);
    const auto b = generate_normalized(model, schedule, inputs(), 1, 5);
    EXPECT_EQ(a, b);
    const auto guide = generation_guide(model, inputs());
    EXPECT_EQ(guide, denoiser::estimate_volume(model.estimator, td.features, ds.horizon()));
    model.use_guide = false;
    const auto zero = generation_guide(model, inputs());
    for (double v : zero.values()) EXPECT_EQ(v, 0.0);
}

TEST_F(SyntheticTraining, FeatureMismatchIsAnError) {
    auto model = make_model(tiny_model(static_cast<int>(td.features.cols())), 1);
    auto in = inputs();
    in.features = Matrix::Zero(in.features.rows(), in.features.cols() + 1);
    EXPECT_THROW(generate_normalized(model, schedule, in, 1, 5), Error);
}

TEST(Denormalize, ScalesShiftsAndClamps) {
    FlowTensor x(1, 2, 1);
    x(0, 0, 0) = 1.0;
    x(0, 1, 0) = -3.0;
    const auto raw = denormalize(x, 10.0, 4.0);
    EXPECT_EQ(raw(0, 0, 0), 14.0);
    EXPECT_EQ(raw(0, 1, 0), 0.0);
    EXPECT_EQ(raw.space(), FlowSpace::Raw);
}

TEST(VolumePretraining, ConstantFlowConverges) {
    // One region with constant flow 5 and a single constant feature.
    TrainingData td;
    td.days = {FlowTensor(1, 24, 1, 5.0)};
    td.features = Matrix::Ones(1, 1);
    td.kg = Matrix::Zero(1, 4);
    std::vector<std::string> ids{"only"};
    td.graph = ukg::empty_subgraph(ids);
    ModelConfig mc = tiny_model(1);
    mc.denoiser.flow_dims = 1;
    mc.volume_hidden = 32;
    auto model = make_model(mc, 3);
    TrainConfig tc;
    tc.pretrain_epochs = 100;
    tc.epochs = 0;
    tc.learning_rate = 1e-2;
    const auto schedule = diffusion::make_linear_schedule(10, 1e-4, 0.2);
    Trainer(model, td, schedule, tc).run();
    const auto guide = denoiser::estimate_volume(model.estimator, td.features, 1);
    EXPECT_NEAR(guide(0, 0, 0), 5.0, 0.05) << "within 1%";
}

TEST(Windows, CutAcrossDaysAndMask) {
    std::vector<FlowTensor> days;
    for (int d = 0; d < 2; ++d) {
        FlowTensor x(2, 24, 1);
        for (std::size_t t = 0; t < 24; ++t) {
            x(0, t, 0) = d * 24.0 + static_cast<double>(t);
            x(1, t, 0) = -(d * 24.0 + static_cast<double>(t));
        }
        days.push_back(std::move(x));
    }
    const auto windows = make_windows(days, {12, 12, 4});
    ASSERT_EQ(windows.size(), 7u);  // starts 0, 4, ..., 24
    EXPECT_EQ(windows[1](0, 0, 0), 4.0);
    EXPECT_EQ(windows[6](0, 23, 0), 47.0);

    const auto masked = masked_window(windows[2], 12);
    ASSERT_EQ(masked.channels(), 2u);
    for (std::size_t r = 0; r < 2; ++r) {
        for (std::size_t t = 0; t < 24; ++t) {
            const bool observed = t < 12;
            EXPECT_EQ(masked(r, t, 0), observed ? windows[2](r, t, 0) : 0.0);
            EXPECT_EQ(masked(r, t, 1), observed ? 1.0 : 0.0);
        }
    }
    EXPECT_THROW(make_windows({FlowTensor(1, 10, 1)}, {12, 12, 4}), Error);
}

TEST(Windows, CopyLastBaselineAndFutureMae) {
    FlowTensor w(1, 4, 1);
    for (std::size_t t = 0; t < 4; ++t) w(0, t, 0) = static_cast<double>(t);
    const auto base = copy_last_prediction(w, 2);
    EXPECT_EQ(base(0, 2, 0), 1.0);
    EXPECT_EQ(base(0, 3, 0), 1.0);
    EXPECT_DOUBLE_EQ(future_mae(base, w, 2), 1.5);
}

TEST(Predictive, GuideIsZeroAndTrainingRuns) {
    std::vector<FlowTensor> windows;
    std::mt19937_64 rng(4);
    std::normal_distribution<double> z;
    for (int i = 0; i < 4; ++i) {
        FlowTensor w(2, 8, 1);
        for (auto& v : w.values()) v = z(rng);
        windows.push_back(std::move(w));
    }
    PredictiveData pd;
    pd.windows = windows;
    pd.kg = Matrix::Random(2, 4);
    std::vector<std::string> ids{"a", "b"};
    pd.graph = ukg::empty_subgraph(ids);
    pd.history = 4;
    ModelConfig mc = tiny_model(0);
    mc.denoiser.flow_dims = 1;
    mc.denoiser.condition = denoiser::ConditionKind::MaskedSequence;
    mc.use_guide = false;
    auto model = make_model(mc, 1);
    const auto schedule = diffusion::make_linear_schedule(10, 1e-4, 0.3);
    TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 2;
    tc.pretrain_epochs = 0;
    const auto phi = model.estimator.parameters().hash();
    const auto result = PredictiveTrainer(model, pd, schedule, tc).run();
    EXPECT_EQ(result.log.records.size(), 3u);
    for (const auto& r : result.log.records) EXPECT_EQ(r.phase, Phase::Diffusion);
    EXPECT_EQ(model.estimator.parameters().hash(), phi);

    const auto pred = predict_window(model, schedule, windows[0], 4, pd.kg, pd.graph, 3, 7);
    EXPECT_TRUE(pred.same_shape(windows[0]));
    EXPECT_EQ(pred, predict_window(model, schedule, windows[0], 4, pd.kg, pd.graph, 3, 7));
}
