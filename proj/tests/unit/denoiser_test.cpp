#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "flowdiff/denoiser/denoiser.hpp"
#include "flowdiff/denoiser/kgst.hpp"
#include "flowdiff/denoiser/step_embedding.hpp"
#include "flowdiff/denoiser/volume_estimator.hpp"
#include "flowdiff/error.hpp"
#include "flowdiff/nn/ops.hpp"
#include "flowdiff/ukg/subgraph.hpp"

using namespace flowdiff;
using namespace flowdiff::denoiser;
using nn::Shape;
using nn::Tensor;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> z(0.0, scale);
    std::vector<double> v(nn::numel(shape));
    for (auto& x : v) x = z(rng);
    return Tensor::parameter(std::move(shape), std::move(v));
}

std::vector<double> values(const Tensor& t) { return {t.value().begin(), t.value().end()}; }

ukg::RegionSubgraph ring_graph(int regions) {
    std::vector<std::string> ids;
    for (int i = 0; i < regions; ++i) ids.push_back("r" + std::to_string(i));
    auto g = ukg::empty_subgraph(ids);
    for (int i = 0; i < regions; ++i) {
        std::vector<int> nb{(i + regions - 1) % regions, (i + 1) % regions};
        std::sort(nb.begin(), nb.end());
        g.adjacency[0].at(static_cast<std::size_t>(i)) = nb;
    }
    g.adjacency[2].at(0) = {2};
    g.adjacency[2].at(2) = {0};
    return g;
}

TemporalParams random_temporal(int d, int ff, std::mt19937_64& rng) {
    TemporalParams p;
    p.ln1_gamma = random_tensor({d}, rng);
    p.ln1_beta = random_tensor({d}, rng);
    p.qkv_w = random_tensor({d, 3 * d}, rng, 0.5);
    p.qkv_b = random_tensor({3 * d}, rng);
    p.out_w = random_tensor({d, d}, rng, 0.5);
    p.out_b = random_tensor({d}, rng);
    p.ln2_gamma = random_tensor({d}, rng);
    p.ln2_beta = random_tensor({d}, rng);
    p.ffn_w1 = random_tensor({d, ff}, rng, 0.5);
    p.ffn_b1 = random_tensor({ff}, rng);
    p.ffn_w2 = random_tensor({ff, d}, rng, 0.5);
    p.ffn_b2 = random_tensor({d}, rng);
    p.heads = 2;
    return p;
}

// Permutes axis 1 (regions) of a [B, R, ...] or [R, ...] tensor's values.
std::vector<double> permute_regions(const Tensor& t, const std::vector<std::size_t>& perm, int region_axis) {
    const auto& s = t.shape();
    std::size_t outer = 1, inner = 1;
    for (int a = 0; a < region_axis; ++a) outer *= static_cast<std::size_t>(s[static_cast<std::size_t>(a)]);
    for (std::size_t a = static_cast<std::size_t>(region_axis) + 1; a < s.size(); ++a) inner *= static_cast<std::size_t>(s[a]);
    const std::size_t R = static_cast<std::size_t>(s[static_cast<std::size_t>(region_axis)]);
    std::vector<double> out(t.numel());
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t r = 0; r < R; ++r) {
            for (std::size_t i = 0; i < inner; ++i) out[(o * R + r) * inner + i] = t.value()[(o * R + perm[r]) * inner + i];
        }
    }
    return out;
}

DenoiserConfig small_config() {
    DenoiserConfig c;
    c.flow_dims = 2;
    c.hidden = 8;
    c.layers = 2;
    c.kg_dim = 4;
    c.heads = 2;
    c.ffn_multiplier = 2;
    c.feature_dim = 3;
    return c;
}

}  // namespace

TEST(HorizonEncoding, MatchesTransformerTable) {
    const int T = 5, d = 6;
    const auto table = horizon_encoding(T, d);
    ASSERT_EQ(table.size(), static_cast<std::size_t>(T * d));
    for (int t = 0; t < T; ++t) {
        for (int i = 0; i < d / 2; ++i) {
            const double angle = t / std::pow(10000.0, 2.0 * i / d);
            EXPECT_DOUBLE_EQ(table[static_cast<std::size_t>(t * d + 2 * i)], std::sin(angle));
            EXPECT_DOUBLE_EQ(table[static_cast<std::size_t>(t * d + 2 * i + 1)], std::cos(angle));
        }
    }
}

TEST(HorizonEncoding, RowsAreDistinct) {
    const int T = 24, d = 8;
    const auto table = horizon_encoding(T, d);
    for (int a = 0; a < T; ++a) {
        for (int b = a + 1; b < T; ++b) {
            double dist = 0.0;
            for (int i = 0; i < d; ++i) dist += std::fabs(table[static_cast<std::size_t>(a * d + i)] - table[static_cast<std::size_t>(b * d + i)]);
            EXPECT_GT(dist, 1e-3) << a << " vs " << b;
        }
    }
}

TEST(StepEmbedding, ZeroStepIsSinZerosThenCosOnes) {
    const auto e = step_embedding(0.0);
    for (int j = 0; j < 64; ++j) {
        EXPECT_EQ(e[static_cast<std::size_t>(j)], 0.0);
        EXPECT_EQ(e[static_cast<std::size_t>(64 + j)], 1.0);
    }
}

TEST(StepEmbedding, LastFrequencyMatchesScalarMath) {
    const auto e = step_embedding(1.0);
    EXPECT_DOUBLE_EQ(e[63], std::sin(1e4));
    EXPECT_DOUBLE_EQ(e[127], std::cos(1e4));
    const auto e7 = step_embedding(7.0);
    for (int j = 0; j < 64; ++j) {
        const double f = std::pow(10.0, j * 4.0 / 63.0) * 7.0;
        EXPECT_NEAR(e7[static_cast<std::size_t>(j)], std::sin(f), 1e-9);
        EXPECT_NEAR(e7[static_cast<std::size_t>(64 + j)], std::cos(f), 1e-9);
    }
}

TEST(StepEmbedding, BoundedAndInjectiveOverDefaultSteps) {
    std::set<std::array<double, kStepEmbeddingDim>> seen;
    for (int n = 0; n <= 1000; ++n) {
        const auto e = step_embedding(n);
        for (double v : e) {
            ASSERT_GE(v, -1.0);
            ASSERT_LE(v, 1.0);
        }
        seen.insert(e);
    }
    EXPECT_EQ(seen.size(), 1001u);
}

TEST(VolumeEstimatorTest, ZeroWeightsGiveZeroGuide) {
    std::mt19937_64 rng(1);
    VolumeEstimator est(3, 4, 2, rng);
    for (auto& e : est.parameters().entries()) {
        for (auto& v : e.tensor.mutable_value()) v = 0.0;
    }
    Matrix f = Matrix::Random(5, 3);
    const auto g = estimate_volume(est, f, 6);
    for (double v : g.values()) EXPECT_EQ(v, 0.0);
}

TEST(VolumeEstimatorTest, PassthroughWeights) {
    nn::ParameterSet p;
    p.add("volume.w1", Tensor::parameter({1, 1}, {1.0}));
    p.add("volume.b1", Tensor::parameter({1}, {0.0}));
    p.add("volume.w2", Tensor::parameter({1, 1}, {1.0}));
    p.add("volume.b2", Tensor::parameter({1}, {0.0}));
    VolumeEstimator est(std::move(p));
    Matrix f(1, 1);
    f(0, 0) = 3.0;
    const auto g = estimate_volume(est, f, 24);
    ASSERT_EQ(g.horizon(), 24u);
    for (double v : g.values()) EXPECT_EQ(v, 3.0);
}

TEST(VolumeEstimatorTest, MatchesTwoLayerLoop) {
    std::mt19937_64 rng(2);
    VolumeEstimator est(3, 5, 2, rng);
    Matrix f = Matrix::Random(4, 3) * 3.0;
    const auto g = estimate_volume(est, f, 3);
    const auto w1 = est.parameters().get("volume.w1").value(), b1 = est.parameters().get("volume.b1").value();
    const auto w2 = est.parameters().get("volume.w2").value(), b2 = est.parameters().get("volume.b2").value();
    for (int r = 0; r < 4; ++r) {
        double h[5];
        for (int j = 0; j < 5; ++j) {
            double s = b1[static_cast<std::size_t>(j)];
            for (int i = 0; i < 3; ++i) s += f(r, i) * w1[static_cast<std::size_t>(i * 5 + j)];
            h[j] = s > 0 ? s : 0.01 * s;
        }
        for (int c = 0; c < 2; ++c) {
            double o = b2[static_cast<std::size_t>(c)];
            for (int j = 0; j < 5; ++j) o += h[j] * w2[static_cast<std::size_t>(j * 2 + c)];
            for (std::size_t t = 0; t < 3; ++t) EXPECT_NEAR(g(static_cast<std::size_t>(r), t, static_cast<std::size_t>(c)), o, 1e-12);
        }
    }
}

TEST(Spatial, ZeroRelationKernelsLeaveSelfTerm) {
    std::mt19937_64 rng(3);
    const int d = 3;
    SpatialParams p;
    for (auto& k : p.relation) k = Tensor::parameter({d, d}, std::vector<double>(d * d, 0.0));
    p.self = random_tensor({d, d}, rng);
    const auto h = random_tensor({1, 4, 2, d}, rng);
    const auto out = rgcn_spatial(h, ring_graph(4), p);
    const auto expected = nn::relu(nn::matmul(h, p.self));
    EXPECT_EQ(values(out), values(expected));
}

TEST(Spatial, HandEvaluatedPair) {
    std::vector<std::string> ids{"a", "b"};
    auto g = ukg::empty_subgraph(ids);
    g.adjacency[0] = {{1}, {0}};
    SpatialParams p;
    p.relation[0] = Tensor::parameter({1, 1}, {2.0});
    p.relation[1] = Tensor::parameter({1, 1}, {0.0});
    p.relation[2] = Tensor::parameter({1, 1}, {0.0});
    p.self = Tensor::parameter({1, 1}, {1.0});
    const auto h = Tensor::constant({1, 2, 1, 1}, std::vector<double>{1.0, 3.0});
    EXPECT_EQ(values(rgcn_spatial(h, g, p)), (std::vector<double>{7.0, 5.0}));
    const auto neg = Tensor::constant({1, 2, 1, 1}, std::vector<double>{-1.0, -3.0});
    EXPECT_EQ(values(rgcn_spatial(neg, g, p)), (std::vector<double>{0.0, 0.0}));
}

TEST(Spatial, DegreeNormalizationAveragesNeighbours) {
    std::vector<std::string> ids{"a", "b", "c"};
    auto g = ukg::empty_subgraph(ids);
    g.adjacency[0] = {{1, 2}, {0}, {0}};
    SpatialParams p;
    p.relation[0] = Tensor::parameter({1, 1}, {1.0});
    p.relation[1] = Tensor::parameter({1, 1}, {0.0});
    p.relation[2] = Tensor::parameter({1, 1}, {0.0});
    p.self = Tensor::parameter({1, 1}, {0.0});
    const auto h = Tensor::constant({1, 3, 1, 1}, std::vector<double>{1.0, 2.0, 4.0});
    EXPECT_EQ(values(rgcn_spatial(h, g, p)), (std::vector<double>{6.0, 1.0, 1.0}));
    EXPECT_EQ(values(rgcn_spatial(h, g, p, true)), (std::vector<double>{3.0, 1.0, 1.0}));
}

TEST(Spatial, RegionPermutationEquivariance) {
    std::mt19937_64 rng(4);
    const int d = 3;
    SpatialParams p;
    for (auto& k : p.relation) k = random_tensor({d, d}, rng);
    p.self = random_tensor({d, d}, rng);
    const auto g = ring_graph(5);
    const auto h = random_tensor({2, 5, 3, d}, rng);
    const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
    const auto hp = Tensor::constant(h.shape(), permute_regions(h, perm, 1));
    const auto out = rgcn_spatial(hp, ukg::permute_subgraph(g, perm), p);
    const auto ref = permute_regions(rgcn_spatial(h, g, p), perm, 1);
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(out.value()[i], ref[i], 1e-12);
}

TEST(Temporal, SingleStepAttentionIsIdentityMixing) {
    std::mt19937_64 rng(5);
    const auto p = random_temporal(4, 8, rng);
    const auto h = random_tensor({1, 3, 1, 4}, rng);
    std::vector<double> attn;
    const auto out = temporal_block(h, p, &attn);
    EXPECT_EQ(out.shape(), h.shape());
    for (double a : attn) EXPECT_DOUBLE_EQ(a, 1.0);
}

TEST(Temporal, IdenticalStepsGiveIdenticalRows) {
    std::mt19937_64 rng(6);
    const auto p = random_temporal(4, 8, rng);
    const auto row = random_tensor({1, 1, 1, 4}, rng);
    std::vector<double> v;
    for (int t = 0; t < 3; ++t) v.insert(v.end(), row.value().begin(), row.value().end());
    const auto out = temporal_block(Tensor::constant({1, 1, 3, 4}, v), p);
    for (int t = 1; t < 3; ++t) {
        for (int k = 0; k < 4; ++k) EXPECT_NEAR(out.value()[t * 4 + k], out.value()[k], 1e-12);
    }
}

TEST(Temporal, AttentionRowsMatchSoftmaxLoop) {
    std::mt19937_64 rng(7);
    const int d = 4, T = 5, heads = 2, hd = d / heads;
    const auto p = random_temporal(d, 8, rng);
    const auto h = random_tensor({1, 1, T, d}, rng);
    std::vector<double> attn;
    temporal_block(h, p, &attn);
    ASSERT_EQ(attn.size(), static_cast<std::size_t>(heads * T * T));
    const auto normed = nn::layer_norm(h, p.ln1_gamma, p.ln1_beta);
    const auto qkv = nn::linear(normed, p.qkv_w, p.qkv_b);
    const auto q = qkv.value();
    for (int hh = 0; hh < heads; ++hh) {
        for (int i = 0; i < T; ++i) {
            std::vector<double> logits(T);
            double mx = -1e300;
            for (int j = 0; j < T; ++j) {
                double s = 0.0;
                for (int k = 0; k < hd; ++k) {
                    s += q[static_cast<std::size_t>(i * 3 * d + hh * hd + k)] *
                         q[static_cast<std::size_t>(j * 3 * d + d + hh * hd + k)];
                }
                logits[static_cast<std::size_t>(j)] = s / std::sqrt(static_cast<double>(hd));
                mx = std::max(mx, logits[static_cast<std::size_t>(j)]);
            }
            double z = 0.0, row = 0.0;
            for (auto& l : logits) z += std::exp(l - mx);
            for (int j = 0; j < T; ++j) {
                const double a = attn[static_cast<std::size_t>((hh * T + i) * T + j)];
                EXPECT_NEAR(a, std::exp(logits[static_cast<std::size_t>(j)] - mx) / z, 1e-12);
                row += a;
            }
            EXPECT_NEAR(row, 1.0, 1e-12);
        }
    }
}

TEST(Fusion, EqualBranchesSplitEvenly) {
    std::mt19937_64 rng(8);
    const int d = 3;
    FusionParams p{random_tensor({2, d}, rng), random_tensor({d, d}, rng), random_tensor({d, d}, rng),
                   random_tensor({d, d}, rng)};
    const auto h = random_tensor({1, 4, 5, d}, rng);
    FusionWeights w;
    const auto out = kgst_fuse(h, h, random_tensor({4, 2}, rng), p, &w);
    for (double a : w.spatial) EXPECT_DOUBLE_EQ(a, 0.5);
    const auto expected = nn::matmul(nn::matmul(h, p.w_v), p.w_o);
    for (std::size_t i = 0; i < out.numel(); ++i) EXPECT_NEAR(out.value()[i], expected.value()[i], 1e-12);
}

TEST(Fusion, ZeroQueryGivesEqualWeights) {
    std::mt19937_64 rng(9);
    const int d = 3;
    FusionParams p{Tensor::parameter({2, d}, std::vector<double>(2 * d, 0.0)), random_tensor({d, d}, rng),
                   random_tensor({d, d}, rng), random_tensor({d, d}, rng)};
    FusionWeights w;
    kgst_fuse(random_tensor({1, 2, 3, d}, rng), random_tensor({1, 2, 3, d}, rng), random_tensor({2, 2}, rng), p, &w);
    for (double a : w.spatial) EXPECT_DOUBLE_EQ(a, 0.5);
}

TEST(Fusion, HandSetTwoBranchSoftmax) {
    const int d = 2;
    auto identity = Tensor::parameter({d, d}, {1.0, 0.0, 0.0, 1.0});
    FusionParams p{Tensor::parameter({1, d}, {1.0, 0.5}), identity, identity, identity};
    // One region, two steps; spatial keys pool to (1, 2), temporal to (0, -1).
    const auto hs = Tensor::constant({1, 1, 2, d}, std::vector<double>{0.0, 1.0, 2.0, 3.0});
    const auto ht = Tensor::constant({1, 1, 2, d}, std::vector<double>{1.0, -2.0, -1.0, 0.0});
    const auto kg = Tensor::constant({1, 1}, std::vector<double>{2.0});
    FusionWeights w;
    const auto out = kgst_fuse(hs, ht, kg, p, &w);
    const double q0 = 2.0, q1 = 1.0;
    const double ls = (q0 * 1.0 + q1 * 2.0) / std::sqrt(2.0), lt = (q0 * 0.0 + q1 * -1.0) / std::sqrt(2.0);
    const double as = std::exp(ls) / (std::exp(ls) + std::exp(lt));
    ASSERT_EQ(w.spatial.size(), 1u);
    EXPECT_NEAR(w.spatial[0], as, 1e-12);
    for (int i = 0; i < 4; ++i) {
        EXPECT_NEAR(out.value()[static_cast<std::size_t>(i)],
                    as * hs.value()[static_cast<std::size_t>(i)] + (1 - as) * ht.value()[static_cast<std::size_t>(i)], 1e-12);
    }
}

class DenoiserTest : public ::testing::Test {
protected:
    void SetUp() override {
        std::mt19937_64 rng(10);
        net = Denoiser(small_config(), rng);
        net.randomize_output_head(rng);
        features = random_tensor({R, 3}, rng);
        guide = random_tensor({R, 2}, rng);
        kg = random_tensor({R, 4}, rng);
        x = random_tensor({B, R, T, 2}, rng);
    }
    Tensor forward(const Denoiser& d, const ukg::RegionSubgraph& g, ForwardTrace* trace = nullptr) const {
        return d.forward(x, steps, kg, d.condition_vector(features, guide, kg), g, trace);
    }
    static constexpr int B = 2, R = 5, T = 6;
    Denoiser net;
    Tensor features, guide, kg, x;
    std::vector<int> steps{3, 40};
    ukg::RegionSubgraph graph = ring_graph(R);
};

TEST_F(DenoiserTest, OutputShapeMatchesInput) {
    EXPECT_EQ(forward(net, graph).shape(), x.shape());
}

TEST_F(DenoiserTest, ZeroOutputHeadPredictsZero) {
    std::mt19937_64 rng(11);
    Denoiser fresh(small_config(), rng);
    const auto out = forward(fresh, graph);
    for (double v : out.value()) EXPECT_EQ(v, 0.0);
}

TEST_F(DenoiserTest, FusionWeightsArePartitionsOfOne) {
    ForwardTrace trace;
    forward(net, graph, &trace);
    ASSERT_EQ(trace.fusion.size(), 2u);
    for (const auto& f : trace.fusion) {
        for (double a : f.spatial) {
            EXPECT_GT(a, 0.0);
            EXPECT_LT(a, 1.0);
        }
    }
}

TEST_F(DenoiserTest, RegionPermutationEquivariance) {
    const std::vector<std::size_t> perm{2, 4, 0, 1, 3};
    const auto out = forward(net, graph);
    const auto px = Tensor::constant(x.shape(), permute_regions(x, perm, 1));
    const auto pf = Tensor::constant(features.shape(), permute_regions(features, perm, 0));
    const auto pg = Tensor::constant(guide.shape(), permute_regions(guide, perm, 0));
    const auto pk = Tensor::constant(kg.shape(), permute_regions(kg, perm, 0));
    const auto pout = net.forward(px, steps, pk, net.condition_vector(pf, pg, pk), ukg::permute_subgraph(graph, perm));
    const auto ref = permute_regions(out, perm, 1);
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(pout.value()[i], ref[i], 1e-10);
}

TEST_F(DenoiserTest, ConstantInputStillVariesOverHours) {
    std::vector<double> flat(x.value().size(), 0.7);
    const auto cx = Tensor::constant(x.shape(), flat);
    const auto out = net.forward(cx, steps, kg, net.condition_vector(features, guide, kg), graph);
    const auto& v = out.value();
    // [B, R, T, 2]: compare hour 0 and hour 3 of batch 0, region 0, channel 0.
    EXPECT_GT(std::fabs(v[0] - v[3 * 2]), 1e-9);
}

TEST_F(DenoiserTest, DisablingSpatialPathChangesOutput) {
    auto cfg = small_config();
    cfg.use_spatial = false;
    std::mt19937_64 rng(10);
    Denoiser temporal_only(cfg, rng);
    temporal_only.randomize_output_head(rng);
    const auto a = forward(net, graph), b = forward(temporal_only, graph);
    EXPECT_NE(values(a), values(b));
}

TEST_F(DenoiserTest, NonFiniteInputIsAnError) {
    auto v = values(x);
    v[3] = NAN;
    const auto bad = Tensor::constant(x.shape(), v);
    EXPECT_THROW(net.forward(bad, steps, kg, net.condition_vector(features, guide, kg), graph), Error);
}

TEST_F(DenoiserTest, ConditionVectorZeroParamsAndTies) {
    auto params = net.parameters();
    Denoiser copy(small_config(), params);
    for (auto& e : copy.parameters().entries()) {
        if (e.name.starts_with("condition.")) {
            for (auto& v : e.tensor.mutable_value()) v = 0.0;
        }
    }
    const auto zero = copy.condition_vector(features, guide, kg);
    for (double v : zero.value()) EXPECT_EQ(v, 0.0);

    std::mt19937_64 rng(12);
    Denoiser other(small_config(), rng);
    auto f = values(features), g = values(guide);
    for (int k = 0; k < 3; ++k) f[3 + k] = f[k];
    for (int k = 0; k < 2; ++k) g[2 + k] = g[k];
    const auto cv = other.condition_vector(Tensor::constant({R, 3}, f), Tensor::constant({R, 2}, g), kg);
    for (int k = 0; k < 8; ++k) EXPECT_EQ(cv.value()[static_cast<std::size_t>(k)], cv.value()[static_cast<std::size_t>(8 + k)]);
}

TEST_F(DenoiserTest, ConditionVectorMatchesMatrixOracle) {
    const auto cv = net.condition_vector(features, guide, kg);
    ASSERT_EQ(cv.shape(), (Shape{1, R, 1, 8}));
    const auto& p = net.parameters();
    const auto w1 = p.get("condition.w1").value(), b1 = p.get("condition.b1").value();
    const auto w2 = p.get("condition.w2").value(), b2 = p.get("condition.b2").value();
    for (int r = 0; r < R; ++r) {
        std::vector<double> in;
        for (int k = 0; k < 3; ++k) in.push_back(features.value()[static_cast<std::size_t>(r * 3 + k)]);
        for (int k = 0; k < 2; ++k) in.push_back(guide.value()[static_cast<std::size_t>(r * 2 + k)]);
        std::vector<double> h(8);
        for (int j = 0; j < 8; ++j) {
            double s = b1[static_cast<std::size_t>(j)];
            for (int i = 0; i < 5; ++i) s += in[static_cast<std::size_t>(i)] * w1[static_cast<std::size_t>(i * 8 + j)];
            h[static_cast<std::size_t>(j)] = std::max(0.0, s);
        }
        for (int j = 0; j < 8; ++j) {
            double s = b2[static_cast<std::size_t>(j)];
            for (int i = 0; i < 8; ++i) s += h[static_cast<std::size_t>(i)] * w2[static_cast<std::size_t>(i * 8 + j)];
            EXPECT_NEAR(cv.value()[static_cast<std::size_t>(r * 8 + j)], s, 1e-12);
        }
    }
}

TEST_F(DenoiserTest, ReloadRequiresMatchingParameters) {
    Denoiser same(small_config(), net.parameters());
    EXPECT_EQ(values(forward(same, graph)), values(forward(net, graph)));
    auto cfg = small_config();
    cfg.layers = 3;
    EXPECT_THROW(Denoiser(cfg, net.parameters()), Error);
}
