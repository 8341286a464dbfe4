#include "flowdiff/kge/tucker.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <spdlog/spdlog.h>

#include "flowdiff/error.hpp"
#include "flowdiff/nn/ops.hpp"
#include "flowdiff/nn/optim.hpp"

namespace flowdiff::kge {
namespace {

std::size_t find_index(const std::vector<std::string>& names, std::string_view key, const char* what) {
    auto it = std::find(names.begin(), names.end(), key);
    if (it == names.end()) fail("kge", std::string("no embedding for ") + what + " '" + std::string(key) + "'");
    return static_cast<std::size_t>(it - names.begin());
}

nn::Tensor to_parameter(const Matrix& m) {
    return nn::Tensor::parameter({static_cast<int>(m.rows()), static_cast<int>(m.cols())},
                                 std::vector<double>(m.data(), m.data() + m.size()));
}

void copy_back(const nn::Tensor& t, Matrix& m) {
    std::copy(t.value().begin(), t.value().end(), m.data());
}

struct Query {
    int head;
    int relation;
    std::vector<int> tails;
};

std::vector<Query> build_queries(const ukg::UrbanKG& kg) {
    std::map<std::pair<int, int>, std::vector<int>> grouped;
    for (const auto& f : kg.facts()) {
        const int h = static_cast<int>(kg.entity_index(f.head));
        const int r = static_cast<int>(f.relation);
        const int t = static_cast<int>(kg.entity_index(f.tail));
        grouped[{h, r}].push_back(t);
    }
    std::vector<Query> out;
    for (auto& [key, tails] : grouped) out.push_back({key.first, key.second, std::move(tails)});
    return out;
}

}  // namespace

std::size_t KGEmbeddingSet::entity_index(std::string_view id) const {
    return find_index(entity_ids, id, "entity");
}

std::size_t KGEmbeddingSet::relation_index(std::string_view name) const {
    return find_index(relation_names, name, "relation");
}

std::span<const double> KGEmbeddingSet::entity(std::string_view id) const {
    return {entity_vecs.row(static_cast<Eigen::Index>(entity_index(id))).data(), static_cast<std::size_t>(dim)};
}

std::span<const double> KGEmbeddingSet::relation(std::string_view name) const {
    return {relation_vecs.row(static_cast<Eigen::Index>(relation_index(name))).data(),
            static_cast<std::size_t>(dim)};
}

bool KGEmbeddingSet::all_finite() const {
    return entity_vecs.allFinite() && relation_vecs.allFinite() &&
           std::all_of(core.begin(), core.end(), [](double v) { return std::isfinite(v); });
}

double tucker_score(std::span<const double> head, std::span<const double> relation,
                    std::span<const double> tail, std::span<const double> core) {
    const std::size_t d = head.size();
    if (relation.size() != d || tail.size() != d || core.size() != d * d * d) {
        fail("kge", "tucker_score: dimension mismatch");
    }
    double score = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double hr = head[i] * relation[j];
            if (hr == 0.0) continue;
            const double* w = core.data() + (i * d + j) * d;
            double inner = 0.0;
            for (std::size_t k = 0; k < d; ++k) inner += w[k] * tail[k];
            score += hr * inner;
        }
    }
    return score;
}

KGEmbeddingSet init_embeddings(const ukg::UrbanKG& kg, const KgeConfig& config) {
    if (config.dim < 1) fail("kge", "embedding dimension must be >= 1");
    KGEmbeddingSet embs;
    embs.dim = config.dim;
    for (const auto& e : kg.entities()) embs.entity_ids.push_back(e.id);
    for (const auto& rt : ukg::all_relation_types()) embs.relation_names.emplace_back(rt.name);

    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> u(-config.init_bound, config.init_bound);
    std::normal_distribution<double> g(0.0, 1.0);
    const auto d = static_cast<Eigen::Index>(config.dim);
    embs.entity_vecs.resize(static_cast<Eigen::Index>(embs.entity_ids.size()), d);
    embs.relation_vecs.resize(static_cast<Eigen::Index>(embs.relation_names.size()), d);
    for (Eigen::Index i = 0; i < embs.entity_vecs.size(); ++i) embs.entity_vecs.data()[i] = u(rng);
    for (Eigen::Index i = 0; i < embs.relation_vecs.size(); ++i) embs.relation_vecs.data()[i] = u(rng);
    embs.core.resize(static_cast<std::size_t>(d * d * d));
    for (double& w : embs.core) w = config.core_init_scale * g(rng);
    return embs;
}

KgeTrainResult train_kg_embeddings(const ukg::UrbanKG& kg, const KgeConfig& config) {
    if (kg.entities().empty() || kg.facts().empty()) fail("kge", "knowledge graph is empty");
    if (config.batch_size < 1) fail("kge", "batch size must be >= 1");
    if (config.learning_rate <= 0.0) fail("kge", "learning rate must be > 0");

    KgeTrainResult result;
    result.embeddings = init_embeddings(kg, config);
    auto& embs = result.embeddings;
    for (const auto& rt : ukg::all_relation_types()) {
        if (kg.count(rt.relation) == 0) {
            spdlog::warn("kge: relation {} has no facts; its vector stays at initialization", rt.name);
        }
    }
    if (config.epochs <= 0) return result;

    const int n_ent = static_cast<int>(embs.entity_ids.size());
    const int d = config.dim;
    nn::Tensor ent = to_parameter(embs.entity_vecs);
    nn::Tensor rel = to_parameter(embs.relation_vecs);
    nn::Tensor core = nn::Tensor::parameter({d, d, d}, embs.core);
    nn::Adam adam({.lr = config.learning_rate});

    auto queries = build_queries(kg);
    std::vector<std::size_t> order(queries.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    const double eps = config.label_smoothing;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            const int b = static_cast<int>(end - start);
            std::vector<int> heads, rels;
            std::vector<double> targets(static_cast<std::size_t>(b) * static_cast<std::size_t>(n_ent), 0.0);
            for (int i = 0; i < b; ++i) {
                const auto& q = queries[order[start + static_cast<std::size_t>(i)]];
                heads.push_back(q.head);
                rels.push_back(q.relation);
                for (int t : q.tails) targets[static_cast<std::size_t>(i * n_ent + t)] = 1.0;
            }
            for (double& y : targets) y = (1.0 - eps) * y + 1.0 / n_ent;

            ent.zero_grad();
            rel.zero_grad();
            core.zero_grad();
            auto h = nn::gather_rows(ent, heads);
            auto r = nn::gather_rows(rel, rels);
            auto x = nn::dropout(nn::tucker_contract(h, r, core), config.hidden_dropout, rng);
            auto logits = nn::matmul_nt(x, ent);
            auto loss = nn::bce_with_logits(logits, targets);
            loss.backward();
            adam.step({ent, rel, core});
            loss_sum += loss.item();
            ++batches;
        }
        result.epoch_losses.push_back(loss_sum / batches);
        spdlog::debug("kge epoch {} loss {:.6f}", epoch + 1, result.epoch_losses.back());
    }
    copy_back(ent, embs.entity_vecs);
    copy_back(rel, embs.relation_vecs);
    embs.core.assign(core.value().begin(), core.value().end());
    if (!embs.all_finite()) fail("kge", "training produced non-finite embeddings");
    return result;
}

std::vector<double> tail_scores(const KGEmbeddingSet& embs, std::size_t head, std::size_t relation) {
    const auto d = static_cast<Eigen::Index>(embs.dim);
    Vector x = Vector::Zero(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            const double hr = embs.entity_vecs(static_cast<Eigen::Index>(head), i) *
                              embs.relation_vecs(static_cast<Eigen::Index>(relation), j);
            const double* w = embs.core.data() + (i * d + j) * d;
            for (Eigen::Index k = 0; k < d; ++k) x[k] += hr * w[k];
        }
    }
    Vector s = embs.entity_vecs * x;
    return {s.data(), s.data() + s.size()};
}

RankReport evaluate_ranking(const KGEmbeddingSet& embs, const ukg::UrbanKG& kg) {
    std::map<std::pair<std::size_t, std::size_t>, std::set<std::size_t>> known;
    std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> facts;
    for (const auto& f : kg.facts()) {
        const auto h = embs.entity_index(f.head);
        const auto r = embs.relation_index(ukg::relation_name(f.relation));
        const auto t = embs.entity_index(f.tail);
        known[{h, r}].insert(t);
        facts.emplace_back(h, r, t);
    }
    RankReport rep;
    rep.facts = facts.size();
    if (facts.empty()) return rep;
    std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> cache;
    for (const auto& [h, r, t] : facts) {
        auto it = cache.find({h, r});
        if (it == cache.end()) it = cache.emplace(std::pair{h, r}, tail_scores(embs, h, r)).first;
        const auto& scores = it->second;
        const auto& truth = known[{h, r}];
        const double st = scores[t];
        std::size_t rank = 1;
        std::vector<double> corrupted;
        for (std::size_t e = 0; e < scores.size(); ++e) {
            if (e == t || truth.count(e)) continue;
            corrupted.push_back(scores[e]);
            if (scores[e] > st) ++rank;
        }
        rep.mean_filtered_rank += static_cast<double>(rank);
        rep.mean_reciprocal_rank += 1.0 / static_cast<double>(rank);
        rep.hits_at_10 += rank <= 10 ? 1.0 : 0.0;
        if (!corrupted.empty()) {
            auto mid = corrupted.begin() + static_cast<std::ptrdiff_t>(corrupted.size() / 2);
            std::nth_element(corrupted.begin(), mid, corrupted.end());
            double median = *mid;
            if (corrupted.size() % 2 == 0) {
                median = 0.5 * (median + *std::max_element(corrupted.begin(), mid));
            }
            rep.above_median_fraction += st > median ? 1.0 : 0.0;
        }
    }
    const double n = static_cast<double>(facts.size());
    rep.mean_filtered_rank /= n;
    rep.mean_reciprocal_rank /= n;
    rep.hits_at_10 /= n;
    rep.above_median_fraction /= n;
    return rep;
}

KGEmbeddingSet shuffle_entities(const KGEmbeddingSet& embs, std::uint64_t seed) {
    KGEmbeddingSet out = embs;
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(embs.entity_vecs.rows()));
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < perm.size(); ++i) {
        out.entity_vecs.row(static_cast<Eigen::Index>(i)) = embs.entity_vecs.row(perm[i]);
    }
    return out;
}

Matrix region_embedding_matrix(const KGEmbeddingSet& embs, std::span<const std::string> region_ids) {
    Matrix m(static_cast<Eigen::Index>(region_ids.size()), embs.dim);
    for (std::size_t i = 0; i < region_ids.size(); ++i) {
        m.row(static_cast<Eigen::Index>(i)) =
            embs.entity_vecs.row(static_cast<Eigen::Index>(embs.entity_index(region_ids[i])));
    }
    return m;
}

}  // namespace flowdiff::kge
