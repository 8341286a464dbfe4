#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowdiff/flow_tensor.hpp"
#include "flowdiff/ukg/urban_kg.hpp"

namespace flowdiff::kge {

/// TuckER embeddings. `core` is d x d x d, indexed (i * d + j) * d + k for the
/// head, relation and tail axes.
struct KGEmbeddingSet {
    int dim = 0;
    std::vector<std::string> entity_ids;
    std::vector<std::string> relation_names;
    Matrix entity_vecs;    // entities x dim
    Matrix relation_vecs;  // relations x dim
    std::vector<double> core;

    std::size_t entity_index(std::string_view id) const;
    std::size_t relation_index(std::string_view name) const;
    std::span<const double> entity(std::string_view id) const;
    std::span<const double> relation(std::string_view name) const;
    bool all_finite() const;
};

/// W x1 h x2 r x3 t.
double tucker_score(std::span<const double> head, std::span<const double> relation,
                    std::span<const double> tail, std::span<const double> core);

struct KgeConfig {
    int dim = 32;
    int epochs = 200;
    int batch_size = 128;
    double learning_rate = 1e-3;
    double label_smoothing = 0.1;
    double hidden_dropout = 0.2;
    double init_bound = 0.05;
    double core_init_scale = 0.1;
    std::uint64_t seed = 0;
};

struct KgeTrainResult {
    KGEmbeddingSet embeddings;
    std::vector<double> epoch_losses;  // mean batch loss per epoch
};

/// Seeded initialization: uniform vectors and a scaled normal core. Relations
/// cover all nine relation types.
KGEmbeddingSet init_embeddings(const ukg::UrbanKG& kg, const KgeConfig& config);

/// 1-vs-all training over (head, relation) queries with binary cross-entropy
/// on smoothed multi-hot tail targets.
KgeTrainResult train_kg_embeddings(const ukg::UrbanKG& kg, const KgeConfig& config);

/// Scores of every entity as the tail of (head, relation).
std::vector<double> tail_scores(const KGEmbeddingSet& embs, std::size_t head, std::size_t relation);

struct RankReport {
    double mean_filtered_rank = 0.0;
    double mean_reciprocal_rank = 0.0;
    double hits_at_10 = 0.0;
    /// Share of facts scoring above the median corrupted-tail score.
    double above_median_fraction = 0.0;
    std::size_t facts = 0;
};

/// Filtered tail ranking over every fact in `kg` (1 = best).
RankReport evaluate_ranking(const KGEmbeddingSet& embs, const ukg::UrbanKG& kg);

/// Same vectors assigned to a random permutation of the entities.
KGEmbeddingSet shuffle_entities(const KGEmbeddingSet& embs, std::uint64_t seed);

/// Rows in `region_ids` order.
Matrix region_embedding_matrix(const KGEmbeddingSet& embs, std::span<const std::string> region_ids);

}  // namespace flowdiff::kge
