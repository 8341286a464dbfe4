#pragma once

#include <filesystem>

#include "flowdiff/kge/tucker.hpp"

namespace flowdiff::kge {

/// `path` gets a one-line text header followed by little-endian float32
/// entity vectors, relation vectors and the core; `path` + ".order" lists the
/// entity and relation names in file order.
void write_embeddings(const KGEmbeddingSet& embs, const std::filesystem::path& path);
KGEmbeddingSet read_embeddings(const std::filesystem::path& path);

}  // namespace flowdiff::kge
