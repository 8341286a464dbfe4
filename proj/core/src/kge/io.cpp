#include "flowdiff/kge/io.hpp"

#include <bit>
#include <cstring>
#include <sstream>

#include "flowdiff/data/atomic_file.hpp"
#include "flowdiff/data/csv.hpp"
#include "flowdiff/error.hpp"

namespace flowdiff::kge {
namespace {

static_assert(std::endian::native == std::endian::little, "float32 blobs assume a little-endian host");

void put_floats(std::string& out, const double* values, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const float f = static_cast<float>(values[i]);
        char bytes[4];
        std::memcpy(bytes, &f, 4);
        out.append(bytes, 4);
    }
}

void get_floats(const std::string& in, std::size_t& pos, double* values, std::size_t n) {
    if (pos + 4 * n > in.size()) fail("kge", "embedding file is truncated");
    for (std::size_t i = 0; i < n; ++i) {
        float f = 0.0f;
        std::memcpy(&f, in.data() + pos, 4);
        values[i] = f;
        pos += 4;
    }
}

}  // namespace

void write_embeddings(const KGEmbeddingSet& embs, const std::filesystem::path& path) {
    std::string out = "flowdiff-kge d_kg=" + std::to_string(embs.dim) +
                      " entities=" + std::to_string(embs.entity_ids.size()) +
                      " relations=" + std::to_string(embs.relation_names.size()) + "\n";
    put_floats(out, embs.entity_vecs.data(), static_cast<std::size_t>(embs.entity_vecs.size()));
    put_floats(out, embs.relation_vecs.data(), static_cast<std::size_t>(embs.relation_vecs.size()));
    put_floats(out, embs.core.data(), embs.core.size());

    std::string order;
    for (const auto& id : embs.entity_ids) order += "entity\t" + id + "\n";
    for (const auto& name : embs.relation_names) order += "relation\t" + name + "\n";
    data::write_file_atomic(path, out);
    auto order_path = path;
    order_path += ".order";
    data::write_file_atomic(order_path, order);
}

KGEmbeddingSet read_embeddings(const std::filesystem::path& path) {
    const std::string bytes = data::read_text(path);
    const auto eol = bytes.find('\n');
    if (eol == std::string::npos) fail("kge", path.string() + ": missing header");
    std::istringstream header(bytes.substr(0, eol));
    std::string magic, d_field, e_field, r_field;
    header >> magic >> d_field >> e_field >> r_field;
    auto value_of = [&](const std::string& field, const std::string& key) {
        if (field.rfind(key + "=", 0) != 0) fail("kge", path.string() + ": malformed header");
        return static_cast<std::size_t>(data::parse_int(field.substr(key.size() + 1), key));
    };
    if (magic != "flowdiff-kge") fail("kge", path.string() + ": not an embedding file");
    const std::size_t d = value_of(d_field, "d_kg");
    const std::size_t n_ent = value_of(e_field, "entities");
    const std::size_t n_rel = value_of(r_field, "relations");

    KGEmbeddingSet embs;
    embs.dim = static_cast<int>(d);
    auto order_path = path;
    order_path += ".order";
    std::istringstream order(data::read_text(order_path));
    std::string line;
    while (std::getline(order, line)) {
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) fail("kge", order_path.string() + ": malformed line");
        const auto kind = line.substr(0, tab);
        if (kind == "entity") {
            embs.entity_ids.push_back(line.substr(tab + 1));
        } else if (kind == "relation") {
            embs.relation_names.push_back(line.substr(tab + 1));
        } else {
            fail("kge", order_path.string() + ": unknown entry kind '" + kind + "'");
        }
    }
    if (embs.entity_ids.size() != n_ent || embs.relation_names.size() != n_rel) {
        fail("kge", "order file does not match embedding header counts");
    }
    std::size_t pos = eol + 1;
    embs.entity_vecs.resize(static_cast<Eigen::Index>(n_ent), static_cast<Eigen::Index>(d));
    embs.relation_vecs.resize(static_cast<Eigen::Index>(n_rel), static_cast<Eigen::Index>(d));
    embs.core.resize(d * d * d);
    get_floats(bytes, pos, embs.entity_vecs.data(), n_ent * d);
    get_floats(bytes, pos, embs.relation_vecs.data(), n_rel * d);
    get_floats(bytes, pos, embs.core.data(), d * d * d);
    if (pos != bytes.size()) fail("kge", path.string() + ": trailing bytes");
    if (!embs.all_finite()) fail("kge", path.string() + ": non-finite values");
    return embs;
}

}  // namespace flowdiff::kge
