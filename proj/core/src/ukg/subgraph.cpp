#include "flowdiff/ukg/subgraph.hpp"

#include <algorithm>
#include <unordered_map>

#include "flowdiff/error.hpp"

namespace flowdiff::ukg {

std::size_t RegionSubgraph::edge_count() const {
    std::size_t n = 0;
    for (const auto& rel : adjacency) {
        for (const auto& nb : rel) n += nb.size();
    }
    return n;
}

RegionSubgraph extract_region_subgraph(const UrbanKG& kg, std::span<const std::string> region_ids) {
    RegionSubgraph g;
    g.region_ids.assign(region_ids.begin(), region_ids.end());
    std::unordered_map<std::string, int> pos;
    for (std::size_t i = 0; i < region_ids.size(); ++i) {
        const auto& id = region_ids[i];
        if (!kg.has_entity(id)) fail("ukg", "unknown region id '" + id + "'");
        if (kg.kind_of(id) != EntityKind::Region) fail("ukg", "entity '" + id + "' is not a Region");
        if (!pos.emplace(id, static_cast<int>(i)).second) fail("ukg", "duplicate region id '" + id + "'");
    }
    for (auto& rel : g.adjacency) rel.assign(region_ids.size(), {});

    for (const auto& f : kg.facts()) {
        std::size_t k = 0;
        for (; k < kRegionRelations.size(); ++k) {
            if (kRegionRelations[k] == f.relation) break;
        }
        if (k == kRegionRelations.size()) continue;
        auto h = pos.find(f.head);
        auto t = pos.find(f.tail);
        if (h == pos.end() || t == pos.end()) continue;
        // Neighbors of the head: messages flow tail -> head.
        g.adjacency[k][static_cast<std::size_t>(h->second)].push_back(t->second);
    }
    for (auto& rel : g.adjacency) {
        for (auto& nb : rel) {
            std::sort(nb.begin(), nb.end());
            nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
        }
    }
    return g;
}

RegionSubgraph empty_subgraph(std::span<const std::string> region_ids) {
    RegionSubgraph g;
    g.region_ids.assign(region_ids.begin(), region_ids.end());
    for (auto& rel : g.adjacency) rel.assign(region_ids.size(), {});
    return g;
}

RegionSubgraph permute_subgraph(const RegionSubgraph& g, std::span<const std::size_t> perm) {
    if (perm.size() != g.size()) fail("ukg", "permutation size mismatch");
    std::vector<int> inverse(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) inverse[perm[i]] = static_cast<int>(i);
    RegionSubgraph out;
    for (std::size_t i = 0; i < perm.size(); ++i) out.region_ids.push_back(g.region_ids[perm[i]]);
    for (std::size_t k = 0; k < g.adjacency.size(); ++k) {
        out.adjacency[k].assign(perm.size(), {});
        for (std::size_t i = 0; i < perm.size(); ++i) {
            for (int j : g.adjacency[k][perm[i]]) out.adjacency[k][i].push_back(inverse[static_cast<std::size_t>(j)]);
            std::sort(out.adjacency[k][i].begin(), out.adjacency[k][i].end());
        }
    }
    return out;
}

}  // namespace flowdiff::ukg
