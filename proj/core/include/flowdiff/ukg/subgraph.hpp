#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "flowdiff/ukg/urban_kg.hpp"

namespace flowdiff::ukg {

/// Region-only view of the graph for one split. `adjacency[k][l]` lists the
/// sorted neighbor indices of region l under kRegionRelations[k].
struct RegionSubgraph {
    std::vector<std::string> region_ids;
    std::array<std::vector<std::vector<int>>, kRegionRelations.size()> adjacency;

    std::size_t size() const { return region_ids.size(); }
    std::size_t edge_count() const;
    bool operator==(const RegionSubgraph&) const = default;
};

/// Restricts the KG to `region_ids` and the BorderBy/NearBy/SimilarFunc
/// relations. Region order follows the input.
RegionSubgraph extract_region_subgraph(const UrbanKG& kg, std::span<const std::string> region_ids);

/// Subgraph with no edges (used when spatial structure is unavailable).
RegionSubgraph empty_subgraph(std::span<const std::string> region_ids);

/// Applies a region permutation: new region i is old region perm[i].
RegionSubgraph permute_subgraph(const RegionSubgraph& g, std::span<const std::size_t> perm);

}  // namespace flowdiff::ukg
