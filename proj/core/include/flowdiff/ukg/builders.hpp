#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowdiff/flow_tensor.hpp"
#include "flowdiff/ukg/geometry.hpp"
#include "flowdiff/ukg/urban_kg.hpp"

namespace flowdiff::ukg {

struct RegionCentroid {
    std::string id;
    Point location;
};

struct Poi {
    std::string id;
    Point location;
    std::string category;
    std::string brand;  // empty when unknown
};

struct Checkin {
    std::string user;
    std::string poi;
    std::int64_t timestamp = 0;  // seconds
};

struct BusinessArea {
    std::string id;
    RegionGeometry geometry;
};

/// BorderBy for every pair sharing a boundary segment of positive length.
FactSet build_border_relations(std::span<const RegionGeometry> regions);

/// NearBy for pairs whose centroid distance is <= threshold_km, skipping pairs
/// already linked by BorderBy in `border_facts`.
FactSet build_nearby_relations(std::span<const RegionCentroid> centroids, double threshold_km,
                               const FactSet& border_facts = {});

double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// SimilarFunc to each region's `top_k` most cosine-similar other regions
/// (positive similarity only, ties to the lower index). Rows of `counts` align
/// with `region_ids`; all-zero rows are skipped. Symmetrized by union.
FactSet build_similarfunc_relations(std::span<const std::string> region_ids, const Matrix& counts,
                                    int top_k, std::vector<std::string>* skipped = nullptr);

struct ContainmentResult {
    FactSet facts;
    std::vector<std::string> unassigned_pois;
    /// POI id -> region id for assigned POIs, in POI order.
    std::vector<std::pair<std::string, std::string>> assignment;
};

/// LocateAt and CateOf for each POI; BelongTo and ProvideService only when
/// business areas are supplied. Border POIs go to the lowest region id.
ContainmentResult build_containment_relations(std::span<const Poi> pois,
                                              std::span<const RegionGeometry> regions,
                                              std::optional<std::span<const BusinessArea>> business_areas = std::nullopt);

struct CheckinOptions {
    double competitive_km = 1.0;
    double window_hours = 24.0;
};

/// CoCheckin for consecutive visits within the window and Competitive for
/// same-brand POIs within competitive_km. Returns an empty set when no
/// check-in data is supplied.
FactSet build_checkin_relations(std::optional<std::span<const Checkin>> checkins,
                                std::span<const Poi> pois, const CheckinOptions& options = {});

/// Region x category POI count matrix from a containment assignment.
Matrix category_counts(std::span<const std::string> region_ids,
                       std::span<const std::string> categories,
                       const ContainmentResult& containment, std::span<const Poi> pois);

struct KgBuildConfig {
    double nearby_km = 2.0;
    int similar_top_k = 10;
    CheckinOptions checkin;
};

struct KgInputs {
    std::vector<RegionGeometry> regions;
    std::vector<Poi> pois;
    std::optional<std::vector<Checkin>> checkins;
    std::optional<std::vector<BusinessArea>> business_areas;
};

struct KgBuildReport {
    std::vector<std::string> unassigned_pois;
    std::vector<std::string> regions_without_pois;
};

/// Full pipeline: validates geometry, runs every builder and assembles the graph.
UrbanKG build_urban_kg(const KgInputs& inputs, const KgBuildConfig& config,
                       KgBuildReport* report = nullptr);

}  // namespace flowdiff::ukg
