#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flowdiff/ukg/builders.hpp"
#include "flowdiff/ukg/urban_kg.hpp"

namespace flowdiff::ukg {

/// Writes `triplets.tsv` (head, relation, tail) and `entities.tsv` (id, kind)
/// into `dir`. Facts are sorted, entities keep insertion order.
void write_kg(const UrbanKG& kg, const std::filesystem::path& dir);
UrbanKG read_kg(const std::filesystem::path& dir);

/// FeatureCollection of Polygon/MultiPolygon features. The id is read from the
/// first of `id_keys` present in each feature's properties.
std::vector<RegionGeometry> read_geojson(const std::filesystem::path& path,
                                         const std::vector<std::string>& id_keys = {"region_id"});
void write_geojson(const std::vector<RegionGeometry>& regions, const std::filesystem::path& path,
                   const std::string& id_key = "region_id");

std::vector<BusinessArea> read_business_areas(const std::filesystem::path& path);

/// Columns: poi_id, lon, lat, category, optional brand.
std::vector<Poi> read_pois(const std::filesystem::path& path);
void write_pois(const std::vector<Poi>& pois, const std::filesystem::path& path);

/// Columns: user_id, poi_id, timestamp.
std::vector<Checkin> read_checkins(const std::filesystem::path& path);
void write_checkins(const std::vector<Checkin>& checkins, const std::filesystem::path& path);

/// Loads the optional inputs only if their paths are set and exist.
KgInputs read_kg_inputs(const std::filesystem::path& regions_geojson,
                        const std::filesystem::path& pois_csv,
                        const std::optional<std::filesystem::path>& checkins_csv,
                        const std::optional<std::filesystem::path>& business_areas_geojson);

}  // namespace flowdiff::ukg
