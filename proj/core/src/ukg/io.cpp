#include "flowdiff/ukg/io.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "flowdiff/data/atomic_file.hpp"
#include "flowdiff/data/csv.hpp"
#include "flowdiff/error.hpp"

namespace flowdiff::ukg {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    if (!out.empty() && !out.back().empty() && out.back().back() == '\r') out.back().pop_back();
    return out;
}

std::vector<std::string> lines_of(const fs::path& path) {
    std::istringstream in(data::read_text(path));
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

Ring parse_ring(const json& coords, const std::string& id) {
    if (!coords.is_array()) fail("ukg", "region '" + id + "': ring is not an array");
    Ring ring;
    for (const auto& c : coords) {
        if (!c.is_array() || c.size() < 2) fail("ukg", "region '" + id + "': malformed coordinate");
        ring.push_back({c[0].get<double>(), c[1].get<double>()});
    }
    return normalize_ring(std::move(ring));
}

Polygon parse_polygon(const json& rings, const std::string& id) {
    if (!rings.is_array() || rings.empty()) fail("ukg", "region '" + id + "': polygon without rings");
    Polygon poly;
    poly.outer = parse_ring(rings[0], id);
    for (std::size_t i = 1; i < rings.size(); ++i) poly.holes.push_back(parse_ring(rings[i], id));
    return poly;
}

std::string id_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) {
        std::ostringstream ss;
        ss << v.get<double>();
        return ss.str();
    }
    fail("ukg", "feature id must be a string or number");
}

json ring_json(const Ring& ring) {
    json arr = json::array();
    for (const auto& p : ring) arr.push_back({p.x, p.y});
    if (!ring.empty()) arr.push_back({ring.front().x, ring.front().y});
    return arr;
}

std::string format_coord(double v) {
    std::ostringstream ss;
    ss << std::setprecision(17) << v;
    return ss.str();
}

}  // namespace

void write_kg(const UrbanKG& kg, const fs::path& dir) {
    std::string triplets;
    for (const auto& f : kg.facts()) {
        triplets += f.head + '\t' + std::string(relation_name(f.relation)) + '\t' + f.tail + '\n';
    }
    std::string entities;
    for (const auto& e : kg.entities()) entities += e.id + '\t' + std::string(kind_name(e.kind)) + '\n';
    data::write_file_atomic(dir / "triplets.tsv", triplets);
    data::write_file_atomic(dir / "entities.tsv", entities);
}

UrbanKG read_kg(const fs::path& dir) {
    UrbanKG kg;
    for (const auto& line : lines_of(dir / "entities.tsv")) {
        auto cols = split_tabs(line);
        if (cols.size() != 2) fail("ukg", "entities.tsv: expected 2 columns in '" + line + "'");
        auto kind = kind_from_name(cols[1]);
        if (!kind) fail("ukg", "entities.tsv: unknown kind '" + cols[1] + "'");
        kg.add_entity(cols[0], *kind);
    }
    for (const auto& line : lines_of(dir / "triplets.tsv")) {
        auto cols = split_tabs(line);
        if (cols.size() != 3) fail("ukg", "triplets.tsv: expected 3 columns in '" + line + "'");
        auto rel = relation_from_name(cols[1]);
        if (!rel) fail("ukg", "triplets.tsv: unknown relation '" + cols[1] + "'");
        kg.add_fact({cols[0], *rel, cols[2]});
    }
    kg.validate();
    return kg;
}

std::vector<RegionGeometry> read_geojson(const fs::path& path, const std::vector<std::string>& id_keys) {
    json doc;
    try {
        doc = json::parse(data::read_text(path));
    } catch (const json::exception& e) {
        fail("ukg", path.string() + ": " + e.what());
    }
    if (!doc.contains("features") || !doc["features"].is_array()) {
        fail("ukg", path.string() + ": expected a FeatureCollection");
    }
    std::vector<RegionGeometry> out;
    for (const auto& feature : doc["features"]) {
        const auto& props = feature.value("properties", json::object());
        std::optional<std::string> id;
        for (const auto& key : id_keys) {
            if (props.contains(key)) {
                id = id_string(props[key]);
                break;
            }
        }
        if (!id) fail("ukg", path.string() + ": feature without id property");
        const auto& geom = feature.at("geometry");
        const std::string type = geom.at("type").get<std::string>();
        RegionGeometry region{*id, {}};
        if (type == "Polygon") {
            region.polygons.push_back(parse_polygon(geom.at("coordinates"), *id));
        } else if (type == "MultiPolygon") {
            for (const auto& p : geom.at("coordinates")) region.polygons.push_back(parse_polygon(p, *id));
        } else {
            fail("ukg", "region '" + *id + "': unsupported geometry type " + type);
        }
        out.push_back(std::move(region));
    }
    return out;
}

void write_geojson(const std::vector<RegionGeometry>& regions, const fs::path& path,
                   const std::string& id_key) {
    json features = json::array();
    for (const auto& r : regions) {
        json polys = json::array();
        for (const auto& p : r.polygons) {
            json rings = json::array({ring_json(p.outer)});
            for (const auto& h : p.holes) rings.push_back(ring_json(h));
            polys.push_back(rings);
        }
        json geometry = polys.size() == 1
                            ? json{{"type", "Polygon"}, {"coordinates", polys[0]}}
                            : json{{"type", "MultiPolygon"}, {"coordinates", polys}};
        features.push_back({{"type", "Feature"},
                            {"properties", {{id_key, r.id}}},
                            {"geometry", geometry}});
    }
    json doc{{"type", "FeatureCollection"}, {"features", features}};
    data::write_file_atomic(path, doc.dump(1) + "\n");
}

std::vector<BusinessArea> read_business_areas(const fs::path& path) {
    std::vector<BusinessArea> out;
    for (auto& g : read_geojson(path, {"ba_id", "id", "region_id"})) {
        out.push_back({g.id, std::move(g)});
    }
    return out;
}

std::vector<Poi> read_pois(const fs::path& path) {
    const auto table = data::read_csv(path);
    const auto id = *table.column("poi_id");
    const auto lon = *table.column("lon");
    const auto lat = *table.column("lat");
    const auto cat = *table.column("category");
    const auto brand = table.column("brand", false);
    std::vector<Poi> out;
    for (const auto& row : table.rows) {
        Poi p;
        p.id = row[id];
        p.location = {data::parse_double(row[lon], "lon"), data::parse_double(row[lat], "lat")};
        p.category = row[cat];
        if (p.category.empty()) fail("ukg", "POI '" + p.id + "' has no category");
        if (brand) p.brand = row[*brand];
        out.push_back(std::move(p));
    }
    return out;
}

void write_pois(const std::vector<Poi>& pois, const fs::path& path) {
    std::string text = "poi_id,lon,lat,category,brand\n";
    for (const auto& p : pois) {
        text += data::csv_field(p.id) + ',' + format_coord(p.location.x) + ',' +
                format_coord(p.location.y) + ',' + data::csv_field(p.category) + ',' +
                data::csv_field(p.brand) + '\n';
    }
    data::write_file_atomic(path, text);
}

std::vector<Checkin> read_checkins(const fs::path& path) {
    const auto table = data::read_csv(path);
    const auto user = *table.column("user_id");
    const auto poi = *table.column("poi_id");
    const auto ts = *table.column("timestamp");
    std::vector<Checkin> out;
    for (const auto& row : table.rows) {
        out.push_back({row[user], row[poi], data::parse_timestamp(row[ts])});
    }
    return out;
}

void write_checkins(const std::vector<Checkin>& checkins, const fs::path& path) {
    std::string text = "user_id,poi_id,timestamp\n";
    for (const auto& c : checkins) {
        text += data::csv_field(c.user) + ',' + data::csv_field(c.poi) + ',' + std::to_string(c.timestamp) + '\n';
    }
    data::write_file_atomic(path, text);
}

KgInputs read_kg_inputs(const fs::path& regions_geojson, const fs::path& pois_csv,
                        const std::optional<fs::path>& checkins_csv,
                        const std::optional<fs::path>& business_areas_geojson) {
    KgInputs in;
    in.regions = read_geojson(regions_geojson);
    in.pois = read_pois(pois_csv);
    if (checkins_csv && fs::exists(*checkins_csv)) in.checkins = read_checkins(*checkins_csv);
    if (business_areas_geojson && fs::exists(*business_areas_geojson)) {
        in.business_areas = read_business_areas(*business_areas_geojson);
    }
    return in;
}

}  // namespace flowdiff::ukg
