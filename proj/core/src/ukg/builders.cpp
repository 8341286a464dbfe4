#include "flowdiff/ukg/builders.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "flowdiff/error.hpp"

namespace flowdiff::ukg {

namespace {

struct Box {
    double x0 = std::numeric_limits<double>::infinity();
    double y0 = std::numeric_limits<double>::infinity();
    double x1 = -std::numeric_limits<double>::infinity();
    double y1 = -std::numeric_limits<double>::infinity();

    bool overlaps(const Box& o, double tol) const {
        return x0 <= o.x1 + tol && o.x0 <= x1 + tol && y0 <= o.y1 + tol && o.y0 <= y1 + tol;
    }
};

Box bounds(const RegionGeometry& g) {
    Box b;
    for (const auto& poly : g.polygons) {
        for (const auto& p : poly.outer) {
            b.x0 = std::min(b.x0, p.x);
            b.y0 = std::min(b.y0, p.y);
            b.x1 = std::max(b.x1, p.x);
            b.y1 = std::max(b.y1, p.y);
        }
    }
    return b;
}

void require_unique_ids(std::span<const RegionGeometry> regions) {
    std::unordered_set<std::string> seen;
    for (const auto& r : regions) {
        if (!seen.insert(r.id).second) fail("ukg", "duplicate region id '" + r.id + "'");
    }
}

}  // namespace

FactSet build_border_relations(std::span<const RegionGeometry> regions) {
    require_unique_ids(regions);
    std::vector<Box> boxes;
    boxes.reserve(regions.size());
    for (const auto& r : regions) {
        validate_geometry(r);
        boxes.push_back(bounds(r));
    }
    constexpr double tol = 1e-9;
    FactSet facts;
    for (std::size_t i = 0; i < regions.size(); ++i) {
        for (std::size_t j = i + 1; j < regions.size(); ++j) {
            if (!boxes[i].overlaps(boxes[j], tol)) continue;
            if (shared_boundary_length(regions[i], regions[j], tol) > tol) {
                insert_symmetric(facts, regions[i].id, Relation::BorderBy, regions[j].id);
            }
        }
    }
    return facts;
}

FactSet build_nearby_relations(std::span<const RegionCentroid> centroids, double threshold_km,
                               const FactSet& border_facts) {
    if (!(threshold_km > 0.0)) fail("ukg", "NearBy threshold must be > 0");
    FactSet facts;
    for (std::size_t i = 0; i < centroids.size(); ++i) {
        for (std::size_t j = i + 1; j < centroids.size(); ++j) {
            const auto& a = centroids[i];
            const auto& b = centroids[j];
            if (a.id == b.id) fail("ukg", "duplicate region id '" + a.id + "'");
            if (border_facts.contains({a.id, Relation::BorderBy, b.id})) continue;
            if (haversine_km(a.location, b.location) <= threshold_km) {
                insert_symmetric(facts, a.id, Relation::NearBy, b.id);
            }
        }
    }
    return facts;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) fail("ukg", "cosine_similarity: length mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

FactSet build_similarfunc_relations(std::span<const std::string> region_ids, const Matrix& counts,
                                    int top_k, std::vector<std::string>* skipped) {
    if (top_k < 1) fail("ukg", "SimilarFunc top_k must be >= 1");
    if (static_cast<std::size_t>(counts.rows()) != region_ids.size()) {
        fail("ukg", "category count rows do not match region count");
    }
    if ((counts.array() < 0.0).any()) fail("ukg", "negative POI category count");

    const auto n = region_ids.size();
    std::vector<bool> active(n);
    for (std::size_t i = 0; i < n; ++i) {
        active[i] = counts.row(static_cast<Eigen::Index>(i)).sum() > 0.0;
        if (!active[i]) {
            spdlog::info("ukg: region '{}' has no POIs; skipped for SimilarFunc", region_ids[i]);
            if (skipped) skipped->push_back(region_ids[i]);
        }
    }

    auto row = [&](std::size_t i) {
        return std::span<const double>(counts.data() + i * static_cast<std::size_t>(counts.cols()),
                                       static_cast<std::size_t>(counts.cols()));
    };

    FactSet facts;
    std::vector<std::pair<double, std::size_t>> cand;
    for (std::size_t i = 0; i < n; ++i) {
        if (!active[i]) continue;
        cand.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || !active[j]) continue;
            const double s = cosine_similarity(row(i), row(j));
            if (s > 0.0) cand.emplace_back(s, j);
        }
        std::stable_sort(cand.begin(), cand.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        const std::size_t k = std::min(cand.size(), static_cast<std::size_t>(top_k));
        for (std::size_t c = 0; c < k; ++c) {
            insert_symmetric(facts, region_ids[i], Relation::SimilarFunc, region_ids[cand[c].second]);
        }
    }
    return facts;
}

ContainmentResult build_containment_relations(std::span<const Poi> pois,
                                              std::span<const RegionGeometry> regions,
                                              std::optional<std::span<const BusinessArea>> business_areas) {
    // Candidate regions in ascending id order so the first hit wins ties.
    std::vector<std::size_t> order(regions.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return id_less(regions[a].id, regions[b].id); });

    ContainmentResult out;
    std::unordered_set<std::string> seen;
    for (const auto& poi : pois) {
        if (!seen.insert(poi.id).second) fail("ukg", "duplicate POI id '" + poi.id + "'");
        if (poi.category.empty()) fail("ukg", "POI '" + poi.id + "' has no category");
        out.facts.insert({poi.id, Relation::CateOf, poi.category});

        const RegionGeometry* hit = nullptr;
        for (std::size_t idx : order) {
            if (locate(regions[idx], poi.location) != PointLocation::Outside) {
                hit = &regions[idx];
                break;
            }
        }
        if (hit) {
            out.facts.insert({poi.id, Relation::LocateAt, hit->id});
            out.assignment.emplace_back(poi.id, hit->id);
        } else {
            out.unassigned_pois.push_back(poi.id);
        }

        if (business_areas) {
            for (const auto& ba : *business_areas) {
                if (locate(ba.geometry, poi.location) != PointLocation::Outside) {
                    out.facts.insert({poi.id, Relation::BelongTo, ba.id});
                }
            }
        }
    }
    if (business_areas) {
        for (const auto& ba : *business_areas) {
            for (const auto& region : regions) {
                if (locate(ba.geometry, centroid(region)) != PointLocation::Outside) {
                    out.facts.insert({ba.id, Relation::ProvideService, region.id});
                }
            }
        }
    }
    if (!out.unassigned_pois.empty()) {
        spdlog::warn("ukg: {} POI(s) outside all regions were omitted", out.unassigned_pois.size());
    }
    return out;
}

FactSet build_checkin_relations(std::optional<std::span<const Checkin>> checkins,
                                std::span<const Poi> pois, const CheckinOptions& options) {
    FactSet facts;
    if (!checkins) return facts;

    std::unordered_map<std::string, const Poi*> by_id;
    for (const auto& p : pois) by_id.emplace(p.id, &p);

    std::map<std::string, std::vector<const Checkin*>> by_user;
    std::size_t unknown = 0;
    for (const auto& c : *checkins) {
        if (!by_id.contains(c.poi)) {
            ++unknown;
            continue;
        }
        by_user[c.user].push_back(&c);
    }
    if (unknown) spdlog::warn("ukg: {} check-in(s) reference unknown POIs; ignored", unknown);

    const double window = options.window_hours * 3600.0;
    for (auto& [user, seq] : by_user) {
        std::stable_sort(seq.begin(), seq.end(),
                         [](const Checkin* a, const Checkin* b) { return a->timestamp < b->timestamp; });
        for (std::size_t i = 1; i < seq.size(); ++i) {
            const auto* a = seq[i - 1];
            const auto* b = seq[i];
            if (a->poi == b->poi) continue;
            if (static_cast<double>(b->timestamp - a->timestamp) > window) continue;
            insert_symmetric(facts, a->poi, Relation::CoCheckin, b->poi);
        }
    }

    for (std::size_t i = 0; i < pois.size(); ++i) {
        if (pois[i].brand.empty()) continue;
        for (std::size_t j = i + 1; j < pois.size(); ++j) {
            if (pois[j].brand != pois[i].brand || pois[j].id == pois[i].id) continue;
            if (haversine_km(pois[i].location, pois[j].location) <= options.competitive_km) {
                insert_symmetric(facts, pois[i].id, Relation::Competitive, pois[j].id);
            }
        }
    }
    return facts;
}

Matrix category_counts(std::span<const std::string> region_ids,
                       std::span<const std::string> categories,
                       const ContainmentResult& containment, std::span<const Poi> pois) {
    std::unordered_map<std::string, Eigen::Index> region_row, cat_col;
    for (std::size_t i = 0; i < region_ids.size(); ++i) region_row.emplace(region_ids[i], static_cast<Eigen::Index>(i));
    for (std::size_t i = 0; i < categories.size(); ++i) cat_col.emplace(categories[i], static_cast<Eigen::Index>(i));
    std::unordered_map<std::string, const Poi*> poi_by_id;
    for (const auto& p : pois) poi_by_id.emplace(p.id, &p);

    Matrix counts = Matrix::Zero(static_cast<Eigen::Index>(region_ids.size()),
                                 static_cast<Eigen::Index>(categories.size()));
    for (const auto& [poi_id, region_id] : containment.assignment) {
        auto r = region_row.find(region_id);
        auto p = poi_by_id.find(poi_id);
        if (r == region_row.end() || p == poi_by_id.end()) continue;
        auto c = cat_col.find(p->second->category);
        if (c == cat_col.end()) continue;
        counts(r->second, c->second) += 1.0;
    }
    return counts;
}

UrbanKG build_urban_kg(const KgInputs& inputs, const KgBuildConfig& config, KgBuildReport* report) {
    UrbanKG kg;
    for (const auto& r : inputs.regions) kg.add_entity(r.id, EntityKind::Region);
    for (const auto& p : inputs.pois) kg.add_entity(p.id, EntityKind::POI);

    std::vector<std::string> categories;
    for (const auto& p : inputs.pois) {
        if (std::find(categories.begin(), categories.end(), p.category) == categories.end()) {
            categories.push_back(p.category);
        }
    }
    std::sort(categories.begin(), categories.end());
    for (const auto& c : categories) kg.add_entity(c, EntityKind::Category);
    if (inputs.business_areas) {
        for (const auto& ba : *inputs.business_areas) kg.add_entity(ba.id, EntityKind::BusinessArea);
    }

    const FactSet border = build_border_relations(inputs.regions);
    std::vector<RegionCentroid> centroids;
    centroids.reserve(inputs.regions.size());
    for (const auto& r : inputs.regions) centroids.push_back({r.id, centroid(r)});
    const FactSet nearby = build_nearby_relations(centroids, config.nearby_km, border);

    std::optional<std::span<const BusinessArea>> bas;
    if (inputs.business_areas) bas = std::span<const BusinessArea>(*inputs.business_areas);
    const ContainmentResult containment = build_containment_relations(inputs.pois, inputs.regions, bas);

    std::vector<std::string> region_ids;
    for (const auto& r : inputs.regions) region_ids.push_back(r.id);
    const Matrix counts = category_counts(region_ids, categories, containment, inputs.pois);
    std::vector<std::string> skipped;
    const FactSet similar = build_similarfunc_relations(region_ids, counts, config.similar_top_k, &skipped);

    std::optional<std::span<const Checkin>> checkins;
    if (inputs.checkins) checkins = std::span<const Checkin>(*inputs.checkins);
    const FactSet checkin_facts = build_checkin_relations(checkins, inputs.pois, config.checkin);

    for (const FactSet* fs : {&border, &nearby, &similar, &containment.facts, &checkin_facts}) {
        kg.add_facts(*fs);
    }
    for (const auto& rel : all_relation_types()) {
        if (kg.count(rel.relation) == 0) {
            spdlog::debug("ukg: relation {} has no facts", rel.name);
        }
    }
    kg.validate();
    if (report) {
        report->unassigned_pois = containment.unassigned_pois;
        report->regions_without_pois = skipped;
    }
    return kg;
}

}  // namespace flowdiff::ukg
