#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "flowdiff/error.hpp"
#include "flowdiff/ukg/builders.hpp"
#include "flowdiff/ukg/io.hpp"
#include "flowdiff/ukg/subgraph.hpp"
#include "oracles.hpp"

using namespace flowdiff;
using namespace flowdiff::ukg;
using flowdiff::testing::great_circle_km;

namespace flowdiff::ukg {
void PrintTo(const Fact& f, std::ostream* os) {
    *os << "(" << f.head << ", " << relation_name(f.relation) << ", " << f.tail << ")";
}
}  // namespace flowdiff::ukg

namespace {

RegionGeometry square(const std::string& id, double x0, double y0, double size = 1.0) {
    return {id, {Polygon{{{x0, y0}, {x0 + size, y0}, {x0 + size, y0 + size}, {x0, y0 + size}}, {}}}};
}

FactSet only(const FactSet& facts, Relation r) {
    FactSet out;
    for (const auto& f : facts) {
        if (f.relation == r) out.insert(f);
    }
    return out;
}

// Kilometres along the equator per degree of longitude.
double km_per_degree() { return great_circle_km(0.0, 0.0, 1.0, 0.0); }

}  // namespace

TEST(Relations, SignaturesAndSymmetry) {
    EXPECT_EQ(relation_type(Relation::LocateAt).head, EntityKind::POI);
    EXPECT_EQ(relation_type(Relation::LocateAt).tail, EntityKind::Region);
    for (auto r : {Relation::BorderBy, Relation::NearBy, Relation::SimilarFunc, Relation::CoCheckin,
                   Relation::Competitive}) {
        EXPECT_TRUE(relation_type(r).symmetric) << relation_name(r);
    }
    EXPECT_FALSE(relation_type(Relation::CateOf).symmetric);
    for (const auto& t : all_relation_types()) EXPECT_EQ(relation_from_name(t.name), t.relation);
    EXPECT_FALSE(relation_from_name("Unknown").has_value());
}

TEST(Border, SharedEdgeLinksBothDirections) {
    std::vector<RegionGeometry> g{square("A", 0, 0), square("B", 1, 0)};
    FactSet expected{{"A", Relation::BorderBy, "B"}, {"B", Relation::BorderBy, "A"}};
    EXPECT_EQ(build_border_relations(g), expected);
}

TEST(Border, CornerContactIsNotABorder) {
    std::vector<RegionGeometry> g{square("A", 0, 0), square("B", 1, 1)};
    EXPECT_TRUE(build_border_relations(g).empty());
}

TEST(Border, StripMatchesPairwiseOracle) {
    std::vector<RegionGeometry> g{square("A", 0, 0), square("B", 1, 0), square("C", 2, 0)};
    FactSet oracle;
    for (const auto& a : g) {
        for (const auto& b : g) {
            if (a.id != b.id && shared_boundary_length(a, b) > 0) oracle.insert({a.id, Relation::BorderBy, b.id});
        }
    }
    const auto facts = build_border_relations(g);
    EXPECT_EQ(facts, oracle);
    EXPECT_EQ(facts.size(), 4u);
    EXPECT_FALSE(facts.contains({"A", Relation::BorderBy, "C"}));
}

TEST(Border, PartialEdgeOverlapCounts) {
    std::vector<RegionGeometry> g{square("A", 0, 0, 2.0), square("B", 2, 1, 2.0)};
    EXPECT_NEAR(shared_boundary_length(g[0], g[1]), 1.0, 1e-12);
    EXPECT_EQ(build_border_relations(g).size(), 2u);
}

TEST(Border, SelfIntersectingGeometryIsRejectedWithId) {
    RegionGeometry bow{"bowtie", {Polygon{{{0, 0}, {1, 1}, {1, 0}, {0, 1}}, {}}}};
    std::vector<RegionGeometry> g{square("A", 0, 0), bow};
    try {
        build_border_relations(g);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("bowtie"), std::string::npos);
    }
}

TEST(Nearby, ZeroDistanceLinked) {
    std::vector<RegionCentroid> c{{"A", {0, 0}}, {"B", {0, 0}}};
    EXPECT_EQ(build_nearby_relations(c, 1.0).size(), 2u);
}

TEST(Nearby, ThresholdIsInclusive) {
    std::vector<RegionCentroid> c{{"A", {0, 0}}, {"B", {0.01, 0}}};
    const double d = haversine_km(c[0].location, c[1].location);
    EXPECT_EQ(build_nearby_relations(c, d).size(), 2u);
    EXPECT_TRUE(build_nearby_relations(c, d * (1 - 1e-9)).empty());
}

TEST(Nearby, LineOfThreeMatchesDistanceMatrix) {
    const double deg = 1.0 / km_per_degree();
    std::vector<RegionCentroid> c{{"A", {0, 0}}, {"B", {1 * deg, 0}}, {"C", {3 * deg, 0}}};
    FactSet oracle;
    for (const auto& a : c) {
        for (const auto& b : c) {
            if (a.id == b.id) continue;
            if (great_circle_km(a.location.x, a.location.y, b.location.x, b.location.y) <= 1.5) {
                oracle.insert({a.id, Relation::NearBy, b.id});
            }
        }
    }
    const auto facts = build_nearby_relations(c, 1.5);
    EXPECT_EQ(facts, oracle);
    EXPECT_EQ(facts, (FactSet{{"A", Relation::NearBy, "B"}, {"B", Relation::NearBy, "A"}}));
}

TEST(Nearby, SkipsBorderPairs) {
    std::vector<RegionCentroid> c{{"A", {0, 0}}, {"B", {0, 0}}};
    FactSet border{{"A", Relation::BorderBy, "B"}, {"B", Relation::BorderBy, "A"}};
    EXPECT_TRUE(build_nearby_relations(c, 1.0, border).empty());
}

TEST(Nearby, NonPositiveThresholdIsAnError) {
    std::vector<RegionCentroid> c{{"A", {0, 0}}};
    EXPECT_THROW(build_nearby_relations(c, 0.0), Error);
}

TEST(SimilarFunc, CosineExamples) {
    const std::vector<double> a{1, 0}, b{0, 1}, c{1, 1}, d{2, 2}, e{2, 1}, f{1, 2};
    EXPECT_DOUBLE_EQ(cosine_similarity(a, b), 0.0);
    EXPECT_NEAR(cosine_similarity(c, d), 1.0, 1e-15);
    EXPECT_NEAR(cosine_similarity(e, f), 4.0 / (std::sqrt(5.0) * std::sqrt(5.0)), 1e-15);
}

TEST(SimilarFunc, TopKAndZeroRowsSkipped) {
    std::vector<std::string> ids{"A", "B", "C", "D"};
    Matrix counts(4, 2);
    counts << 1, 0,  //
        2, 0,        //
        1, 1,        //
        0, 0;
    std::vector<std::string> skipped;
    const auto facts = build_similarfunc_relations(ids, counts, 1, &skipped);
    EXPECT_EQ(skipped, std::vector<std::string>{"D"});
    // A<->B (similarity 1), C's best is A (tie with B broken to lower index).
    FactSet expected;
    insert_symmetric(expected, "A", Relation::SimilarFunc, "B");
    insert_symmetric(expected, "C", Relation::SimilarFunc, "A");
    EXPECT_EQ(facts, expected);
}

TEST(Containment, SinglePoiInside) {
    std::vector<RegionGeometry> g{square("A", 0, 0)};
    std::vector<Poi> pois{{"p", {0.5, 0.5}, "food", ""}};
    const auto res = build_containment_relations(pois, g);
    EXPECT_EQ(res.facts, (FactSet{{"p", Relation::LocateAt, "A"}, {"p", Relation::CateOf, "food"}}));
}

TEST(Containment, BorderPoiGoesToLowestId) {
    std::vector<RegionGeometry> g{square("10", 1, 0), square("9", 0, 0)};
    std::vector<Poi> pois{{"p", {1.0, 0.5}, "food", ""}};
    const auto res = build_containment_relations(pois, g);
    EXPECT_TRUE(res.facts.contains({"p", Relation::LocateAt, "9"}));
    EXPECT_EQ(only(res.facts, Relation::LocateAt).size(), 1u);
}

TEST(Containment, MatchesPointInPolygonOracle) {
    std::vector<RegionGeometry> g{square("A", 0, 0), square("B", 1, 0)};
    std::vector<Poi> pois{{"p1", {0.2, 0.3}, "food", ""}, {"p2", {1.7, 0.9}, "shop", ""},
                          {"p3", {5.0, 5.0}, "food", ""}};
    const auto res = build_containment_relations(pois, g);
    FactSet oracle;
    for (const auto& p : pois) {
        for (const auto& r : g) {
            const auto& ring = r.polygons[0].outer;
            const bool inside = p.location.x > ring[0].x && p.location.x < ring[2].x &&
                                p.location.y > ring[0].y && p.location.y < ring[2].y;
            if (inside) oracle.insert({p.id, Relation::LocateAt, r.id});
        }
        oracle.insert({p.id, Relation::CateOf, p.category});
    }
    EXPECT_EQ(res.facts, oracle);
    EXPECT_EQ(res.unassigned_pois, std::vector<std::string>{"p3"});
}

TEST(Containment, BusinessAreasAddServiceFacts) {
    std::vector<RegionGeometry> g{square("A", 0, 0)};
    std::vector<BusinessArea> areas{{"ba", square("ba", 0, 0, 0.5)}};
    std::vector<Poi> pois{{"p", {0.25, 0.25}, "food", ""}};
    const auto res = build_containment_relations(pois, g, std::span<const BusinessArea>(areas));
    EXPECT_FALSE(only(res.facts, Relation::BelongTo).empty());
    EXPECT_FALSE(only(res.facts, Relation::ProvideService).empty());
    const auto plain = build_containment_relations(pois, g);
    EXPECT_TRUE(only(plain.facts, Relation::BelongTo).empty());
}

TEST(Checkin, ConsecutiveVisitsLinked) {
    std::vector<Poi> pois{{"p1", {0, 0}, "a", ""}, {"p2", {0, 0.001}, "a", ""}, {"p3", {0, 0.002}, "a", ""}};
    std::vector<Checkin> ck{{"u", "p1", 0}, {"u", "p2", 3600}, {"u", "p3", 7200}};
    const auto facts = build_checkin_relations(std::span<const Checkin>(ck), pois);
    FactSet expected;
    insert_symmetric(expected, "p1", Relation::CoCheckin, "p2");
    insert_symmetric(expected, "p2", Relation::CoCheckin, "p3");
    EXPECT_EQ(only(facts, Relation::CoCheckin), expected);
}

TEST(Checkin, SameBrandBeyondThresholdNotCompetitive) {
    std::vector<Poi> pois{{"p1", {0, 0}, "a", "brand"}, {"p2", {1.0, 0}, "a", "brand"},
                          {"p3", {0.001, 0}, "a", "brand"}};
    std::vector<Checkin> ck;
    const auto facts = build_checkin_relations(std::span<const Checkin>(ck), pois);
    EXPECT_FALSE(facts.contains({"p1", Relation::Competitive, "p2"}));
    EXPECT_TRUE(facts.contains({"p1", Relation::Competitive, "p3"}));
}

TEST(Checkin, AbsentInputGivesEmptySet) {
    std::vector<Poi> pois{{"p1", {0, 0}, "a", "brand"}, {"p3", {0.001, 0}, "a", "brand"}};
    EXPECT_TRUE(build_checkin_relations(std::nullopt, pois).empty());
}

class ToyCity : public ::testing::Test {
protected:
    void SetUp() override {
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                const std::string id = std::to_string(i * 3 + j + 1);
                inputs.regions.push_back(square(id, j * 0.01, i * 0.01, 0.01));
            }
        }
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(0.0005, 0.0295);
        const char* cats[] = {"food", "shop", "school"};
        for (int p = 0; p < 20; ++p) {
            inputs.pois.push_back({"p" + std::to_string(p), {u(rng), u(rng)}, cats[p % 3], p % 4 == 0 ? "b" : ""});
        }
        config.nearby_km = 1.2;
        config.similar_top_k = 2;
        kg = build_urban_kg(inputs, config);
    }
    KgInputs inputs;
    KgBuildConfig config;
    UrbanKG kg;
};

TEST_F(ToyCity, EveryFactHonoursSignatureAndSymmetry) {
    kg.validate();
    for (const auto& f : kg.facts()) {
        const auto& t = relation_type(f.relation);
        EXPECT_EQ(kg.kind_of(f.head), t.head);
        EXPECT_EQ(kg.kind_of(f.tail), t.tail);
        EXPECT_NE(f.head, f.tail);
        if (t.symmetric) EXPECT_TRUE(kg.facts().contains({f.tail, f.relation, f.head}));
    }
}

TEST_F(ToyCity, BorderAndNearbyAreDisjoint) {
    for (const auto& f : kg.facts()) {
        if (f.relation == Relation::NearBy) {
            EXPECT_FALSE(kg.facts().contains({f.head, Relation::BorderBy, f.tail}));
        }
    }
    EXPECT_EQ(kg.count(Relation::BorderBy), 24u);
}

TEST_F(ToyCity, SubgraphMatchesFactFilter) {
    std::vector<std::string> ids{"1", "2", "5", "9"};
    const auto sub = extract_region_subgraph(kg, ids);
    ASSERT_EQ(sub.region_ids, ids);
    for (std::size_t r = 0; r < kRegionRelations.size(); ++r) {
        for (std::size_t i = 0; i < ids.size(); ++i) {
            std::vector<int> oracle;
            for (std::size_t j = 0; j < ids.size(); ++j) {
                if (kg.facts().contains({ids[i], kRegionRelations[r], ids[j]})) oracle.push_back(static_cast<int>(j));
            }
            auto got = sub.adjacency[r][i];
            std::sort(got.begin(), got.end());
            EXPECT_EQ(got, oracle);
        }
    }
}

TEST_F(ToyCity, SubgraphIsIdempotentAndPure) {
    std::vector<std::string> ids{"3", "1", "2", "6"};
    const auto a = extract_region_subgraph(kg, ids);
    EXPECT_EQ(a, extract_region_subgraph(kg, ids));
    std::vector<std::string> sub_ids{"1", "6"};
    const auto direct = extract_region_subgraph(kg, sub_ids);
    const auto nested = extract_region_subgraph(kg, std::vector<std::string>(sub_ids));
    EXPECT_EQ(direct, nested);
    EXPECT_EQ(extract_region_subgraph(kg, std::vector<std::string>{}).size(), 0u);
}

TEST_F(ToyCity, SubgraphUnknownIdIsNamed) {
    std::vector<std::string> ids{"1", "nope"};
    try {
        extract_region_subgraph(kg, ids);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("nope"), std::string::npos);
    }
}

TEST_F(ToyCity, RoundTripsThroughTsv) {
    const auto dir = std::filesystem::temp_directory_path() / ("flowdiff_kg_" + std::to_string(::getpid()));
    write_kg(kg, dir);
    const auto back = read_kg(dir);
    EXPECT_EQ(back.facts(), kg.facts());
    EXPECT_EQ(back.entities().size(), kg.entities().size());
    std::filesystem::remove_all(dir);
}

TEST(UrbanKgInvariants, RejectsWrongKindsAndSelfLoops) {
    UrbanKG kg;
    kg.add_entity("A", EntityKind::Region);
    kg.add_entity("p", EntityKind::POI);
    EXPECT_THROW(kg.add_fact({"A", Relation::LocateAt, "p"}), Error);
    EXPECT_THROW(kg.add_fact({"A", Relation::BorderBy, "A"}), Error);
    EXPECT_THROW(kg.add_entity("A", EntityKind::POI), Error);
    kg.add_entity("B", EntityKind::Region);
    kg.add_fact({"A", Relation::NearBy, "B"});
    EXPECT_TRUE(kg.facts().contains({"B", Relation::NearBy, "A"}));
}

TEST(IdOrdering, NumericThenLexicographic) {
    EXPECT_TRUE(id_less("2", "10"));
    EXPECT_FALSE(id_less("10", "2"));
    EXPECT_TRUE(id_less("a10", "a2"));
}
