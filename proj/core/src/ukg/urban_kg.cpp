#include "flowdiff/ukg/urban_kg.hpp"

#include <algorithm>
#include <cctype>

#include "flowdiff/error.hpp"

namespace flowdiff::ukg {

namespace {

constexpr std::array<RelationType, kRelationCount> kTypes{{
    {Relation::BorderBy, "BorderBy", EntityKind::Region, EntityKind::Region, true},
    {Relation::NearBy, "NearBy", EntityKind::Region, EntityKind::Region, true},
    {Relation::SimilarFunc, "SimilarFunc", EntityKind::Region, EntityKind::Region, true},
    {Relation::LocateAt, "LocateAt", EntityKind::POI, EntityKind::Region, false},
    {Relation::CateOf, "CateOf", EntityKind::POI, EntityKind::Category, false},
    {Relation::CoCheckin, "CoCheckin", EntityKind::POI, EntityKind::POI, true},
    {Relation::Competitive, "Competitive", EntityKind::POI, EntityKind::POI, true},
    {Relation::ProvideService, "ProvideService", EntityKind::BusinessArea, EntityKind::Region, false},
    {Relation::BelongTo, "BelongTo", EntityKind::POI, EntityKind::BusinessArea, false},
}};

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

}  // namespace

const RelationType& relation_type(Relation r) { return kTypes[static_cast<std::size_t>(r)]; }
const std::array<RelationType, kRelationCount>& all_relation_types() { return kTypes; }

std::optional<Relation> relation_from_name(std::string_view name) {
    for (const auto& t : kTypes) {
        if (t.name == name) return t.relation;
    }
    return std::nullopt;
}

std::string_view relation_name(Relation r) { return relation_type(r).name; }

std::string_view kind_name(EntityKind k) {
    switch (k) {
        case EntityKind::Region: return "Region";
        case EntityKind::POI: return "POI";
        case EntityKind::Category: return "Category";
        case EntityKind::BusinessArea: return "BusinessArea";
    }
    return "?";
}

std::optional<EntityKind> kind_from_name(std::string_view name) {
    for (auto k : {EntityKind::Region, EntityKind::POI, EntityKind::Category, EntityKind::BusinessArea}) {
        if (kind_name(k) == name) return k;
    }
    return std::nullopt;
}

void insert_symmetric(FactSet& facts, const std::string& a, Relation r, const std::string& b) {
    facts.insert({a, r, b});
    facts.insert({b, r, a});
}

bool id_less(std::string_view a, std::string_view b) {
    if (all_digits(a) && all_digits(b)) {
        const auto strip = [](std::string_view s) {
            const auto p = s.find_first_not_of('0');
            return p == std::string_view::npos ? std::string_view("0") : s.substr(p);
        };
        const auto sa = strip(a);
        const auto sb = strip(b);
        if (sa.size() != sb.size()) return sa.size() < sb.size();
        if (sa != sb) return sa < sb;
    }
    return a < b;
}

void UrbanKG::add_entity(const std::string& id, EntityKind kind) {
    if (id.empty()) fail("ukg", "empty entity id");
    auto it = index_.find(id);
    if (it != index_.end()) {
        if (entities_[it->second].kind != kind) {
            fail("ukg", "entity '" + id + "' already exists as " +
                            std::string(kind_name(entities_[it->second].kind)) + ", not " +
                            std::string(kind_name(kind)));
        }
        return;
    }
    index_.emplace(id, entities_.size());
    entities_.push_back({id, kind});
}

void UrbanKG::add_fact(const Fact& fact) {
    const auto& type = relation_type(fact.relation);
    if (fact.head == fact.tail) fail("ukg", "self-loop fact on '" + fact.head + "'");
    if (!has_entity(fact.head)) fail("ukg", "fact references unknown head '" + fact.head + "'");
    if (!has_entity(fact.tail)) fail("ukg", "fact references unknown tail '" + fact.tail + "'");
    if (kind_of(fact.head) != type.head || kind_of(fact.tail) != type.tail) {
        fail("ukg", "fact (" + fact.head + ", " + std::string(type.name) + ", " + fact.tail +
                        ") violates the relation signature");
    }
    facts_.insert(fact);
    if (type.symmetric) facts_.insert({fact.tail, fact.relation, fact.head});
}

void UrbanKG::add_facts(const FactSet& facts) {
    for (const auto& f : facts) add_fact(f);
}

bool UrbanKG::has_entity(std::string_view id) const { return index_.find(id) != index_.end(); }

EntityKind UrbanKG::kind_of(std::string_view id) const {
    return entities_[entity_index(id)].kind;
}

std::size_t UrbanKG::entity_index(std::string_view id) const {
    auto it = index_.find(id);
    if (it == index_.end()) fail("ukg", "unknown entity '" + std::string(id) + "'");
    return it->second;
}

std::size_t UrbanKG::count(Relation r) const {
    return static_cast<std::size_t>(std::count_if(facts_.begin(), facts_.end(),
                                                  [r](const Fact& f) { return f.relation == r; }));
}

std::vector<Relation> UrbanKG::relations_present() const {
    std::vector<Relation> out;
    for (const auto& t : kTypes) {
        if (count(t.relation) > 0) out.push_back(t.relation);
    }
    return out;
}

std::vector<std::string> UrbanKG::ids_of_kind(EntityKind k) const {
    std::vector<std::string> out;
    for (const auto& e : entities_) {
        if (e.kind == k) out.push_back(e.id);
    }
    return out;
}

void UrbanKG::validate() const {
    for (const auto& f : facts_) {
        const auto& type = relation_type(f.relation);
        if (f.head == f.tail) fail("ukg", "self-loop fact on '" + f.head + "'");
        if (kind_of(f.head) != type.head || kind_of(f.tail) != type.tail) {
            fail("ukg", "fact violates signature of " + std::string(type.name));
        }
        if (type.symmetric && !facts_.contains({f.tail, f.relation, f.head})) {
            fail("ukg", "symmetric relation " + std::string(type.name) + " missing reverse of (" +
                            f.head + ", " + f.tail + ")");
        }
    }
}

}  // namespace flowdiff::ukg
