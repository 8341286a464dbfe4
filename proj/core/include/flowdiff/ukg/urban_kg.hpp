#pragma once

#include <array>
#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace flowdiff::ukg {

enum class EntityKind { Region, POI, Category, BusinessArea };

enum class Relation {
    BorderBy,
    NearBy,
    SimilarFunc,
    LocateAt,
    CateOf,
    CoCheckin,
    Competitive,
    ProvideService,
    BelongTo,
};

inline constexpr std::size_t kRelationCount = 9;

struct RelationType {
    Relation relation;
    std::string_view name;
    EntityKind head;
    EntityKind tail;
    bool symmetric;
};

const RelationType& relation_type(Relation r);
const std::array<RelationType, kRelationCount>& all_relation_types();
std::optional<Relation> relation_from_name(std::string_view name);
std::string_view relation_name(Relation r);

std::string_view kind_name(EntityKind k);
std::optional<EntityKind> kind_from_name(std::string_view name);

/// The region-region relations used by the spatial block, in adjacency order.
inline constexpr std::array<Relation, 3> kRegionRelations{Relation::BorderBy, Relation::NearBy,
                                                          Relation::SimilarFunc};

struct Entity {
    std::string id;
    EntityKind kind;
};

struct Fact {
    std::string head;
    Relation relation;
    std::string tail;
    auto operator<=>(const Fact&) const = default;
};

using FactSet = std::set<Fact>;

/// Adds (a, r, b) and (b, r, a).
void insert_symmetric(FactSet& facts, const std::string& a, Relation r, const std::string& b);

/// Ordering for ids: numeric when both are plain non-negative integers,
/// lexicographic otherwise.
bool id_less(std::string_view a, std::string_view b);

class UrbanKG {
public:
    /// Adds an entity; re-adding an existing id with the same kind is a no-op.
    void add_entity(const std::string& id, EntityKind kind);
    /// Validates kinds and self-loops; symmetric relations get both directions.
    void add_fact(const Fact& fact);
    void add_facts(const FactSet& facts);

    bool has_entity(std::string_view id) const;
    EntityKind kind_of(std::string_view id) const;

    /// Entities in insertion order.
    const std::vector<Entity>& entities() const { return entities_; }
    const FactSet& facts() const { return facts_; }
    std::size_t entity_index(std::string_view id) const;

    std::size_t count(Relation r) const;
    /// Relations with at least one fact, in canonical order.
    std::vector<Relation> relations_present() const;
    std::vector<std::string> ids_of_kind(EntityKind k) const;

    /// Re-checks every invariant; throws flowdiff::Error on violation.
    void validate() const;

private:
    std::vector<Entity> entities_;
    std::map<std::string, std::size_t, std::less<>> index_;
    FactSet facts_;
};

}  // namespace flowdiff::ukg
