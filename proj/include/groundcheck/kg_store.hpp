#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace groundcheck {

enum class EntityType { Chemical, Disease, Gene, Mutation };

std::string_view to_string(EntityType type);
/// Case-insensitive; nullopt for anything outside the four known types.
std::optional<EntityType> parse_entity_type(std::string_view text);

struct Entity {
    std::string id;
    EntityType type = EntityType::Gene;
    std::string name;
    std::vector<std::string> mentions;
};

/// Directed, labelled edge with the PMIDs of the articles that support it.
struct KgEdge {
    std::string head;
    std::string relation;
    std::string tail;
    std::vector<std::uint64_t> pmids;  ///< sorted, unique, non-empty

    friend bool operator==(const KgEdge&, const KgEdge&) = default;
};

/// Canonical edge order: (head, relation, tail).
bool edge_less(const KgEdge& a, const KgEdge& b);

struct GraphStats {
    std::size_t entity_count = 0;
    std::size_t edge_count = 0;
};

/// Immutable typed multigraph with PMID provenance.
///
/// Edges are stored in canonical (head, relation, tail) order; edges with an
/// identical triple are merged and their PMID lists unioned. Parallel edges
/// with different relations are kept. Subgraphs produced by temporal_split
/// share the entity table of their parent.
class KnowledgeGraph {
public:
    /// Entities: {"id","type","name","mentions"} per line. Edges:
    /// {"head","relation","tail","pmids"} per line. Errors carry the line number.
    static KnowledgeGraph load(std::istream& entities_jsonl, std::istream& edges_jsonl);
    static KnowledgeGraph from_parts(std::vector<Entity> entities, std::vector<KgEdge> edges);

    /// Same entity table, different edge set (validated).
    KnowledgeGraph with_edges(std::vector<KgEdge> edges) const;

    GraphStats stats() const { return {entities_->list.size(), edges_.size()}; }

    const Entity* find_entity(std::string_view id) const;
    /// Throws NotFoundError.
    const Entity& entity(std::string_view id) const;
    std::span<const Entity> entities() const noexcept { return entities_->list; }
    std::span<const KgEdge> edges() const noexcept { return edges_; }

    /// Indices into edges() of every edge touching `id` (either endpoint).
    std::span<const std::uint32_t> incident(std::string_view id) const;

    /// True when at least one edge joins a and b in either direction.
    bool connected(std::string_view a, std::string_view b) const;

private:
    struct EntityTable {
        std::vector<Entity> list;
        std::unordered_map<std::string, std::uint32_t> by_id;
    };

    KnowledgeGraph() = default;
    static std::shared_ptr<const EntityTable> make_table(std::vector<Entity> entities);
    void set_edges(std::vector<KgEdge> edges);

    std::shared_ptr<const EntityTable> entities_;
    std::vector<KgEdge> edges_;
    std::vector<std::vector<std::uint32_t>> incident_;  ///< per entity ordinal
};

/// Seen / unseen partition of a graph by supporting PMID.
struct TemporalSplit {
    KnowledgeGraph seen;
    KnowledgeGraph unseen;
};

/// An edge goes to `seen` when it has any PMID <= seen_max_pmid, keeping only
/// those PMIDs. Otherwise it goes to `unseen` when it has any PMID >=
/// unseen_min_pmid, keeping only those. PMIDs strictly between the cutoffs
/// are discarded, so an edge supported only there lands in neither subset.
TemporalSplit temporal_split(const KnowledgeGraph& graph, std::uint64_t seen_max_pmid, std::uint64_t unseen_min_pmid);

/// Simple path between two entities, traversing edges in either direction.
struct LinkChain {
    std::vector<KgEdge> edges;
    std::vector<std::string> nodes;  ///< source, ..., target (edges.size() + 1 entries)

    std::size_t length() const noexcept { return edges.size(); }
    /// Consecutive edges share the expected endpoint and no entity repeats.
    bool is_valid_path() const;
};

inline constexpr std::size_t kDefaultMaxHops = 3;
inline constexpr std::size_t kDefaultMaxChains = 10;

/// Up to max_chains simple paths of length <= max_hops from source to target,
/// ordered by length, then node-id sequence, then (relation, head, tail) of
/// each edge. Empty when source == target. Throws NotFoundError for unknown ids.
std::vector<LinkChain> find_link_chains(const KnowledgeGraph& graph, std::string_view source, std::string_view target,
                                        std::size_t max_hops = kDefaultMaxHops,
                                        std::size_t max_chains = kDefaultMaxChains);

/// "<head_type> <head_name> (<head_id>) <relation> <tail_type> <tail_name> (<tail_id>)."
std::string textualize_edge(const KnowledgeGraph& graph, const KgEdge& edge);

/// One sentence per edge, in path order, separated by single spaces.
std::string textualize_chain(const KnowledgeGraph& graph, const LinkChain& chain);

/// Edges whose head and tail both lie in `entity_ids`, in canonical order.
std::vector<KgEdge> kg_context(const KnowledgeGraph& graph, std::span<const std::string> entity_ids);

}  // namespace groundcheck
