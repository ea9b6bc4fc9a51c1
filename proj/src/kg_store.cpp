#include "groundcheck/kg_store.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <istream>
#include <map>
#include <set>
#include <tuple>

#include <json.hpp>

#include "groundcheck/errors.hpp"

namespace groundcheck {

namespace {

using nlohmann::json;

json parse_line(const std::string& line, std::size_t record) {
    try {
        auto j = json::parse(line);
        if (!j.is_object()) throw IngestError(record, "expected a JSON object");
        return j;
    } catch (const json::parse_error& e) {
        throw IngestError(record, std::string("invalid JSON: ") + e.what());
    }
}

std::string string_field(const json& j, const char* field, std::size_t record) {
    const auto it = j.find(field);
    if (it == j.end() || !it->is_string() || it->get_ref<const std::string&>().empty()) {
        throw IngestError(record, std::string("missing or empty string field '") + field + "'");
    }
    return it->get<std::string>();
}

template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
    std::string line;
    std::size_t record = 0;
    while (std::getline(in, line)) {
        ++record;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        fn(parse_line(line, record), record);
    }
}

void normalize_pmids(std::vector<std::uint64_t>& pmids) {
    std::sort(pmids.begin(), pmids.end());
    pmids.erase(std::unique(pmids.begin(), pmids.end()), pmids.end());
}

}  // namespace

std::string_view to_string(EntityType type) {
    switch (type) {
        case EntityType::Chemical: return "Chemical";
        case EntityType::Disease: return "Disease";
        case EntityType::Gene: return "Gene";
        case EntityType::Mutation: return "Mutation";
    }
    return "Unknown";
}

std::optional<EntityType> parse_entity_type(std::string_view text) {
    std::string lowered(text);
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lowered == "chemical") return EntityType::Chemical;
    if (lowered == "disease") return EntityType::Disease;
    if (lowered == "gene") return EntityType::Gene;
    if (lowered == "mutation") return EntityType::Mutation;
    return std::nullopt;
}

bool edge_less(const KgEdge& a, const KgEdge& b) {
    return std::tie(a.head, a.relation, a.tail) < std::tie(b.head, b.relation, b.tail);
}

std::shared_ptr<const KnowledgeGraph::EntityTable> KnowledgeGraph::make_table(std::vector<Entity> entities) {
    auto table = std::make_shared<EntityTable>();
    table->list = std::move(entities);
    for (std::uint32_t i = 0; i < table->list.size(); ++i) {
        const auto& e = table->list[i];
        if (e.id.empty()) throw PreconditionError("entity with empty id");
        if (!table->by_id.emplace(e.id, i).second) throw ConflictError("duplicate entity id '" + e.id + "'");
    }
    return table;
}

void KnowledgeGraph::set_edges(std::vector<KgEdge> edges) {
    for (auto& e : edges) {
        if (!entities_->by_id.contains(e.head)) throw NotFoundError("edge references unknown entity '" + e.head + "'");
        if (!entities_->by_id.contains(e.tail)) throw NotFoundError("edge references unknown entity '" + e.tail + "'");
        if (e.head == e.tail) throw PreconditionError("self-loop edge on '" + e.head + "'");
        normalize_pmids(e.pmids);
        if (e.pmids.empty()) throw PreconditionError("edge without supporting pmids");
    }
    std::sort(edges.begin(), edges.end(), edge_less);

    edges_.clear();
    for (auto& e : edges) {
        if (!edges_.empty() && edges_.back().head == e.head && edges_.back().relation == e.relation &&
            edges_.back().tail == e.tail) {
            auto& merged = edges_.back().pmids;
            merged.insert(merged.end(), e.pmids.begin(), e.pmids.end());
            normalize_pmids(merged);
            continue;
        }
        edges_.push_back(std::move(e));
    }

    incident_.assign(entities_->list.size(), {});
    for (std::uint32_t i = 0; i < edges_.size(); ++i) {
        incident_[entities_->by_id.at(edges_[i].head)].push_back(i);
        incident_[entities_->by_id.at(edges_[i].tail)].push_back(i);
    }
}

KnowledgeGraph KnowledgeGraph::load(std::istream& entities_jsonl, std::istream& edges_jsonl) {
    std::vector<Entity> entities;
    std::set<std::string> seen_ids;
    for_each_record(entities_jsonl, [&](const json& j, std::size_t record) {
        Entity e;
        e.id = string_field(j, "id", record);
        const auto type = parse_entity_type(string_field(j, "type", record));
        if (!type) throw IngestError(record, "unsupported entity type");
        e.type = *type;
        e.name = string_field(j, "name", record);
        if (const auto m = j.find("mentions"); m != j.end()) {
            if (!m->is_array()) throw IngestError(record, "'mentions' must be an array");
            for (const auto& s : *m) {
                if (!s.is_string()) throw IngestError(record, "'mentions' entries must be strings");
                if (!s.get_ref<const std::string&>().empty()) e.mentions.push_back(s.get<std::string>());
            }
        }
        if (!seen_ids.insert(e.id).second) throw ConflictError("duplicate entity id '" + e.id + "' at record " + std::to_string(record));
        entities.push_back(std::move(e));
    });

    KnowledgeGraph g;
    g.entities_ = make_table(std::move(entities));

    std::vector<KgEdge> edges;
    for_each_record(edges_jsonl, [&](const json& j, std::size_t record) {
        KgEdge e;
        e.head = string_field(j, "head", record);
        e.relation = string_field(j, "relation", record);
        e.tail = string_field(j, "tail", record);
        if (!g.entities_->by_id.contains(e.head)) throw IngestError(record, "unknown head entity '" + e.head + "'");
        if (!g.entities_->by_id.contains(e.tail)) throw IngestError(record, "unknown tail entity '" + e.tail + "'");
        if (e.head == e.tail) throw IngestError(record, "head and tail are the same entity");
        const auto p = j.find("pmids");
        if (p == j.end() || !p->is_array() || p->empty()) throw IngestError(record, "'pmids' must be a non-empty array");
        for (const auto& v : *p) {
            if (!v.is_number_integer() || v.get<std::int64_t>() <= 0) {
                throw IngestError(record, "'pmids' entries must be positive integers");
            }
            e.pmids.push_back(v.get<std::uint64_t>());
        }
        edges.push_back(std::move(e));
    });
    g.set_edges(std::move(edges));
    return g;
}

KnowledgeGraph KnowledgeGraph::from_parts(std::vector<Entity> entities, std::vector<KgEdge> edges) {
    KnowledgeGraph g;
    g.entities_ = make_table(std::move(entities));
    g.set_edges(std::move(edges));
    return g;
}

KnowledgeGraph KnowledgeGraph::with_edges(std::vector<KgEdge> edges) const {
    KnowledgeGraph g;
    g.entities_ = entities_;
    g.set_edges(std::move(edges));
    return g;
}

const Entity* KnowledgeGraph::find_entity(std::string_view id) const {
    const auto it = entities_->by_id.find(std::string(id));
    return it == entities_->by_id.end() ? nullptr : &entities_->list[it->second];
}

const Entity& KnowledgeGraph::entity(std::string_view id) const {
    const auto* e = find_entity(id);
    if (!e) throw NotFoundError("unknown entity '" + std::string(id) + "'");
    return *e;
}

std::span<const std::uint32_t> KnowledgeGraph::incident(std::string_view id) const {
    const auto it = entities_->by_id.find(std::string(id));
    if (it == entities_->by_id.end()) return {};
    return incident_[it->second];
}

bool KnowledgeGraph::connected(std::string_view a, std::string_view b) const {
    const auto ea = incident(a);
    const auto eb = incident(b);
    const auto smaller = ea.size() <= eb.size() ? ea : eb;
    for (const auto i : smaller) {
        const auto& e = edges_[i];
        if ((e.head == a && e.tail == b) || (e.head == b && e.tail == a)) return true;
    }
    return false;
}

TemporalSplit temporal_split(const KnowledgeGraph& graph, std::uint64_t seen_max_pmid, std::uint64_t unseen_min_pmid) {
    if (seen_max_pmid == 0 || unseen_min_pmid == 0 || seen_max_pmid >= unseen_min_pmid) {
        throw PreconditionError("temporal split needs 0 < seen_max_pmid < unseen_min_pmid");
    }
    std::vector<KgEdge> seen;
    std::vector<KgEdge> unseen;
    for (const auto& e : graph.edges()) {
        KgEdge early = e;
        early.pmids.clear();
        KgEdge late = e;
        late.pmids.clear();
        for (const auto p : e.pmids) {
            if (p <= seen_max_pmid) early.pmids.push_back(p);
            else if (p >= unseen_min_pmid) late.pmids.push_back(p);
        }
        if (!early.pmids.empty()) seen.push_back(std::move(early));
        else if (!late.pmids.empty()) unseen.push_back(std::move(late));
    }
    return {graph.with_edges(std::move(seen)), graph.with_edges(std::move(unseen))};
}

bool LinkChain::is_valid_path() const {
    if (edges.empty() || nodes.size() != edges.size() + 1) return false;
    std::set<std::string_view> distinct(nodes.begin(), nodes.end());
    if (distinct.size() != nodes.size()) return false;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        const auto& e = edges[i];
        const bool forward = e.head == nodes[i] && e.tail == nodes[i + 1];
        const bool backward = e.tail == nodes[i] && e.head == nodes[i + 1];
        if (!forward && !backward) return false;
    }
    return true;
}

namespace {

class ChainSearch {
public:
    ChainSearch(const KnowledgeGraph& g, std::string_view source, std::string_view target, std::size_t max_hops)
        : g_(g), source_(source), target_(target) {
        // Undirected hop distance to the target, bounded by max_hops, for pruning.
        std::deque<std::string_view> queue{target_};
        dist_.emplace(target_, 0);
        while (!queue.empty()) {
            const auto node = queue.front();
            queue.pop_front();
            const auto d = dist_.at(node);
            if (d >= max_hops) continue;
            for (const auto i : g_.incident(node)) {
                const auto& e = g_.edges()[i];
                const std::string_view next = e.head == node ? e.tail : e.head;
                if (dist_.emplace(next, d + 1).second) queue.push_back(next);
            }
        }
    }

    std::vector<LinkChain> paths_of_length(std::size_t length) {
        found_.clear();
        path_nodes_.assign(1, source_);
        path_edges_.clear();
        extend(length);
        return std::move(found_);
    }

private:
    void extend(std::size_t remaining) {
        const auto node = path_nodes_.back();
        if (remaining == 0) {
            if (node == target_) {
                LinkChain c;
                for (const auto i : path_edges_) c.edges.push_back(g_.edges()[i]);
                for (const auto n : path_nodes_) c.nodes.emplace_back(n);
                found_.push_back(std::move(c));
            }
            return;
        }
        for (const auto i : g_.incident(node)) {
            const auto& e = g_.edges()[i];
            const std::string_view next = e.head == node ? e.tail : e.head;
            const auto d = dist_.find(next);
            if (d == dist_.end() || d->second > remaining - 1) continue;
            if (next == target_ && remaining > 1) continue;
            if (std::find(path_nodes_.begin(), path_nodes_.end(), next) != path_nodes_.end()) continue;
            path_nodes_.push_back(next);
            path_edges_.push_back(i);
            extend(remaining - 1);
            path_nodes_.pop_back();
            path_edges_.pop_back();
        }
    }

    const KnowledgeGraph& g_;
    std::string_view source_;
    std::string_view target_;
    std::map<std::string_view, std::size_t> dist_;
    std::vector<std::string_view> path_nodes_;
    std::vector<std::uint32_t> path_edges_;
    std::vector<LinkChain> found_;
};

bool chain_less(const LinkChain& a, const LinkChain& b) {
    if (a.nodes != b.nodes) return a.nodes < b.nodes;
    for (std::size_t i = 0; i < a.edges.size(); ++i) {
        const auto& x = a.edges[i];
        const auto& y = b.edges[i];
        const auto kx = std::tie(x.relation, x.head, x.tail);
        const auto ky = std::tie(y.relation, y.head, y.tail);
        if (kx != ky) return kx < ky;
    }
    return false;
}

}  // namespace

std::vector<LinkChain> find_link_chains(const KnowledgeGraph& graph, std::string_view source, std::string_view target,
                                        std::size_t max_hops, std::size_t max_chains) {
    // Resolve the ids through the graph so the views stay valid for the search.
    const auto& src = graph.entity(source);
    const auto& dst = graph.entity(target);
    if (src.id == dst.id || max_chains == 0) return {};

    ChainSearch search(graph, src.id, dst.id, max_hops);
    std::vector<LinkChain> out;
    for (std::size_t len = 1; len <= max_hops && out.size() < max_chains; ++len) {
        auto level = search.paths_of_length(len);
        std::sort(level.begin(), level.end(), chain_less);
        for (auto& c : level) {
            if (out.size() == max_chains) break;
            out.push_back(std::move(c));
        }
    }
    return out;
}

std::string textualize_edge(const KnowledgeGraph& graph, const KgEdge& edge) {
    const auto& h = graph.entity(edge.head);
    const auto& t = graph.entity(edge.tail);
    std::string s;
    s.append(to_string(h.type)).append(" ").append(h.name).append(" (").append(h.id).append(") ");
    s.append(edge.relation).append(" ");
    s.append(to_string(t.type)).append(" ").append(t.name).append(" (").append(t.id).append(").");
    return s;
}

std::string textualize_chain(const KnowledgeGraph& graph, const LinkChain& chain) {
    std::string out;
    for (const auto& e : chain.edges) {
        if (!out.empty()) out += ' ';
        out += textualize_edge(graph, e);
    }
    return out;
}

std::vector<KgEdge> kg_context(const KnowledgeGraph& graph, std::span<const std::string> entity_ids) {
    const std::set<std::string_view> wanted(entity_ids.begin(), entity_ids.end());
    std::set<std::uint32_t> hits;
    for (const auto id : wanted) {
        for (const auto i : graph.incident(id)) {
            const auto& e = graph.edges()[i];
            if (wanted.contains(e.head) && wanted.contains(e.tail)) hits.insert(i);
        }
    }
    // Edge indices already follow canonical order.
    std::vector<KgEdge> out;
    out.reserve(hits.size());
    for (const auto i : hits) out.push_back(graph.edges()[i]);
    return out;
}

}  // namespace groundcheck
