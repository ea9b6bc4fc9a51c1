#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "groundcheck/corpus_store.hpp"
#include "groundcheck/kg_store.hpp"

namespace groundcheck {

enum class KnowledgeSetting { Parametric, ParametricKG, ParametricLit, ParametricKGLit };

/// "parametric", "parametric_kg", "parametric_lit", "parametric_kg_lit".
std::string_view to_string(KnowledgeSetting setting);
std::optional<KnowledgeSetting> parse_setting(std::string_view text);
bool uses_graph(KnowledgeSetting setting);
bool uses_literature(KnowledgeSetting setting);

struct Prompt {
    std::string system;
    std::string user;

    /// System and user text as one block, the way templates are written down.
    std::string joined() const;
};

inline constexpr std::size_t kDefaultDocCharBudget = 1200;

/// Query asking for the relation between two entities; `labels` is the
/// task's label set with "no_relation" last.
std::string format_query(const Entity& head, const Entity& tail, std::span<const std::string> labels);

/// Numbered "[i] Title. Body" blocks, one per line, bodies cut to `char_budget` bytes.
std::string render_documents(std::span<const Document> docs, std::size_t char_budget = kDefaultDocCharBudget);

/// One textualized chain per line.
std::string render_chains(const KnowledgeGraph& graph, std::span<const LinkChain> chains);

/// One textualized edge per line.
std::string render_edges(const KnowledgeGraph& graph, std::span<const KgEdge> edges);

/// Generation prompt for a setting. `knowledge` must be present exactly when
/// the setting uses the graph and `documents` exactly when it uses literature;
/// otherwise PreconditionError. Empty context renders as "None".
Prompt assemble_prompt(std::string_view query, KnowledgeSetting setting, const std::optional<std::string>& knowledge,
                       const std::optional<std::string>& documents);

Prompt claim_prompt(std::string_view statement);
Prompt entity_prompt(std::string_view background);
Prompt verification_prompt(std::string_view claim, std::string_view documents, std::string_view knowledge);

}  // namespace groundcheck
