#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "groundcheck/bm25.hpp"
#include "groundcheck/kg_store.hpp"
#include "groundcheck/llm_gateway.hpp"

namespace groundcheck {

struct LinkedMention {
    std::string mention;
    std::string entity_id;

    friend bool operator==(const LinkedMention&, const LinkedMention&) = default;
};

struct LinkedEntitySet {
    std::string claim;
    std::vector<LinkedMention> resolved;
    std::vector<std::string> unresolved;
    bool extraction_failed = false;

    /// Distinct resolved ids, sorted.
    std::vector<std::string> entity_ids() const;
};

/// BM25 index with one document per entity: its mentions joined by spaces.
class MentionIndex {
public:
    /// Entities without any non-empty mention are skipped and counted.
    static MentionIndex build(const KnowledgeGraph& graph, Bm25Params params = {});

    std::size_t size() const noexcept { return index_.size(); }
    std::size_t skipped() const noexcept { return skipped_; }
    const Bm25Index& index() const noexcept { return index_; }
    const KnowledgeGraph& graph() const noexcept { return *graph_; }

    /// Top-1 entity for a mention with its score; nullopt when nothing scores above zero.
    std::optional<std::pair<std::string, double>> best_match(std::string_view mention) const;

    /// Full resolution of one extracted mention: an embedded "(id)" naming a
    /// known entity wins; then a mention whose tokens equal those of exactly
    /// one entity's mention; otherwise BM25 top-1 on the mention without its type word.
    std::optional<std::string> resolve(std::string_view mention) const;

private:
    const KnowledgeGraph* graph_ = nullptr;
    Bm25Index index_;
    std::unordered_map<std::string, std::vector<std::string>> exact_;  ///< token key -> entity ids
    std::size_t skipped_ = 0;
};

/// Text for a mention chunk.
std::string mention_chunk(const Entity& entity);

/// Splits "Gene TP53 (7157)" into ("TP53", "7157"): a leading entity-type
/// word is dropped and a trailing parenthesised id is returned separately.
std::pair<std::string, std::optional<std::string>> split_mention(std::string_view mention);

struct MentionExtraction {
    std::vector<std::string> mentions;
    bool failed = false;
    std::string raw_text;
};

MentionExtraction extract_mentions(std::string_view claim, Gateway& gateway, int max_output_tokens = 512);

/// Links already-extracted mentions (duplicates collapse to one entry).
LinkedEntitySet link_mentions(std::string_view claim, std::span<const std::string> mentions,
                              const MentionIndex& index);

LinkedEntitySet link_claim(std::string_view claim, Gateway& gateway, const MentionIndex& index);

}  // namespace groundcheck
