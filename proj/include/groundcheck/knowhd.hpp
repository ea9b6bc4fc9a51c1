#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "groundcheck/corpus_store.hpp"
#include "groundcheck/entity_linker.hpp"
#include "groundcheck/kg_store.hpp"
#include "groundcheck/llm_gateway.hpp"
#include "groundcheck/prompts.hpp"

namespace groundcheck {

enum class SourceMode { Lit, KG, Both };

std::string_view to_string(SourceMode mode);
std::optional<SourceMode> parse_source_mode(std::string_view text);

struct AtomicClaim {
    std::size_t index = 0;
    std::string text;
    LinkedEntitySet entities;  ///< filled only when the graph is consulted
};

struct ClaimContext {
    std::vector<RetrievalHit> docs;
    std::vector<KgEdge> edges;
    LinkedEntitySet entities;
};

struct ClaimVerdict {
    bool grounded = false;
    bool judge_failed = false;
    std::vector<RetrievalHit> docs;
    std::vector<KgEdge> edges;
    std::string judge_raw;
};

struct ReportFlags {
    bool decomposition_failure = false;
    bool unverifiable = false;       ///< no claims to verify; score is 0
    bool judge_failure = false;      ///< at least one verdict could not be parsed
    bool extraction_failure = false; ///< at least one entity extraction could not be parsed
};

struct GroundednessReport {
    std::string instance_id;
    int sample_index = 0;
    SourceMode mode = SourceMode::Lit;
    std::vector<AtomicClaim> claims;
    std::vector<ClaimVerdict> verdicts;
    double score = 0.0;
    ReportFlags flags;
};

struct Decomposition {
    std::vector<AtomicClaim> claims;
    bool failed = false;
    std::string raw_text;
};

struct DetectorOptions {
    std::size_t k = 8;
    double tau = 0.0;
    std::uint64_t pmid_cutoff = 36600000;
    std::size_t doc_char_budget = kDefaultDocCharBudget;
    int max_output_tokens = 1024;
};

/// Grounded share of the verdicts; 0 for an empty list.
double groundedness_score(std::span<const ClaimVerdict> verdicts);

/// Claim decomposition, context gathering, entailment judging and scoring
/// against a literature corpus and/or a knowledge graph. The stores a mode
/// needs must be non-null; `graph` is the pre-cutoff graph the linker indexes.
class Detector {
public:
    Detector(Gateway& gateway, const CorpusStore* corpus, const KnowledgeGraph* graph, const MentionIndex* linker,
             DetectorOptions options = {});

    Decomposition decompose(std::string_view rationale, std::string_view statement) const;
    ClaimContext claim_context(std::string_view claim, SourceMode mode) const;
    ClaimVerdict verify(std::string_view claim, std::span<const RetrievalHit> docs,
                        std::span<const KgEdge> edges) const;

    GroundednessReport groundedness(std::string_view instance_id, int sample_index, std::string_view rationale,
                                    std::string_view statement, SourceMode mode) const;

    const DetectorOptions& options() const noexcept { return options_; }

private:
    Gateway& gateway_;
    const CorpusStore* corpus_;
    const KnowledgeGraph* graph_;
    const MentionIndex* linker_;
    DetectorOptions options_;
};

}  // namespace groundcheck
