#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "groundcheck/benchmark.hpp"
#include "groundcheck/corpus_store.hpp"
#include "groundcheck/kg_store.hpp"
#include "groundcheck/llm_gateway.hpp"
#include "groundcheck/prompts.hpp"

namespace groundcheck {

inline constexpr std::string_view kInvalidLabel = "Invalid";

struct HypothesisCandidate {
    std::string instance_id;
    KnowledgeSetting setting = KnowledgeSetting::Parametric;
    int sample_index = 0;
    std::string raw_text;
    std::string rationale;
    std::string statement;
    std::string predicted_label;  ///< a task label or kInvalidLabel
    bool parse_failed = false;
};

struct GenerationOptions {
    int n = 1;
    double greedy_temperature = 0.0;  ///< sample 0
    double sample_temperature = 1.0;  ///< samples 1..n-1
    int max_output_tokens = 1024;
    std::size_t k = 32;
    double tau = 0.0;
    std::uint64_t pmid_cutoff = 36600000;
    std::size_t doc_char_budget = kDefaultDocCharBudget;
    std::size_t max_hops = kDefaultMaxHops;
    std::size_t max_chains = kDefaultMaxChains;
};

/// Stores a generation run reads from. `graph` is the pre-cutoff graph and
/// must hold the instance's entities; `corpus` is needed for literature settings.
struct KnowledgeSources {
    const KnowledgeGraph* graph = nullptr;
    const CorpusStore* corpus = nullptr;
};

/// Label named in `statement`: the longest case-insensitive occurrence of a
/// label ("no relation" also counts as "no_relation"), earliest on ties;
/// kInvalidLabel when none occurs.
std::string normalize_label(std::string_view statement, std::span<const std::string> labels);

/// Text ahead of the JSON block with the section header lines removed.
std::string extract_rationale(std::string_view raw_text);

/// The prompt for one instance under a setting, with its retrieved context.
Prompt generation_prompt(const BenchmarkInstance& instance, KnowledgeSetting setting, const GenerationOptions& options,
                         const KnowledgeSources& sources);

/// Samples options.n candidates (sample_index 0..n-1). Unparseable replies
/// become Invalid candidates; transport and provider errors propagate.
std::vector<HypothesisCandidate> generate(const BenchmarkInstance& instance, KnowledgeSetting setting,
                                          const GenerationOptions& options, Gateway& gateway,
                                          const KnowledgeSources& sources);

}  // namespace groundcheck
