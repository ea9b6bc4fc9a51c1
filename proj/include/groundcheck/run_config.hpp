#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "groundcheck/benchmark.hpp"
#include "groundcheck/eval_select.hpp"
#include "groundcheck/hypothesis_generator.hpp"
#include "groundcheck/knowhd.hpp"
#include "groundcheck/llm_gateway.hpp"

namespace groundcheck {

struct ProviderSettings {
    std::string kind = "mock";  ///< "mock" or "http"
    std::filesystem::path mock_script;
    ProviderConfig config;
};

/// Everything a run needs, read from one JSON file.
///
///   {"corpus_path": "...", "entities_path": "...", "edges_path": "...",
///    "output_dir": "...", "seed": 42, "workers": 4,
///    "tasks": ["chemical_gene", "disease_gene", "gene_gene"],
///    "provider": {"kind": "mock", "mock_script": "...", "base_url": "...",
///                 "model": "...", "api_key_env": "...", "timeout_seconds": 60,
///                 "max_retries": 3, "max_concurrent_requests": 4, "backoff_ms": 500},
///    "retrieval": {"k_generate": 32, "k_verify": 8, "tau": 0.0, "pmid_cutoff": 36600000},
///    "split": {"seen_max_pmid": 36600000, "unseen_min_pmid": 38200000},
///    "generation": {"setting": "parametric", "n": 1, "greedy_temperature": 0.0,
///                   "sample_temperature": 1.0, "max_output_tokens": 1024,
///                   "max_hops": 3, "max_chains": 10},
///    "detection": {"mode": "lit", "max_output_tokens": 1024},
///    "selection": {"strategy": "greedy"},
///    "evaluation": {"gold_path": "...", "macro": false}}
///
/// Relative paths are taken from the directory holding the config file.
struct RunConfig {
    std::filesystem::path corpus_path;
    std::filesystem::path entities_path;
    std::filesystem::path edges_path;
    std::filesystem::path output_dir;
    std::filesystem::path gold_path;  ///< empty: the run's own benchmark
    std::uint64_t seed = 42;
    int workers = 4;
    std::vector<Task> tasks{Task::ChemicalGene, Task::DiseaseGene, Task::GeneGene};

    ProviderSettings provider;

    std::size_t k_generate = 32;
    std::size_t k_verify = 8;
    double tau = 0.0;
    std::uint64_t pmid_cutoff = 36600000;
    std::uint64_t seen_max_pmid = 36600000;
    std::uint64_t unseen_min_pmid = 38200000;

    KnowledgeSetting setting = KnowledgeSetting::Parametric;
    GenerationOptions generation;
    SourceMode detection_mode = SourceMode::Lit;
    int detection_max_output_tokens = 1024;
    Strategy strategy = Strategy::Greedy;
    bool macro_average = false;

    nlohmann::json source;  ///< effective JSON after overrides

    /// sha256 of the effective config without output_dir.
    std::string hash() const;
};

/// Sets a dotted key ("generation.n=5"). The value is read as JSON when it
/// parses, otherwise as a plain string. Throws ConfigError.
void apply_override(nlohmann::json& config, std::string_view assignment);

/// Validates and converts; throws ConfigError naming the offending key.
RunConfig parse_run_config(const nlohmann::json& config, const std::filesystem::path& base_dir);

RunConfig load_run_config(const std::filesystem::path& path, std::span<const std::string> overrides = {});

}  // namespace groundcheck
