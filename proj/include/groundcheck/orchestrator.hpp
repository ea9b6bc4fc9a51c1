#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string_view>

#include "groundcheck/artifacts.hpp"
#include "groundcheck/corpus_store.hpp"
#include "groundcheck/entity_linker.hpp"
#include "groundcheck/kg_store.hpp"
#include "groundcheck/llm_gateway.hpp"
#include "groundcheck/run_config.hpp"

namespace groundcheck {

enum class Command { BuildIndex, BuildBenchmark, Generate, Detect, Select, Evaluate, Pipeline };

std::string_view to_string(Command command);
std::optional<Command> parse_command(std::string_view text);

/// Artifact locations under the output directory.
struct ArtifactPaths {
    std::filesystem::path root;

    std::filesystem::path index_dir() const { return root / "index"; }
    std::filesystem::path index_meta() const { return root / "index" / "meta.json"; }
    std::filesystem::path benchmark() const { return root / "benchmark.jsonl"; }
    std::filesystem::path benchmark_stats() const { return root / "benchmark_stats.json"; }
    std::filesystem::path benchmark_stats_text() const { return root / "benchmark_stats.txt"; }
    std::filesystem::path candidates() const { return root / "candidates.jsonl"; }
    std::filesystem::path reports() const { return root / "reports.jsonl"; }
    std::filesystem::path predictions() const { return root / "predictions.jsonl"; }
    std::filesystem::path predictions_csv() const { return root / "predictions.csv"; }
    std::filesystem::path metrics() const { return root / "metrics.json"; }
    std::filesystem::path metrics_text() const { return root / "metrics.txt"; }

    /// In-progress records of a resumable stage.
    static std::filesystem::path partial(const std::filesystem::path& artifact);
};

/// Runs pipeline stages against files in the output directory.
///
/// Missing inputs raise ConfigError before anything is written. The LLM stages
/// (generate, detect) checkpoint finished instances to a partial file and pick
/// up from it when rerun with the same config. `pipeline` skips stages whose
/// artifact already carries the current config hash and seed.
class Orchestrator {
public:
    /// `provider` replaces the configured one (tests inject scripted mocks).
    Orchestrator(RunConfig config, std::ostream& log, std::shared_ptr<Provider> provider = nullptr);
    ~Orchestrator();

    void run(Command command);

    const RunConfig& config() const noexcept { return config_; }
    const ArtifactPaths& paths() const noexcept { return paths_; }

private:
    void check_inputs(Command command) const;
    bool up_to_date(const std::filesystem::path& artifact, std::string_view name) const;

    void build_index();
    void build_benchmark();
    void generate();
    void detect();
    void select();
    void evaluate();
    void pipeline();

    const KnowledgeGraph& seen_graph();
    const CorpusStore& corpus();
    const MentionIndex& linker();
    Gateway& gateway();

    ArtifactMeta meta(std::string_view artifact) const;

    RunConfig config_;
    ArtifactPaths paths_;
    std::ostream& log_;
    std::shared_ptr<Provider> provider_;

    std::optional<KnowledgeGraph> seen_;
    std::optional<CorpusStore> corpus_;
    std::optional<MentionIndex> linker_;
    std::unique_ptr<Gateway> gateway_;
};

}  // namespace groundcheck
