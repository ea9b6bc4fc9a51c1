#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "groundcheck/benchmark.hpp"
#include "groundcheck/eval_select.hpp"
#include "groundcheck/hypothesis_generator.hpp"
#include "groundcheck/knowhd.hpp"

namespace groundcheck {

/// Provenance stamped on every artifact.
struct ArtifactMeta {
    std::string artifact;  ///< "benchmark", "candidates", ...
    std::string config_hash;
    std::string inputs_hash;  ///< hash of the config parts and files this artifact depends on
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
    static ArtifactMeta from_json(const nlohmann::json& j);
    friend bool operator==(const ArtifactMeta&, const ArtifactMeta&) = default;
};

nlohmann::json to_json(const BenchmarkInstance& instance);
BenchmarkInstance instance_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TaskStats& stats);

nlohmann::json to_json(const HypothesisCandidate& candidate);
HypothesisCandidate candidate_from_json(const nlohmann::json& j);

nlohmann::json to_json(const GroundednessReport& report);
/// Only the fields later stages read: instance, sample, mode, score, flags.
GroundednessReport report_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PredictionRecord& record, Strategy strategy);
PredictionRecord prediction_from_json(const nlohmann::json& j);

/// JSON-lines file whose first line is {"meta": {...}}.
struct JsonLines {
    ArtifactMeta meta;
    std::vector<nlohmann::json> records;
};

/// Throws NotFoundError when missing, FormatError when malformed. Without
/// `require_meta` a file whose first line is a plain record is accepted too.
JsonLines read_json_lines(const std::filesystem::path& path, bool require_meta = true);

/// Meta record of an artifact, or nothing if it is absent or unreadable.
std::optional<ArtifactMeta> peek_meta(const std::filesystem::path& path);

std::string json_lines_text(const ArtifactMeta& meta, const std::vector<nlohmann::json>& records);

/// Writes through a sibling temp file and a rename.
void write_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace groundcheck
