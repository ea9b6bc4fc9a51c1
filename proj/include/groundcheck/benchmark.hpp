#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "groundcheck/kg_store.hpp"

namespace groundcheck {

enum class Task { ChemicalGene, DiseaseGene, GeneGene };

inline constexpr std::string_view kNoRelation = "no_relation";

struct TaskSpec {
    Task task;
    std::string_view code;     ///< "chemical_gene"
    std::string_view display;  ///< "Chemical & Gene"
    std::string_view id_prefix;
    EntityType head_type;
    EntityType tail_type;
    std::array<std::string_view, 2> positive_labels;
};

const TaskSpec& task_spec(Task task);
std::span<const TaskSpec> all_task_specs();
std::optional<Task> parse_task(std::string_view code);

/// Ordered label set of a task, "no_relation" last.
std::vector<std::string> label_set(Task task);
bool is_task_label(Task task, std::string_view label);

/// Task whose entity types match the (unordered) pair, if any.
std::optional<Task> task_for_types(EntityType a, EntityType b);

struct BenchmarkInstance {
    std::string id;
    Task task = Task::ChemicalGene;
    std::string head;
    std::string tail;
    std::string label;
    std::vector<std::uint64_t> pmids;  ///< supporting articles; empty for negatives

    friend bool operator==(const BenchmarkInstance&, const BenchmarkInstance&) = default;
};

struct LabelCount {
    std::string label;
    std::size_t count = 0;
};

struct TaskStats {
    Task task = Task::ChemicalGene;
    std::vector<LabelCount> labels;  ///< in label_set order
    std::size_t total = 0;
};

struct Benchmark {
    std::vector<BenchmarkInstance> instances;
    std::vector<TaskStats> stats;
};

/// Number of "no_relation" instances for a task: floor of the mean of its
/// positive-label counts. Throws ConstructionError when every count is zero.
std::size_t negative_count(std::span<const std::size_t> positive_counts);

/// Uniform integer in [0, bound) from raw engine output (rejection sampling),
/// so sampling is reproducible across standard library implementations.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound);

/// Per-task engine seed derived from the run seed.
std::uint64_t task_seed(std::uint64_t seed, Task task);

/// Builds benchmark instances from a temporal split.
///
/// Positives come from unseen edges of the task's entity types that
///   (a) share no unordered entity pair with any seen edge,
///   (b) are supported by at least two PMIDs,
///   (c) carry one of the task's positive labels.
/// Pairs with conflicting labels are dropped; the head of a cross-type
/// instance is the non-gene entity. Negatives are drawn uniformly from
/// same-typed pairs without any seen or unseen edge, floor(mean positive
/// count) of them. Instances are sorted by (task, head, tail) and numbered
/// per task ("cg-00001", ...).
Benchmark build_benchmark(const KnowledgeGraph& seen, const KnowledgeGraph& unseen, std::span<const Task> tasks,
                          std::uint64_t seed);

/// Aligned text table with one row per (task, label).
std::string format_stats_table(std::span<const TaskStats> stats);

}  // namespace groundcheck
