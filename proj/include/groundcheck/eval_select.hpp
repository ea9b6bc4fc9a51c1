#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "groundcheck/benchmark.hpp"
#include "groundcheck/hypothesis_generator.hpp"

namespace groundcheck {

struct PredictionRecord {
    std::string instance_id;
    Task task = Task::ChemicalGene;
    std::string predicted_label;  ///< task label or kInvalidLabel
    std::string gold_label;
    std::optional<double> groundedness;
    int sample_index = 0;
};

struct LinkMetrics {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool precision_undefined = false;  ///< no predicted positives; precision set to 1
    bool recall_undefined = false;     ///< no gold positives; recall set to 1
};

/// Link level: anything but no_relation/Invalid is a predicted link.
LinkMetrics link_metrics(std::span<const PredictionRecord> records);

/// Exact label matches over all records.
double relation_accuracy(std::span<const PredictionRecord> records);

enum class Strategy { Greedy, SelfConsistency, MaxGroundedness };

std::string_view to_string(Strategy strategy);
std::optional<Strategy> parse_strategy(std::string_view text);

/// What selection looks at for one candidate.
struct SelectionItem {
    int sample_index = 0;
    std::string label;
    std::optional<double> score;
};

std::vector<SelectionItem> selection_items(std::span<const HypothesisCandidate> candidates,
                                           std::span<const double> scores = {});

/// Position (into `items`) of the chosen candidate.
///   Greedy          - the sample_index 0 candidate.
///   SelfConsistency - most frequent label; ties go to the label seen first in
///                     sample order, and within it the lowest sample_index.
///   MaxGroundedness - highest score, lowest sample_index on ties.
std::size_t select(std::span<const SelectionItem> items, Strategy strategy);

struct MetricsRow {
    std::string name;
    std::size_t instances = 0;
    LinkMetrics link;
    double accuracy = 0.0;
};

struct MetricsReport {
    std::vector<MetricsRow> tasks;  ///< in task order
    MetricsRow average;             ///< pooled over all records
    std::optional<MetricsRow> macro;
};

MetricsReport build_report(std::span<const PredictionRecord> records, bool include_macro = false);

/// Percentage with two decimals, e.g. "61.86".
std::string percent(double fraction);

nlohmann::json report_json(const MetricsReport& report);
std::string format_report_table(const MetricsReport& report);

/// Columns: instance, gold, predicted, groundedness, strategy.
std::string predictions_csv(std::span<const PredictionRecord> records, Strategy strategy);

}  // namespace groundcheck
