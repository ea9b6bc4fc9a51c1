#include "groundcheck/eval_select.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>

#include "groundcheck/errors.hpp"

namespace groundcheck {

namespace {

bool is_link(std::string_view label) { return label != kNoRelation && label != kInvalidLabel; }

MetricsRow make_row(std::string name, std::span<const PredictionRecord> records) {
    MetricsRow row;
    row.name = std::move(name);
    row.instances = records.size();
    row.link = link_metrics(records);
    row.accuracy = relation_accuracy(records);
    return row;
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

LinkMetrics link_metrics(std::span<const PredictionRecord> records) {
    if (records.empty()) throw PreconditionError("link metrics need at least one record");
    LinkMetrics m;
    for (const auto& r : records) {
        const bool pred = is_link(r.predicted_label);
        const bool gold = r.gold_label != kNoRelation;
        if (pred && gold) ++m.tp;
        else if (pred) ++m.fp;
        else if (gold) ++m.fn;
        else ++m.tn;
    }
    if (m.tp + m.fp == 0) {
        m.precision = 1.0;
        m.precision_undefined = true;
    } else {
        m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
    }
    if (m.tp + m.fn == 0) {
        m.recall = 1.0;
        m.recall_undefined = true;
    } else {
        m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
    }
    m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

double relation_accuracy(std::span<const PredictionRecord> records) {
    if (records.empty()) throw PreconditionError("accuracy needs at least one record");
    const auto hits = std::count_if(records.begin(), records.end(), [](const PredictionRecord& r) {
        return r.predicted_label != kInvalidLabel && r.predicted_label == r.gold_label;
    });
    return static_cast<double>(hits) / static_cast<double>(records.size());
}

std::string_view to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::Greedy: return "greedy";
        case Strategy::SelfConsistency: return "self_consistency";
        case Strategy::MaxGroundedness: return "max_groundedness";
    }
    return "unknown";
}

std::optional<Strategy> parse_strategy(std::string_view text) {
    if (text == "greedy") return Strategy::Greedy;
    if (text == "self_consistency") return Strategy::SelfConsistency;
    if (text == "max_groundedness") return Strategy::MaxGroundedness;
    return std::nullopt;
}

std::vector<SelectionItem> selection_items(std::span<const HypothesisCandidate> candidates,
                                           std::span<const double> scores) {
    if (!scores.empty() && scores.size() != candidates.size()) {
        throw PreconditionError("score count does not match candidate count");
    }
    std::vector<SelectionItem> items;
    items.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        SelectionItem it{candidates[i].sample_index, candidates[i].predicted_label, std::nullopt};
        if (!scores.empty()) it.score = scores[i];
        items.push_back(std::move(it));
    }
    return items;
}

std::size_t select(std::span<const SelectionItem> items, Strategy strategy) {
    if (items.empty()) throw PreconditionError("no candidates to select from");
    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return items[a].sample_index < items[b].sample_index; });

    switch (strategy) {
        case Strategy::Greedy: {
            for (const auto i : order) {
                if (items[i].sample_index == 0) return i;
            }
            throw PreconditionError("greedy selection needs the sample_index 0 candidate");
        }
        case Strategy::SelfConsistency: {
            std::map<std::string, std::size_t> counts;
            for (const auto& it : items) ++counts[it.label];
            std::size_t best_count = 0;
            for (const auto& [label, n] : counts) best_count = std::max(best_count, n);
            // First candidate in sample order whose label is modal.
            for (const auto i : order) {
                if (counts[items[i].label] == best_count) return i;
            }
            return order.front();
        }
        case Strategy::MaxGroundedness: {
            std::size_t best = order.front();
            for (const auto i : order) {
                if (!items[i].score) throw PreconditionError("groundedness selection needs a score for every candidate");
            }
            for (const auto i : order) {
                if (*items[i].score > *items[best].score) best = i;
            }
            return best;
        }
    }
    throw PreconditionError("unknown selection strategy");
}

MetricsReport build_report(std::span<const PredictionRecord> records, bool include_macro) {
    if (records.empty()) throw PreconditionError("report needs at least one record");
    MetricsReport report;
    for (const auto& spec : all_task_specs()) {
        std::vector<PredictionRecord> subset;
        for (const auto& r : records) {
            if (r.task == spec.task) subset.push_back(r);
        }
        if (!subset.empty()) report.tasks.push_back(make_row(std::string(spec.display), subset));
    }
    report.average = make_row("Average", records);
    if (include_macro) {
        MetricsRow macro;
        macro.name = "Macro average";
        macro.instances = records.size();
        const auto n = static_cast<double>(report.tasks.size());
        for (const auto& row : report.tasks) {
            macro.link.precision += row.link.precision / n;
            macro.link.recall += row.link.recall / n;
            macro.link.f1 += row.link.f1 / n;
            macro.accuracy += row.accuracy / n;
        }
        report.macro = macro;
    }
    return report;
}

std::string percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", fraction * 100.0);
    return buf;
}

nlohmann::json report_json(const MetricsReport& report) {
    auto row_json = [](const MetricsRow& row) {
        return nlohmann::json{{"name", row.name},
                              {"instances", row.instances},
                              {"precision", percent(row.link.precision)},
                              {"recall", percent(row.link.recall)},
                              {"f1", percent(row.link.f1)},
                              {"accuracy", percent(row.accuracy)},
                              {"tp", row.link.tp},
                              {"fp", row.link.fp},
                              {"fn", row.link.fn},
                              {"tn", row.link.tn},
                              {"precision_undefined", row.link.precision_undefined},
                              {"recall_undefined", row.link.recall_undefined}};
    };
    nlohmann::json out;
    out["average_kind"] = "micro";
    out["tasks"] = nlohmann::json::array();
    for (const auto& row : report.tasks) out["tasks"].push_back(row_json(row));
    out["average"] = row_json(report.average);
    if (report.macro) out["macro_average"] = row_json(*report.macro);
    return out;
}

std::string format_report_table(const MetricsReport& report) {
    std::string out = "Average row is micro-averaged over all instances; undefined precision/recall count as 100.\n";
    char line[200];
    std::snprintf(line, sizeof line, "%-18s %9s %9s %9s %9s %9s\n", "Task", "Instances", "Precision", "Recall",
                  "Link F1", "Acc");
    out += line;
    auto add = [&](const MetricsRow& row) {
        std::snprintf(line, sizeof line, "%-18s %9zu %9s %9s %9s %9s\n", row.name.c_str(), row.instances,
                      percent(row.link.precision).c_str(), percent(row.link.recall).c_str(),
                      percent(row.link.f1).c_str(), percent(row.accuracy).c_str());
        out += line;
    };
    for (const auto& row : report.tasks) add(row);
    add(report.average);
    if (report.macro) add(*report.macro);
    return out;
}

std::string predictions_csv(std::span<const PredictionRecord> records, Strategy strategy) {
    std::string out = "instance,gold,predicted,groundedness,strategy\n";
    for (const auto& r : records) {
        out += csv_field(r.instance_id) + "," + csv_field(r.gold_label) + "," + csv_field(r.predicted_label) + ",";
        if (r.groundedness) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.6f", *r.groundedness);
            out += buf;
        }
        out += "," + std::string(to_string(strategy)) + "\n";
    }
    return out;
}

}  // namespace groundcheck
