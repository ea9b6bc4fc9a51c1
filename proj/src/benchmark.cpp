#include "groundcheck/benchmark.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <utility>

#include "groundcheck/errors.hpp"

namespace groundcheck {

namespace {

constexpr std::array<TaskSpec, 3> kTasks{{
    {Task::ChemicalGene, "chemical_gene", "Chemical & Gene", "cg", EntityType::Chemical, EntityType::Gene,
     {"positive_correlate", "negative_correlate"}},
    {Task::DiseaseGene, "disease_gene", "Disease & Gene", "dg", EntityType::Disease, EntityType::Gene,
     {"stimulate", "inhibit"}},
    {Task::GeneGene, "gene_gene", "Gene & Gene", "gg", EntityType::Gene, EntityType::Gene,
     {"positive_correlate", "negative_correlate"}},
}};

using Pair = std::pair<std::string, std::string>;

Pair unordered(std::string_view a, std::string_view b) {
    return a < b ? Pair{std::string(a), std::string(b)} : Pair{std::string(b), std::string(a)};
}

std::vector<std::string> ids_of_type(const KnowledgeGraph& g, EntityType type) {
    std::vector<std::string> ids;
    for (const auto& e : g.entities()) {
        if (e.type == type) ids.push_back(e.id);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::string make_id(std::string_view prefix, std::size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%05zu", n);
    return std::string(prefix) + "-" + buf;
}

}  // namespace

const TaskSpec& task_spec(Task task) { return kTasks[static_cast<std::size_t>(task)]; }

std::span<const TaskSpec> all_task_specs() { return kTasks; }

std::optional<Task> parse_task(std::string_view code) {
    for (const auto& t : kTasks) {
        if (t.code == code) return t.task;
    }
    return std::nullopt;
}

std::vector<std::string> label_set(Task task) {
    const auto& spec = task_spec(task);
    return {std::string(spec.positive_labels[0]), std::string(spec.positive_labels[1]), std::string(kNoRelation)};
}

bool is_task_label(Task task, std::string_view label) {
    const auto& spec = task_spec(task);
    return label == spec.positive_labels[0] || label == spec.positive_labels[1] || label == kNoRelation;
}

std::optional<Task> task_for_types(EntityType a, EntityType b) {
    for (const auto& t : kTasks) {
        if ((t.head_type == a && t.tail_type == b) || (t.head_type == b && t.tail_type == a)) return t.task;
    }
    return std::nullopt;
}

std::size_t negative_count(std::span<const std::size_t> positive_counts) {
    const auto total = std::accumulate(positive_counts.begin(), positive_counts.end(), std::size_t{0});
    if (positive_counts.empty() || total == 0) throw ConstructionError("task has no positive instances");
    return total / positive_counts.size();
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    if (bound == 0) throw PreconditionError("uniform_below needs a positive bound");
    const auto max = std::numeric_limits<std::uint64_t>::max();
    const auto limit = max - (max % bound + 1) % bound;  // largest multiple of bound, minus one
    std::uint64_t x;
    do {
        x = rng();
    } while (x > limit);
    return x % bound;
}

std::uint64_t task_seed(std::uint64_t seed, Task task) {
    return seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(task) + 1));
}

Benchmark build_benchmark(const KnowledgeGraph& seen, const KnowledgeGraph& unseen, std::span<const Task> tasks,
                          std::uint64_t seed) {
    std::set<Pair> seen_pairs;
    for (const auto& e : seen.edges()) seen_pairs.insert(unordered(e.head, e.tail));
    std::set<Pair> any_pairs = seen_pairs;
    for (const auto& e : unseen.edges()) any_pairs.insert(unordered(e.head, e.tail));

    std::vector<Task> ordered(tasks.begin(), tasks.end());
    std::sort(ordered.begin(), ordered.end());
    ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());

    Benchmark out;
    for (const auto task : ordered) {
        const auto& spec = task_spec(task);

        // Rules (a)-(c), grouped by unordered pair; edges arrive in canonical order.
        std::map<Pair, std::vector<const KgEdge*>> groups;
        for (const auto& e : unseen.edges()) {
            const auto& h = unseen.entity(e.head);
            const auto& t = unseen.entity(e.tail);
            if (task_for_types(h.type, t.type) != task) continue;
            const auto key = unordered(e.head, e.tail);
            if (seen_pairs.contains(key)) continue;
            if (e.pmids.size() < 2) continue;
            if (e.relation != spec.positive_labels[0] && e.relation != spec.positive_labels[1]) continue;
            groups[key].push_back(&e);
        }

        std::vector<BenchmarkInstance> instances;
        std::array<std::size_t, 2> positives{0, 0};
        for (const auto& [key, edges] : groups) {
            const auto& label = edges.front()->relation;
            const bool consistent =
                std::all_of(edges.begin(), edges.end(), [&](const KgEdge* e) { return e->relation == label; });
            if (!consistent) continue;

            BenchmarkInstance inst;
            inst.task = task;
            inst.label = label;
            inst.head = edges.front()->head;
            inst.tail = edges.front()->tail;
            if (spec.head_type != spec.tail_type && unseen.entity(inst.head).type != spec.head_type) {
                std::swap(inst.head, inst.tail);
            }
            for (const auto* e : edges) inst.pmids.insert(inst.pmids.end(), e->pmids.begin(), e->pmids.end());
            std::sort(inst.pmids.begin(), inst.pmids.end());
            inst.pmids.erase(std::unique(inst.pmids.begin(), inst.pmids.end()), inst.pmids.end());
            ++positives[label == spec.positive_labels[0] ? 0 : 1];
            instances.push_back(std::move(inst));
        }

        std::size_t wanted = 0;
        try {
            wanted = negative_count(positives);
        } catch (const ConstructionError&) {
            throw ConstructionError(std::string("task ") + std::string(spec.display) + " has no positive instances");
        }

        // Rule (d): seeded uniform draws over typed pairs with no edge at all.
        const auto heads = ids_of_type(unseen, spec.head_type);
        const auto tails = ids_of_type(unseen, spec.tail_type);
        const bool same_type = spec.head_type == spec.tail_type;
        const std::uint64_t n = heads.size();
        const std::uint64_t total_pairs = same_type ? (n == 0 ? 0 : n * (n - 1) / 2) : n * tails.size();
        std::uint64_t linked_pairs = 0;
        for (const auto& [a, b] : any_pairs) {
            const auto ta = unseen.entity(a).type;
            const auto tb = unseen.entity(b).type;
            if (task_for_types(ta, tb) == task) ++linked_pairs;
        }
        if (total_pairs - linked_pairs < wanted) {
            throw ConstructionError(std::string("task ") + std::string(spec.display) + " needs " +
                                    std::to_string(wanted) + " negative pairs but only " +
                                    std::to_string(total_pairs - linked_pairs) + " exist");
        }

        std::mt19937_64 rng(task_seed(seed, task));
        std::set<Pair> chosen;
        while (chosen.size() < wanted) {
            const auto& a = heads[uniform_below(rng, heads.size())];
            const auto& b = tails[uniform_below(rng, tails.size())];
            if (a == b) continue;
            auto key = unordered(a, b);
            if (any_pairs.contains(key) || chosen.contains(key)) continue;
            chosen.insert(std::move(key));
            instances.push_back({"", task, a, b, std::string(kNoRelation), {}});
        }

        std::sort(instances.begin(), instances.end(), [](const auto& x, const auto& y) {
            return std::tie(x.head, x.tail) < std::tie(y.head, y.tail);
        });
        for (std::size_t i = 0; i < instances.size(); ++i) instances[i].id = make_id(spec.id_prefix, i + 1);

        TaskStats stats;
        stats.task = task;
        stats.labels = {{std::string(spec.positive_labels[0]), positives[0]},
                        {std::string(spec.positive_labels[1]), positives[1]},
                        {std::string(kNoRelation), wanted}};
        stats.total = instances.size();
        out.stats.push_back(std::move(stats));
        std::move(instances.begin(), instances.end(), std::back_inserter(out.instances));
    }
    return out;
}

std::string format_stats_table(std::span<const TaskStats> stats) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof line, "%-18s %-20s %10s\n", "Task", "Label", "# Instance");
    out += line;
    for (const auto& t : stats) {
        bool first = true;
        for (const auto& l : t.labels) {
            std::snprintf(line, sizeof line, "%-18s %-20s %10zu\n",
                          first ? std::string(task_spec(t.task).display).c_str() : "", l.label.c_str(), l.count);
            out += line;
            first = false;
        }
        std::snprintf(line, sizeof line, "%-18s %-20s %10zu\n", "", "total", t.total);
        out += line;
    }
    return out;
}

}  // namespace groundcheck
