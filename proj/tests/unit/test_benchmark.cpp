#include <doctest.h>

#include <map>
#include <set>

#include "groundcheck/benchmark.hpp"
#include "groundcheck/errors.hpp"
#include "oracles/kg_oracle.hpp"
#include "support/synthetic_kg.hpp"

using namespace groundcheck;

namespace {

constexpr std::array<Task, 3> kAll{Task::ChemicalGene, Task::DiseaseGene, Task::GeneGene};

Benchmark build(const testsupport::KgParts& kg, std::uint64_t seed) {
    const auto g = KnowledgeGraph::from_parts(kg.entities, kg.edges);
    const auto split = temporal_split(g, testsupport::kSeenMax, testsupport::kUnseenMin);
    return build_benchmark(split.seen, split.unseen, kAll, seed);
}

}  // namespace

TEST_CASE("negative_count is the floor of the mean positive count") {
    const std::array<std::size_t, 2> cg{328, 478}, dg{104, 75}, gg{247, 118};
    CHECK(negative_count(cg) == 403);
    CHECK(negative_count(dg) == 89);
    CHECK(negative_count(gg) == 182);
    const std::array<std::size_t, 2> zero{0, 0};
    CHECK_THROWS_AS((void)negative_count(zero), ConstructionError);
}

TEST_CASE("label sets end with no_relation") {
    for (const auto t : kAll) {
        const auto labels = label_set(t);
        REQUIRE(labels.size() == 3);
        CHECK(labels.back() == "no_relation");
        CHECK(is_task_label(t, labels[0]));
        CHECK_FALSE(is_task_label(t, "bind"));
    }
    CHECK(label_set(Task::DiseaseGene)[0] == "stimulate");
    CHECK(parse_task("gene_gene") == Task::GeneGene);
    CHECK_FALSE(parse_task("gene").has_value());
}

TEST_CASE("uniform_below matches a 128-bit rejection reference") {
    for (std::uint64_t bound : {1ULL, 2ULL, 3ULL, 7ULL, 1000ULL, (1ULL << 63) + 5}) {
        std::mt19937_64 a(99), b(99);
        for (int i = 0; i < 200; ++i) CHECK(uniform_below(a, bound) == oracle::draw_below(b, bound));
    }
}

TEST_CASE("overlap with the seen graph excludes a pair") {
    std::vector<Entity> ents{{"C1", EntityType::Chemical, "c1", {"c1"}},
                             {"C2", EntityType::Chemical, "c2", {"c2"}},
                             {"C3", EntityType::Chemical, "c3", {"c3"}},
                             {"G1", EntityType::Gene, "g1", {"g1"}},
                             {"G2", EntityType::Gene, "g2", {"g2"}},
                             {"G3", EntityType::Gene, "g3", {"g3"}}};
    std::vector<KgEdge> edges{// seen relation on the same pair, different label
                              {"C1", "bind", "G1", {30000000}},
                              {"C1", "positive_correlate", "G1", {38300000, 38400000}},
                              // kept: two PMIDs, reversed storage orientation
                              {"G2", "negative_correlate", "C2", {38300000, 38500000}},
                              // one PMID only
                              {"C3", "positive_correlate", "G3", {38300000}}};
    const auto g = KnowledgeGraph::from_parts(ents, edges);
    const auto split = temporal_split(g, 36600000, 38200000);
    const std::array<Task, 1> cg{Task::ChemicalGene};
    const auto b = build_benchmark(split.seen, split.unseen, cg, 1);

    std::vector<BenchmarkInstance> pos;
    for (const auto& i : b.instances) {
        if (i.label != "no_relation") pos.push_back(i);
    }
    REQUIRE(pos.size() == 1);
    CHECK(pos[0].head == "C2");
    CHECK(pos[0].tail == "G2");
    CHECK(pos[0].label == "negative_correlate");
    CHECK(pos[0].pmids == std::vector<std::uint64_t>{38300000, 38500000});
    // floor(mean(0, 1)) = 0 negatives
    CHECK(b.instances.size() == 1);
    CHECK(b.instances[0].id == "cg-00001");
}

TEST_CASE("a task without positives fails construction") {
    std::vector<Entity> ents{{"C1", EntityType::Chemical, "c1", {"c1"}}, {"G1", EntityType::Gene, "g1", {"g1"}}};
    std::vector<KgEdge> edges{{"C1", "positive_correlate", "G1", {30000000}}};
    const auto g = KnowledgeGraph::from_parts(ents, edges);
    const auto split = temporal_split(g, 36600000, 38200000);
    const std::array<Task, 1> cg{Task::ChemicalGene};
    CHECK_THROWS_AS((void)build_benchmark(split.seen, split.unseen, cg, 1), ConstructionError);
}

TEST_CASE("build_benchmark equals the reference construction on random graphs") {
    int compared = 0;
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        const auto kg = testsupport::synthetic_kg(200, seed);
        const auto g = KnowledgeGraph::from_parts(kg.entities, kg.edges);
        const auto want = oracle::build_benchmark(kg.entities, oracle::raw_edges({g.edges().begin(), g.edges().end()}), testsupport::kSeenMax,
                                                  testsupport::kUnseenMin, seed * 31);
        std::set<std::string> present;
        for (const auto& w : want) present.insert(w.task);
        if (present.size() < 3) {
            CHECK_THROWS_AS((void)build(kg, seed * 31), ConstructionError);
            continue;
        }
        const auto got = build(kg, seed * 31);
        REQUIRE(got.instances.size() == want.size());
        for (std::size_t i = 0; i < want.size(); ++i) {
            CHECK(task_spec(got.instances[i].task).code == want[i].task);
            CHECK(got.instances[i].head == want[i].head);
            CHECK(got.instances[i].tail == want[i].tail);
            CHECK(got.instances[i].label == want[i].label);
            CHECK(got.instances[i].pmids == want[i].pmids);
        }
        ++compared;
    }
    CHECK(compared >= 20);
}

TEST_CASE("benchmark invariants hold on random graphs") {
    for (std::uint64_t seed = 100; seed < 130; ++seed) {
        const auto kg = testsupport::synthetic_kg(250, seed);
        const auto g = KnowledgeGraph::from_parts(kg.entities, kg.edges);
        const auto split = temporal_split(g, testsupport::kSeenMax, testsupport::kUnseenMin);
        Benchmark b;
        try {
            b = build_benchmark(split.seen, split.unseen, kAll, seed);
        } catch (const ConstructionError&) {
            continue;
        }
        std::set<std::string> ids;
        std::map<Task, std::array<std::size_t, 3>> counts;
        for (const auto& inst : b.instances) {
            CHECK(ids.insert(inst.id).second);
            CHECK(is_task_label(inst.task, inst.label));
            CHECK_FALSE(split.seen.connected(inst.head, inst.tail));
            const auto labels = label_set(inst.task);
            const auto li = std::find(labels.begin(), labels.end(), inst.label) - labels.begin();
            ++counts[inst.task][static_cast<std::size_t>(li)];
            if (inst.label == "no_relation") {
                CHECK_FALSE(split.unseen.connected(inst.head, inst.tail));
                CHECK(inst.pmids.empty());
            } else {
                CHECK(inst.pmids.size() >= 2);
                for (auto p : inst.pmids) CHECK(p >= testsupport::kUnseenMin);
            }
            const auto& spec = task_spec(inst.task);
            CHECK(g.entity(inst.head).type == spec.head_type);
            CHECK(g.entity(inst.tail).type == spec.tail_type);
        }
        for (const auto& s : b.stats) {
            const auto& c = counts[s.task];
            CHECK(c[2] == (c[0] + c[1]) / 2);
            CHECK(s.labels[0].count == c[0]);
            CHECK(s.labels[1].count == c[1]);
            CHECK(s.total == c[0] + c[1] + c[2]);
        }
        // Same seed, same benchmark.
        const auto again = build_benchmark(split.seen, split.unseen, kAll, seed);
        CHECK(again.instances == b.instances);
    }
}

TEST_CASE("format_stats_table lists every label row") {
    TaskStats s{Task::ChemicalGene, {{"positive_correlate", 328}, {"negative_correlate", 478}, {"no_relation", 403}},
                1209};
    const std::array<TaskStats, 1> rows{s};
    const auto table = format_stats_table(rows);
    CHECK(table.find("Chemical & Gene") != std::string::npos);
    CHECK(table.find("403") != std::string::npos);
    CHECK(table.find("1209") != std::string::npos);
}
