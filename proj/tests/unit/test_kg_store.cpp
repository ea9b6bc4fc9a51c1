#include <doctest.h>

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "groundcheck/errors.hpp"
#include "groundcheck/kg_store.hpp"
#include "oracles/kg_oracle.hpp"
#include "support/synthetic_kg.hpp"

using namespace groundcheck;

namespace {

const char* kEntities = R"({"id":"A","type":"Gene","name":"alpha","mentions":["alpha","ALP"]}
{"id":"B","type":"Gene","name":"beta","mentions":["beta"]}
{"id":"C","type":"Chemical","name":"gamma","mentions":["gamma"]}
{"id":"D","type":"Disease","name":"delta","mentions":["delta"]}
)";

KnowledgeGraph path_graph() {
    std::istringstream ents(kEntities);
    std::istringstream edges(R"({"head":"A","relation":"positive_correlate","tail":"B","pmids":[10]}
{"head":"C","relation":"negative_correlate","tail":"B","pmids":[11]}
)");
    return KnowledgeGraph::load(ents, edges);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("load_graph counts edges and keeps parallel relations") {
    std::istringstream ents(kEntities);
    std::istringstream edges(R"({"head":"A","relation":"positive_correlate","tail":"B","pmids":[1,2]}
{"head":"A","relation":"negative_correlate","tail":"B","pmids":[3]}
{"head":"C","relation":"positive_correlate","tail":"A","pmids":[4]}
{"head":"D","relation":"stimulate","tail":"A","pmids":[5]}
{"head":"B","relation":"positive_correlate","tail":"C","pmids":[6, 6]}
)");
    const auto g = KnowledgeGraph::load(ents, edges);
    CHECK(g.stats().edge_count == 5);
    CHECK(g.stats().entity_count == 4);
    CHECK(g.connected("A", "B"));
    CHECK(g.connected("B", "A"));
    CHECK_FALSE(g.connected("C", "D"));
    CHECK(g.edges().back().pmids == std::vector<std::uint64_t>{5});
    for (const auto& e : g.edges()) {
        if (e.head == "B") CHECK(e.pmids == std::vector<std::uint64_t>{6});
    }
}

TEST_CASE("load_graph rejects unknown entities with the line number") {
    std::istringstream ents(kEntities);
    std::istringstream edges(R"({"head":"A","relation":"r","tail":"B","pmids":[1]}

{"head":"A","relation":"r","tail":"ZZZ","pmids":[1]}
)");
    try {
        (void)KnowledgeGraph::load(ents, edges);
        FAIL("expected load error");
    } catch (const IngestError& e) {
        CHECK(e.record() == 3);
    }

    std::istringstream ents2(kEntities);
    std::istringstream loop(R"({"head":"A","relation":"r","tail":"A","pmids":[1]})");
    CHECK_THROWS_AS((void)KnowledgeGraph::load(ents2, loop), IngestError);
    std::istringstream ents3(R"({"id":"X","type":"Species","name":"x","mentions":["x"]})");
    std::istringstream none("");
    CHECK_THROWS_AS((void)KnowledgeGraph::load(ents3, none), IngestError);
}

TEST_CASE("temporal_split applies the PMID windows") {
    std::vector<Entity> ents{{"A", EntityType::Gene, "a", {"a"}},
                             {"B", EntityType::Gene, "b", {"b"}},
                             {"C", EntityType::Gene, "c", {"c"}},
                             {"D", EntityType::Gene, "d", {"d"}}};
    std::vector<KgEdge> edges{{"A", "r", "B", {36000000}},
                              {"A", "r", "C", {38300000, 38400000}},
                              {"A", "r", "D", {37000000}},
                              {"B", "r", "C", {36000000, 37000000, 38500000}}};
    const auto g = KnowledgeGraph::from_parts(ents, edges);
    const auto split = temporal_split(g, 36600000, 38200000);

    CHECK(split.seen.stats().edge_count == 2);
    CHECK(split.unseen.stats().edge_count == 1);
    CHECK(split.seen.connected("A", "B"));
    CHECK(split.unseen.connected("A", "C"));
    CHECK_FALSE(split.seen.connected("A", "D"));
    CHECK_FALSE(split.unseen.connected("A", "D"));
    // Straddling edge: seen only, with only its seen-window provenance.
    CHECK_FALSE(split.unseen.connected("B", "C"));
    for (const auto& e : split.seen.edges()) {
        if (e.tail == "C") CHECK(e.pmids == std::vector<std::uint64_t>{36000000});
    }
    CHECK_THROWS_AS((void)temporal_split(g, 38200000, 36600000), PreconditionError);
}

TEST_CASE("split subsets are disjoint on random graphs") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto kg = testsupport::synthetic_kg(150, seed);
        const auto g = KnowledgeGraph::from_parts(kg.entities, kg.edges);
        const auto split = temporal_split(g, testsupport::kSeenMax, testsupport::kUnseenMin);
        std::set<std::tuple<std::string, std::string, std::string>> seen;
        for (const auto& e : split.seen.edges()) {
            seen.insert({e.head, e.relation, e.tail});
            for (auto p : e.pmids) CHECK(p <= testsupport::kSeenMax);
        }
        for (const auto& e : split.unseen.edges()) {
            CHECK_FALSE(seen.count({e.head, e.relation, e.tail}));
            for (auto p : e.pmids) CHECK(p >= testsupport::kUnseenMin);
        }
    }
}

TEST_CASE("find_link_chains on a simple path") {
    const auto g = path_graph();
    const auto chains = find_link_chains(g, "A", "C", 2, 10);
    REQUIRE(chains.size() == 1);
    CHECK(chains[0].length() == 2);
    CHECK(chains[0].nodes == std::vector<std::string>{"A", "B", "C"});
    CHECK(chains[0].is_valid_path());

    CHECK(find_link_chains(g, "A", "D").empty());
    CHECK(find_link_chains(g, "A", "A").empty());
    CHECK(find_link_chains(g, "A", "C", 1, 10).empty());
    CHECK_THROWS_AS((void)find_link_chains(g, "A", "nope"), NotFoundError);
}

TEST_CASE("find_link_chains equals exhaustive path enumeration") {
    std::mt19937_64 rng(17);
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
        // ~50 nodes: 10 chemicals, 10 diseases, 30 genes.
        const auto kg = testsupport::synthetic_kg(70, seed, 10, 10, 30);
        const auto g = KnowledgeGraph::from_parts(kg.entities, kg.edges);
        const auto raw = oracle::raw_edges({g.edges().begin(), g.edges().end()});
        std::uniform_int_distribution<std::size_t> pick(0, kg.entities.size() - 1);
        for (int q = 0; q < 10; ++q) {
            const auto& s = kg.entities[pick(rng)].id;
            const auto& t = kg.entities[pick(rng)].id;
            for (std::size_t hops : {1, 2, 3}) {
                const auto got = find_link_chains(g, s, t, hops, 1000000);
                const auto want = oracle::all_paths(raw, s, t, hops, 1000000);
                REQUIRE(got.size() == want.size());
                for (std::size_t i = 0; i < got.size(); ++i) {
                    CHECK(got[i].nodes == want[i].nodes);
                    CHECK(got[i].is_valid_path());
                    for (std::size_t j = 0; j < got[i].edges.size(); ++j) {
                        CHECK(got[i].edges[j].relation == want[i].edges[j].relation);
                        CHECK(got[i].edges[j].head == want[i].edges[j].head);
                    }
                }
                const auto capped = find_link_chains(g, s, t, hops, 3);
                CHECK(capped.size() == std::min<std::size_t>(3, want.size()));
            }
        }
    }
}

TEST_CASE("textualize_chain follows the sentence template") {
    std::vector<Entity> ents{{"MESH:D001241", EntityType::Chemical, "aspirin", {"aspirin"}},
                             {"5743", EntityType::Gene, "PTGS2", {"PTGS2", "COX-2"}},
                             {"3569", EntityType::Gene, "IL6", {"IL6", "IL-6"}},
                             {"MESH:D015179", EntityType::Disease, "colorectal neoplasms", {"colorectal cancer"}}};
    std::vector<KgEdge> edges{{"MESH:D001241", "negative_correlate", "5743", {1}},
                              {"5743", "positive_correlate", "3569", {2}},
                              {"MESH:D015179", "stimulate", "3569", {3}}};
    const auto g = KnowledgeGraph::from_parts(ents, edges);

    const auto one = find_link_chains(g, "MESH:D001241", "5743");
    REQUIRE(!one.empty());
    const auto sentence = textualize_chain(g, one[0]);
    CHECK(sentence == "Chemical aspirin (MESH:D001241) negative_correlate Gene PTGS2 (5743).");

    const auto three = find_link_chains(g, "MESH:D001241", "MESH:D015179");
    REQUIRE(three.size() == 1);
    CHECK(three[0].length() == 3);
    CHECK(textualize_chain(g, three[0]) ==
          read_file(std::string(GROUNDCHECK_TEST_DATA_DIR) + "/golden/chain_aspirin_colorectal.txt"));
}

TEST_CASE("kg_context keeps only edges inside the entity set") {
    std::istringstream ents(kEntities);
    std::istringstream edges(R"({"head":"A","relation":"positive_correlate","tail":"B","pmids":[1]}
{"head":"A","relation":"positive_correlate","tail":"C","pmids":[2]}
)");
    const auto g = KnowledgeGraph::load(ents, edges);
    const std::vector<std::string> ab{"A", "B"};
    const auto ctx = kg_context(g, ab);
    REQUIRE(ctx.size() == 1);
    CHECK(ctx[0].tail == "B");
    const std::vector<std::string> a{"A"};
    CHECK(kg_context(g, a).empty());
    CHECK(kg_context(g, {}).empty());
    const std::vector<std::string> unknown{"A", "nope"};
    CHECK(kg_context(g, unknown).empty());
}

TEST_CASE("kg_context equals a linear-scan filter and is subset-monotone") {
    std::mt19937_64 rng(23);
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const auto kg = testsupport::synthetic_kg(120, seed);
        const auto g = KnowledgeGraph::from_parts(kg.entities, kg.edges);
        const auto raw = oracle::raw_edges({g.edges().begin(), g.edges().end()});
        std::bernoulli_distribution take(0.3);
        std::set<std::string> v1, v2;
        for (const auto& e : kg.entities) {
            if (take(rng)) {
                v2.insert(e.id);
                if (take(rng) || take(rng)) v1.insert(e.id);
            }
        }
        const std::vector<std::string> ids2(v2.begin(), v2.end());
        const std::vector<std::string> ids1(v1.begin(), v1.end());
        const auto got = kg_context(g, ids2);
        const auto want = oracle::context_filter(raw, v2);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].head == want[i].head);
            CHECK(got[i].relation == want[i].relation);
            CHECK(got[i].tail == want[i].tail);
        }
        for (const auto& e : kg_context(g, ids1)) {
            CHECK(std::find(got.begin(), got.end(), e) != got.end());
        }
    }
}
