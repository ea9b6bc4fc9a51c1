#include <doctest.h>

#include <random>
#include <set>

#include "groundcheck/errors.hpp"
#include "groundcheck/knowhd.hpp"
#include "oracles/bm25_oracle.hpp"
#include "support/scripted_judge.hpp"
#include "support/synthetic_corpus.hpp"

using namespace groundcheck;
using nlohmann::json;

namespace {

ProviderConfig quick() {
    ProviderConfig c;
    c.backoff_ms = 0;
    c.max_retries = 0;
    return c;
}

KnowledgeGraph small_graph() {
    std::vector<Entity> ents{{"A", EntityType::Gene, "alphagene", {"alphagene"}},
                             {"B", EntityType::Gene, "betagene", {"betagene"}},
                             {"C", EntityType::Chemical, "gammachem", {"gammachem"}}};
    std::vector<KgEdge> edges{{"A", "positive_correlate", "B", {30000000}}, {"C", "negative_correlate", "B", {30000001}}};
    return KnowledgeGraph::from_parts(ents, edges);
}

/// Extraction replies echo the claim's words that are entity mentions.
MockReply linker_script(const ChatRequest& r, int) {
    const auto& t = r.user_text;
    if (t.rfind("### Background\n", 0) == 0) {
        json ents = json::array();
        for (const char* m : {"alphagene", "betagene", "gammachem"}) {
            if (t.find(m) != std::string::npos && t.find(m) < t.find("\n\nExtract")) ents.push_back(std::string("Gene ") + m);
        }
        return MockReply::ok("```json" + json{{"entities", ents}}.dump() + "```");
    }
    if (t.rfind("### Statement\n", 0) == 0) return MockReply::ok("```json{\"claims\": [\"A inhibits B\", \"B regulates C\"]}```");
    if (t.find("refuse") != std::string::npos) return MockReply::ok("I cannot judge this.");
    return MockReply::ok("{\"groundedness\": 1}");
}

}  // namespace

TEST_CASE("decompose parses claims and includes the statement") {
    std::string seen;
    auto mock = std::make_shared<MockProvider>([&](const ChatRequest& r, int) {
        seen = r.user_text;
        if (r.user_text.find("empty") != std::string::npos) return MockReply::ok("```json{\"claims\": []}```");
        if (r.user_text.find("broken") != std::string::npos) return MockReply::ok("no");
        return MockReply::ok("```json{\"claims\": [\"A inhibits B\", \"B regulates C\"]}```");
    });
    Gateway gw(mock, quick());
    const Detector det(gw, nullptr, nullptr, nullptr);

    const auto d = det.decompose("Reasoning text.", "Final statement.");
    REQUIRE(d.claims.size() == 2);
    CHECK(d.claims[0].index == 0);
    CHECK(d.claims[1].index == 1);
    CHECK(d.claims[1].text == "B regulates C");
    CHECK(seen.find("### Statement\nReasoning text.\n\nFinal statement.\n\n") == 0);

    const auto e = det.decompose("empty", "");
    CHECK(e.claims.empty());
    CHECK_FALSE(e.failed);
    const auto b = det.decompose("broken", "x");
    CHECK(b.claims.empty());
    CHECK(b.failed);
    CHECK_THROWS_AS(det.decompose("", ""), PreconditionError);
}

TEST_CASE("claim_context by mode") {
    const auto g = small_graph();
    const auto idx = MentionIndex::build(g);
    const auto docs = testsupport::synthetic_corpus(100);
    const auto corpus = CorpusStore::from_documents(docs);
    Gateway gw(std::make_shared<MockProvider>(linker_script), quick());
    const Detector det(gw, &corpus, &g, &idx);

    const auto kg = det.claim_context("alphagene activates betagene", SourceMode::KG);
    REQUIRE(kg.edges.size() == 1);
    CHECK(kg.edges[0].head == "A");
    CHECK(kg.edges[0].tail == "B");
    CHECK(kg.docs.empty());
    CHECK(kg.entities.entity_ids() == std::vector<std::string>{"A", "B"});

    CHECK(det.claim_context("nothing known here", SourceMode::KG).edges.empty());
    CHECK(det.claim_context("alphagene alone", SourceMode::KG).edges.empty());

    std::vector<oracle::OracleDoc> odocs;
    for (const auto& d : docs) odocs.push_back({d.doc_id, d.pmid, oracle::tokenize_ascii(indexed_text(d))});
    const oracle::BruteBm25 brute(odocs, 1.5, 0.75);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
        const auto claim = testsupport::random_query(rng);
        const auto lit = det.claim_context(claim, SourceMode::Lit);
        CHECK(lit.edges.empty());
        const auto want = brute.retrieve(oracle::tokenize_ascii(claim), 8, 0.0, 36600000);
        REQUIRE(lit.docs.size() == want.size());
        for (std::size_t j = 0; j < want.size(); ++j) {
            CHECK(lit.docs[j].doc_id == want[j].id);
            CHECK(lit.docs[j].score == doctest::Approx(want[j].score).epsilon(1e-9));
        }
    }
}

TEST_CASE("context under Both covers Lit and KG") {
    const auto g = small_graph();
    const auto idx = MentionIndex::build(g);
    auto docs = testsupport::synthetic_corpus(60);
    docs.push_back({"extra-1", 30000000, "alphagene and betagene", "alphagene binds betagene in cells"});
    const auto corpus = CorpusStore::from_documents(docs);
    Gateway gw(std::make_shared<MockProvider>(linker_script), quick());
    const Detector det(gw, &corpus, &g, &idx);
    std::mt19937_64 rng(9);
    for (int i = 0; i < 30; ++i) {
        auto claim = testsupport::random_query(rng);
        if (i % 2 == 0) claim += " alphagene betagene";
        if (i % 3 == 0) claim += " gammachem";
        const auto lit = det.claim_context(claim, SourceMode::Lit);
        const auto kg = det.claim_context(claim, SourceMode::KG);
        const auto both = det.claim_context(claim, SourceMode::Both);
        std::set<std::string> both_docs;
        for (const auto& h : both.docs) both_docs.insert(h.doc_id);
        for (const auto& h : lit.docs) CHECK(both_docs.count(h.doc_id));
        for (const auto& e : kg.edges) CHECK(std::find(both.edges.begin(), both.edges.end(), e) != both.edges.end());
    }
}

TEST_CASE("verify reads the judge") {
    const auto g = small_graph();
    auto mock = std::make_shared<MockProvider>([](const ChatRequest& r, int) {
        if (r.user_text.find("yes-claim") != std::string::npos) return MockReply::ok("{\"groundedness\": 1}");
        if (r.user_text.find("no-claim") != std::string::npos) return MockReply::ok("```json\n{\"groundedness\": 0}\n```");
        return MockReply::ok("I refuse.");
    });
    Gateway gw(mock, quick());
    const Detector det(gw, nullptr, &g, nullptr);
    const std::vector<KgEdge> edges{g.edges()[0]};
    const auto yes = det.verify("yes-claim", {}, edges);
    CHECK(yes.grounded);
    CHECK(yes.edges.size() == 1);
    CHECK_FALSE(det.verify("no-claim", {}, {}).grounded);
    const auto refused = det.verify("other", {}, {});
    CHECK_FALSE(refused.grounded);
    CHECK(refused.judge_failed);
}

TEST_CASE("groundedness arithmetic and flags") {
    auto judge = std::make_shared<testsupport::ScriptedJudge>();
    const auto corpus = CorpusStore::from_documents(testsupport::synthetic_corpus(20));
    Gateway gw(testsupport::judge_provider(judge), quick());
    const Detector det(gw, &corpus, nullptr, nullptr);

    judge->set_case(1, {true, true, false, true});
    const auto r = det.groundedness("i1", 0, "case-1 reasoning", "statement", SourceMode::Lit);
    CHECK(r.score == 0.75);
    CHECK(r.claims.size() == 4);
    CHECK(r.verdicts.size() == 4);
    CHECK_FALSE(r.flags.unverifiable);

    judge->set_case(2, {true, true, true});
    CHECK(det.groundedness("i2", 0, "case-2", "", SourceMode::Lit).score == 1.0);

    judge->set_case(3, {});
    const auto empty = det.groundedness("i3", 0, "case-3", "", SourceMode::Lit);
    CHECK(empty.score == 0.0);
    CHECK(empty.flags.unverifiable);

    const auto nothing = det.groundedness("i4", 0, "", "", SourceMode::Lit);
    CHECK(nothing.score == 0.0);
    CHECK(nothing.flags.unverifiable);
}

TEST_CASE("groundedness equals count/total on random verdict patterns") {
    auto judge = std::make_shared<testsupport::ScriptedJudge>();
    const auto corpus = CorpusStore::from_documents(testsupport::synthetic_corpus(20));
    Gateway gw(testsupport::judge_provider(judge), quick());
    const Detector det(gw, &corpus, nullptr, nullptr);
    std::mt19937_64 rng(2024);
    for (int c = 0; c < 1000; ++c) {
        const int n = 1 + static_cast<int>(rng() % 20);
        std::vector<bool> v;
        int grounded = 0;
        for (int i = 0; i < n; ++i) {
            v.push_back(rng() % 2 == 0);
            grounded += v.back() ? 1 : 0;
        }
        judge->set_case(c, v);
        const auto r = det.groundedness("x", 0, "case-" + std::to_string(c), "", SourceMode::Lit);
        CHECK(r.score == static_cast<double>(grounded) / n);
        CHECK(r.score * n == doctest::Approx(grounded));

        // Flipping one false verdict to true raises the score.
        const auto it = std::find(v.begin(), v.end(), false);
        if (it != v.end()) {
            *it = true;
            judge->set_case(c + 100000, v);
            const auto flipped = det.groundedness("x", 0, "case-" + std::to_string(c + 100000), "", SourceMode::Lit);
            CHECK(flipped.score > r.score);
        }
    }
}

TEST_CASE("groundedness is deterministic under the mock") {
    const auto g = small_graph();
    const auto idx = MentionIndex::build(g);
    const auto corpus = CorpusStore::from_documents(testsupport::synthetic_corpus(50));
    Gateway gw1(std::make_shared<MockProvider>(linker_script), quick());
    Gateway gw2(std::make_shared<MockProvider>(linker_script), quick());
    const Detector a(gw1, &corpus, &g, &idx), b(gw2, &corpus, &g, &idx);
    const auto ra = a.groundedness("i", 1, "alphagene and betagene", "gammachem", SourceMode::Both);
    const auto rb = b.groundedness("i", 1, "alphagene and betagene", "gammachem", SourceMode::Both);
    CHECK(ra.score == rb.score);
    REQUIRE(ra.claims.size() == rb.claims.size());
    for (std::size_t i = 0; i < ra.claims.size(); ++i) {
        CHECK(ra.claims[i].text == rb.claims[i].text);
        CHECK(ra.verdicts[i].judge_raw == rb.verdicts[i].judge_raw);
        CHECK(ra.verdicts[i].edges == rb.verdicts[i].edges);
    }
}
