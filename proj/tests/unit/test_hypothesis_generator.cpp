#include <doctest.h>

#include <mutex>

#include "groundcheck/errors.hpp"
#include "groundcheck/hypothesis_generator.hpp"
#include "oracles/bm25_oracle.hpp"
#include "support/prompt_fixture.hpp"
#include "support/synthetic_corpus.hpp"

using namespace groundcheck;
using nlohmann::json;

namespace {

const std::string kGolden = std::string(GROUNDCHECK_TEST_DATA_DIR) + "/golden/prompts/";

ProviderConfig quick() {
    ProviderConfig c;
    c.backoff_ms = 0;
    c.max_retries = 0;
    return c;
}

BenchmarkInstance aspirin_instance() {
    return {"cg-00001", Task::ChemicalGene, "MESH:D001241", "5743", "negative_correlate", {38300000, 38300001}};
}

std::string reply(std::string_view statement) {
    return "1. **### Step-by-step Reasoning**:\nAspirin blocks COX enzymes.\nPTGS2 is COX-2.\n\n2. **### Structured "
           "Output**:\n```json\n{\"proposed_hypothesis\": \"" +
           std::string(statement) + "\"}\n```";
}

}  // namespace

TEST_CASE("prompts byte-match the golden transcriptions") {
    for (const auto& [file, text] : testsupport::prompt_cases()) {
        CAPTURE(file);
        const auto golden = testsupport::read_text(kGolden + file);
        REQUIRE_FALSE(golden.empty());
        CHECK(text == golden);
    }
}

TEST_CASE("format_query fills the entity slots") {
    const auto g = testsupport::prompt_graph();
    const Entity c1{"C1", EntityType::Chemical, "aspirin", {"aspirin"}};
    const Entity g1{"G1", EntityType::Gene, "PTGS2", {"PTGS2"}};
    const auto labels = label_set(Task::ChemicalGene);
    const auto q = format_query(c1, g1, labels);
    CHECK(q.find("Chemical aspirin (C1)") != std::string::npos);
    CHECK(q.find("[positive_correlate, negative_correlate, 'no_relation']") != std::string::npos);

    const auto swapped = format_query(g1, c1, labels);
    CHECK(swapped != q);
    const std::string a = "Chemical aspirin (C1)", b = "Gene PTGS2 (G1)";
    auto restored = swapped;
    restored.replace(restored.find(b), b.size(), "#");
    restored.replace(restored.find(a), a.size(), b);
    restored.replace(restored.find('#'), 1, a);
    CHECK(restored == q);

    const std::vector<std::string> bad{"no_relation", "x", "y"};
    CHECK_THROWS_AS((void)format_query(c1, g1, bad), PreconditionError);
}

TEST_CASE("assemble_prompt section layout") {
    const auto p = assemble_prompt("Q?", KnowledgeSetting::Parametric, std::nullopt, std::nullopt);
    CHECK(p.user.find("Relevant") == std::string::npos);
    const auto both = assemble_prompt("Q?", KnowledgeSetting::ParametricKGLit, std::string("chain"), std::string("[1] d. b"));
    CHECK(both.user.find("### Relevant Documents") < both.user.find("### Relevant Knowledge"));
    CHECK(both.user.find("### Relevant Knowledge") < both.user.find("### User Input"));
    const auto empty = assemble_prompt("Q?", KnowledgeSetting::ParametricKG, std::string(), std::nullopt);
    CHECK(empty.user.find("### Relevant Knowledge\nNone\n") != std::string::npos);

    CHECK_THROWS_AS(assemble_prompt("Q?", KnowledgeSetting::ParametricKG, std::nullopt, std::nullopt), PreconditionError);
    CHECK_THROWS_AS(assemble_prompt("Q?", KnowledgeSetting::Parametric, std::string("x"), std::nullopt), PreconditionError);
    CHECK_THROWS_AS(assemble_prompt("Q?", KnowledgeSetting::ParametricLit, std::nullopt, std::nullopt), PreconditionError);
}

TEST_CASE("render_documents clips bodies without splitting characters") {
    std::vector<Document> docs{{"a", 1, "T", std::string(10, 'x') + "\xC3\xA9" + "tail"}};
    CHECK(render_documents(docs, 11) == "[1] T. xxxxxxxxxx");
    CHECK(render_documents(docs, 12) == "[1] T. xxxxxxxxxx\xC3\xA9");
    CHECK(render_documents(docs, 1000) == "[1] T. xxxxxxxxxx\xC3\xA9tail");
    CHECK(render_documents({}, 5).empty());
}

TEST_CASE("normalize_label rules") {
    const auto cg = label_set(Task::ChemicalGene);
    CHECK(normalize_label("...suggests ASPIRIN negative_correlate PTGS2", cg) == "negative_correlate");
    CHECK(normalize_label("there is no relation between them", cg) == "no_relation");
    CHECK(normalize_label("they interact somehow", cg) == "Invalid");
    CHECK(normalize_label("Positive_Correlate first, negative_correlate later", cg) == "positive_correlate");
    const auto dg = label_set(Task::DiseaseGene);
    // Longer label wins over a shorter one occurring earlier.
    CHECK(normalize_label("inhibit? no, no_relation", dg) == "no_relation");
    CHECK(normalize_label("X may stimulate Y", dg) == "stimulate");
    CHECK(normalize_label("", dg) == "Invalid");
}

TEST_CASE("extract_rationale keeps the reasoning only") {
    CHECK(extract_rationale(reply("x")) == "Aspirin blocks COX enzymes.\nPTGS2 is COX-2.");
    CHECK(extract_rationale("Plain reasoning.\n{\"proposed_hypothesis\": \"x\"}") == "Plain reasoning.");
    CHECK(extract_rationale("```json {\"proposed_hypothesis\": \"x\"}```").empty());
}

TEST_CASE("generate with a scripted mock") {
    const auto g = testsupport::prompt_graph();
    KnowledgeSources sources{&g, nullptr};
    const auto inst = aspirin_instance();

    SUBCASE("one greedy candidate") {
        Gateway gw(MockProvider::from_json(json{{"default", reply("aspirin negative_correlate PTGS2")}}), quick());
        GenerationOptions opt;
        const auto out = generate(inst, KnowledgeSetting::Parametric, opt, gw, sources);
        REQUIRE(out.size() == 1);
        CHECK(out[0].statement == "aspirin negative_correlate PTGS2");
        CHECK(out[0].predicted_label == "negative_correlate");
        CHECK(out[0].rationale == "Aspirin blocks COX enzymes.\nPTGS2 is COX-2.");
        CHECK(out[0].sample_index == 0);
        CHECK(out[0].instance_id == "cg-00001");
    }

    SUBCASE("five samples, one malformed") {
        std::vector<double> temps(5, -1.0);
        std::mutex mu;
        auto mock = std::make_shared<MockProvider>([&](const ChatRequest& r, int) {
            {
                std::lock_guard lock(mu);
                temps[static_cast<std::size_t>(r.sample_index)] = r.temperature;
            }
            if (r.sample_index == 3) return MockReply::ok("I refuse to answer in JSON.");
            const char* labels[] = {"positive_correlate", "negative_correlate", "no relation", "", "negative_correlate"};
            return MockReply::ok(reply(std::string("aspirin ") + labels[r.sample_index] + " PTGS2"));
        });
        Gateway gw(mock, quick());
        GenerationOptions opt;
        opt.n = 5;
        const auto out = generate(inst, KnowledgeSetting::ParametricKG, opt, gw, sources);
        REQUIRE(out.size() == 5);
        for (int i = 0; i < 5; ++i) CHECK(out[static_cast<std::size_t>(i)].sample_index == i);
        CHECK(out[0].predicted_label == "positive_correlate");
        CHECK(out[2].predicted_label == "no_relation");
        CHECK(out[3].predicted_label == "Invalid");
        CHECK(out[3].parse_failed);
        CHECK(out[3].rationale.empty());
        CHECK(out[4].predicted_label == "negative_correlate");
        CHECK(mock->calls() == 6);  // sample 3 was re-asked once
        CHECK(temps[0] == 0.0);
        for (int i = 1; i < 5; ++i) CHECK(temps[static_cast<std::size_t>(i)] == 1.0);
    }

    SUBCASE("graph setting carries the link chains") {
        const auto prompt = generation_prompt(inst, KnowledgeSetting::ParametricKG, {}, sources);
        CHECK(prompt.user.find("Chemical aspirin (MESH:D001241) negative_correlate Gene PTGS2 (5743).") !=
              std::string::npos);
        CHECK_THROWS_AS(generation_prompt(inst, KnowledgeSetting::ParametricLit, {}, sources), PreconditionError);
    }
}

TEST_CASE("literature setting retrieves the top documents before the cutoff") {
    const auto docs = testsupport::synthetic_corpus(100);
    const auto corpus = CorpusStore::from_documents(docs);
    std::vector<oracle::OracleDoc> odocs;
    for (const auto& d : docs) odocs.push_back({d.doc_id, d.pmid, oracle::tokenize_ascii(indexed_text(d))});
    const oracle::BruteBm25 brute(odocs, 1.5, 0.75);

    const auto g = testsupport::prompt_graph();
    KnowledgeSources sources{&g, &corpus};
    GenerationOptions opt;
    opt.k = 5;
    opt.pmid_cutoff = 36000000;
    const auto inst = aspirin_instance();
    const auto prompt = generation_prompt(inst, KnowledgeSetting::ParametricLit, opt, sources);

    const auto query = format_query(g.entity(inst.head), g.entity(inst.tail), label_set(inst.task));
    const auto want = brute.retrieve(oracle::tokenize_ascii(query), 5, 0.0, 36000000);
    REQUIRE(want.size() == 5);
    std::vector<Document> chosen;
    for (const auto& w : want) chosen.push_back(corpus.document(w.id));
    CHECK(prompt.user.find("### Relevant Documents\n" + render_documents(chosen) + "\n\n") != std::string::npos);
}
