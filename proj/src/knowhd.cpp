#include "groundcheck/knowhd.hpp"

#include <algorithm>

#include "groundcheck/errors.hpp"

namespace groundcheck {

std::string_view to_string(SourceMode mode) {
    switch (mode) {
        case SourceMode::Lit: return "lit";
        case SourceMode::KG: return "kg";
        case SourceMode::Both: return "both";
    }
    return "unknown";
}

std::optional<SourceMode> parse_source_mode(std::string_view text) {
    if (text == "lit") return SourceMode::Lit;
    if (text == "kg") return SourceMode::KG;
    if (text == "both") return SourceMode::Both;
    return std::nullopt;
}

double groundedness_score(std::span<const ClaimVerdict> verdicts) {
    if (verdicts.empty()) return 0.0;
    const auto grounded = std::count_if(verdicts.begin(), verdicts.end(), [](const auto& v) { return v.grounded; });
    return static_cast<double>(grounded) / static_cast<double>(verdicts.size());
}

Detector::Detector(Gateway& gateway, const CorpusStore* corpus, const KnowledgeGraph* graph,
                   const MentionIndex* linker, DetectorOptions options)
    : gateway_(gateway), corpus_(corpus), graph_(graph), linker_(linker), options_(options) {}

Decomposition Detector::decompose(std::string_view rationale, std::string_view statement) const {
    std::string text(rationale);
    if (!statement.empty()) {
        if (!text.empty()) text += "\n\n";
        text += statement;
    }
    if (text.empty()) throw PreconditionError("nothing to decompose");

    const auto prompt = claim_prompt(text);
    ChatRequest req;
    req.system_text = prompt.system;
    req.user_text = prompt.user;
    req.temperature = 0.0;
    req.max_output_tokens = options_.max_output_tokens;
    const auto result = complete_structured(gateway_, req, JsonShape::Claims);

    Decomposition out;
    out.raw_text = result.raw_text;
    if (!result.value) {
        out.failed = true;
        return out;
    }
    for (const auto& c : result.value->items) out.claims.push_back({out.claims.size(), c, {}});
    return out;
}

ClaimContext Detector::claim_context(std::string_view claim, SourceMode mode) const {
    ClaimContext ctx;
    ctx.entities.claim = std::string(claim);
    if (mode == SourceMode::Lit || mode == SourceMode::Both) {
        if (corpus_ == nullptr) throw PreconditionError("literature mode needs a corpus index");
        ctx.docs = corpus_->retrieve(claim, {options_.k, options_.tau, options_.pmid_cutoff});
    }
    if (mode == SourceMode::KG || mode == SourceMode::Both) {
        if (graph_ == nullptr || linker_ == nullptr) throw PreconditionError("graph mode needs a graph and mention index");
        ctx.entities = link_claim(claim, gateway_, *linker_);
        const auto ids = ctx.entities.entity_ids();
        ctx.edges = kg_context(*graph_, ids);
    }
    return ctx;
}

ClaimVerdict Detector::verify(std::string_view claim, std::span<const RetrievalHit> docs,
                              std::span<const KgEdge> edges) const {
    std::string doc_text;
    if (!docs.empty()) {
        if (corpus_ == nullptr) throw PreconditionError("documents given without a corpus");
        std::vector<Document> rendered;
        rendered.reserve(docs.size());
        for (const auto& h : docs) rendered.push_back(corpus_->document(h.doc_id));
        doc_text = render_documents(rendered, options_.doc_char_budget);
    }
    std::string kg_text;
    if (!edges.empty()) {
        if (graph_ == nullptr) throw PreconditionError("edges given without a graph");
        kg_text = render_edges(*graph_, edges);
    }

    const auto prompt = verification_prompt(claim, doc_text, kg_text);
    ChatRequest req;
    req.system_text = prompt.system;
    req.user_text = prompt.user;
    req.temperature = 0.0;
    req.max_output_tokens = options_.max_output_tokens;
    const auto result = complete_structured(gateway_, req, JsonShape::Groundedness);

    ClaimVerdict v;
    v.docs.assign(docs.begin(), docs.end());
    v.edges.assign(edges.begin(), edges.end());
    v.judge_raw = result.raw_text;
    if (result.value) {
        v.grounded = result.value->grounded;
    } else {
        v.judge_failed = true;
    }
    return v;
}

GroundednessReport Detector::groundedness(std::string_view instance_id, int sample_index, std::string_view rationale,
                                          std::string_view statement, SourceMode mode) const {
    GroundednessReport report;
    report.instance_id = std::string(instance_id);
    report.sample_index = sample_index;
    report.mode = mode;

    if (rationale.empty() && statement.empty()) {
        report.flags.unverifiable = true;
        return report;
    }
    auto decomposition = decompose(rationale, statement);
    report.flags.decomposition_failure = decomposition.failed;
    report.claims = std::move(decomposition.claims);
    if (report.claims.empty()) {
        report.flags.unverifiable = true;
        return report;
    }

    for (auto& claim : report.claims) {
        auto ctx = claim_context(claim.text, mode);
        claim.entities = std::move(ctx.entities);
        report.flags.extraction_failure = report.flags.extraction_failure || claim.entities.extraction_failed;
        auto verdict = verify(claim.text, ctx.docs, ctx.edges);
        report.flags.judge_failure = report.flags.judge_failure || verdict.judge_failed;
        report.verdicts.push_back(std::move(verdict));
    }
    report.score = groundedness_score(report.verdicts);
    return report;
}

}  // namespace groundcheck
