#include "groundcheck/prompts.hpp"

#include <array>

#include "groundcheck/errors.hpp"

namespace groundcheck {

namespace {

constexpr std::string_view kScientist =
    "You are a scientist. Your task is to generate a scientific hypothesis following given instructions.";

constexpr std::string_view kOutputInstructions =
    "Your output must include two sections:\n"
    "1. **### Step-by-step Reasoning**:\n"
    "- Think step-by-step to derive the hypothesis.\n"
    "\n"
    "2. **### Structured Output**:\n"
    "- Present your proposed hypothesis in the following JSON format:\n"
    "```json\n"
    "{\n"
    "    \"proposed_hypothesis\": \"Statement of the proposed hypothesis\"\n"
    "}\n"
    "```";

constexpr std::string_view kVerifier =
    "You are a scientist. Your task is to verify if the relevant documents and knowledge (if applicable) can "
    "support the given claim.";

constexpr std::array<std::pair<KnowledgeSetting, std::string_view>, 4> kSettingNames{{
    {KnowledgeSetting::Parametric, "parametric"},
    {KnowledgeSetting::ParametricKG, "parametric_kg"},
    {KnowledgeSetting::ParametricLit, "parametric_lit"},
    {KnowledgeSetting::ParametricKGLit, "parametric_kg_lit"},
}};

std::string or_none(std::string_view text) { return text.empty() ? std::string("None") : std::string(text); }

void section(std::string& out, std::string_view title, std::string_view body) {
    out.append("### ").append(title).append("\n").append(body).append("\n\n");
}

/// Cuts to at most `budget` bytes without splitting a UTF-8 sequence.
std::string_view clip(std::string_view s, std::size_t budget) {
    if (s.size() <= budget) return s;
    std::size_t end = budget;
    while (end > 0 && (static_cast<unsigned char>(s[end]) & 0xC0) == 0x80) --end;
    return s.substr(0, end);
}

}  // namespace

std::string_view to_string(KnowledgeSetting setting) {
    for (const auto& [s, name] : kSettingNames) {
        if (s == setting) return name;
    }
    return "unknown";
}

std::optional<KnowledgeSetting> parse_setting(std::string_view text) {
    for (const auto& [s, name] : kSettingNames) {
        if (name == text) return s;
    }
    return std::nullopt;
}

bool uses_graph(KnowledgeSetting s) {
    return s == KnowledgeSetting::ParametricKG || s == KnowledgeSetting::ParametricKGLit;
}

bool uses_literature(KnowledgeSetting s) {
    return s == KnowledgeSetting::ParametricLit || s == KnowledgeSetting::ParametricKGLit;
}

std::string Prompt::joined() const { return system.empty() ? user : system + "\n\n" + user; }

std::string format_query(const Entity& head, const Entity& tail, std::span<const std::string> labels) {
    if (labels.size() != 3 || labels[2] != "no_relation") {
        throw PreconditionError("query label set must be two relation labels followed by no_relation");
    }
    std::string q = "Can we hypothesize the potential relation between ";
    q.append(to_string(head.type)).append(" ").append(head.name).append(" (").append(head.id).append(") and ");
    q.append(to_string(tail.type)).append(" ").append(tail.name).append(" (").append(tail.id).append(")? ");
    q.append("The final hypothesis can be one of [").append(labels[0]).append(", ").append(labels[1]);
    q.append(", 'no_relation'].");
    return q;
}

std::string render_documents(std::span<const Document> docs, std::size_t char_budget) {
    std::string out;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (i > 0) out += '\n';
        const auto& d = docs[i];
        out.append("[").append(std::to_string(i + 1)).append("] ").append(d.title);
        const bool ends_sentence = !d.title.empty() && (d.title.back() == '.' || d.title.back() == '?' || d.title.back() == '!');
        out.append(ends_sentence ? " " : ". ");
        out.append(clip(d.body, char_budget));
    }
    return out;
}

std::string render_chains(const KnowledgeGraph& graph, std::span<const LinkChain> chains) {
    std::string out;
    for (const auto& c : chains) {
        if (!out.empty()) out += '\n';
        out += textualize_chain(graph, c);
    }
    return out;
}

std::string render_edges(const KnowledgeGraph& graph, std::span<const KgEdge> edges) {
    std::string out;
    for (const auto& e : edges) {
        if (!out.empty()) out += '\n';
        out += textualize_edge(graph, e);
    }
    return out;
}

Prompt assemble_prompt(std::string_view query, KnowledgeSetting setting, const std::optional<std::string>& knowledge,
                       const std::optional<std::string>& documents) {
    if (knowledge.has_value() != uses_graph(setting)) {
        throw PreconditionError(std::string("knowledge context must be given exactly for graph settings (setting ") +
                                std::string(to_string(setting)) + ")");
    }
    if (documents.has_value() != uses_literature(setting)) {
        throw PreconditionError(std::string("documents must be given exactly for literature settings (setting ") +
                                std::string(to_string(setting)) + ")");
    }
    Prompt p;
    p.system = kScientist;
    if (documents) section(p.user, "Relevant Documents", or_none(*documents));
    if (knowledge) section(p.user, "Relevant Knowledge", or_none(*knowledge));
    section(p.user, "User Input", query);
    p.user += kOutputInstructions;
    return p;
}

Prompt claim_prompt(std::string_view statement) {
    Prompt p;
    section(p.user, "Statement", statement);
    p.user +=
        "Summarize the statement as a list of claims which will be further verified by external resources. "
        "Output the summarized claims in the JSON format: ```json{\"claims\": [\"claim1\", ...]}```";
    return p;
}

Prompt entity_prompt(std::string_view background) {
    Prompt p;
    section(p.user, "Background", background);
    p.user +=
        "Extract key entities from the background statement that will be used to search for relevant information "
        "in an external knowledge graph. Each entity should be extracted as \"entity_type (e.g., "
        "Disease/Chemical/Gene/Mutation) entity_name (entity_id if presented)\". Output the extracted entities in "
        "the JSON format: ```json{\"entities\": [\"entity1\", ...]}```";
    return p;
}

Prompt verification_prompt(std::string_view claim, std::string_view documents, std::string_view knowledge) {
    Prompt p;
    p.system = kVerifier;
    section(p.user, "Relevant Documents", or_none(documents));
    section(p.user, "Relevant Knowledge", or_none(knowledge));
    section(p.user, "Claim", claim);
    p.user +=
        "Judge if the given information supports the claim. Output {\"groundedness\": 1} if the materials support "
        "the claim else {\"groundedness\": 0}.";
    return p;
}

}  // namespace groundcheck
