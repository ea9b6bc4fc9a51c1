#include "groundcheck/hypothesis_generator.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "groundcheck/errors.hpp"

namespace groundcheck {

namespace {

std::string lowered(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

bool is_header(std::string_view line, std::string_view name) {
    const auto low = lowered(line);
    return low.find(lowered(name)) != std::string::npos && line.size() < name.size() + 24;
}

}  // namespace

std::string normalize_label(std::string_view statement, std::span<const std::string> labels) {
    const auto text = lowered(statement);
    std::string best;
    std::size_t best_len = 0;
    std::size_t best_pos = std::string::npos;
    auto consider = [&](const std::string& label, std::string_view needle) {
        const auto pos = text.find(lowered(needle));
        if (pos == std::string::npos) return;
        if (needle.size() > best_len || (needle.size() == best_len && pos < best_pos)) {
            best = label;
            best_len = needle.size();
            best_pos = pos;
        }
    };
    for (const auto& label : labels) {
        consider(label, label);
        if (label == kNoRelation) consider(label, "no relation");
    }
    return best.empty() ? std::string(kInvalidLabel) : best;
}

std::string extract_rationale(std::string_view raw_text) {
    const auto offset = json_block_offset(raw_text);
    const auto head = raw_text.substr(0, offset.value_or(raw_text.size()));

    std::vector<std::string> lines;
    std::istringstream in{std::string(head)};
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    while (!lines.empty() && (trim(lines.back()).empty() || is_header(lines.back(), "Structured Output"))) {
        lines.pop_back();
    }
    std::size_t first = 0;
    while (first < lines.size() && trim(lines[first]).empty()) ++first;
    if (first < lines.size() && is_header(lines[first], "Step-by-step Reasoning")) ++first;

    std::string out;
    for (std::size_t i = first; i < lines.size(); ++i) {
        if (!out.empty()) out += '\n';
        out += lines[i];
    }
    return trim(out);
}

Prompt generation_prompt(const BenchmarkInstance& instance, KnowledgeSetting setting, const GenerationOptions& options,
                         const KnowledgeSources& sources) {
    if (sources.graph == nullptr) throw PreconditionError("generation needs the knowledge graph for entity names");
    const auto& g = *sources.graph;
    const auto labels = label_set(instance.task);
    const auto query = format_query(g.entity(instance.head), g.entity(instance.tail), labels);

    std::optional<std::string> knowledge;
    if (uses_graph(setting)) {
        const auto chains = find_link_chains(g, instance.head, instance.tail, options.max_hops, options.max_chains);
        knowledge = render_chains(g, chains);
    }
    std::optional<std::string> documents;
    if (uses_literature(setting)) {
        if (sources.corpus == nullptr) throw PreconditionError("literature setting needs a corpus index");
        const auto hits = sources.corpus->retrieve(query, {options.k, options.tau, options.pmid_cutoff});
        std::vector<Document> docs;
        docs.reserve(hits.size());
        for (const auto& h : hits) docs.push_back(sources.corpus->document(h.doc_id));
        documents = render_documents(docs, options.doc_char_budget);
    }
    return assemble_prompt(query, setting, knowledge, documents);
}

std::vector<HypothesisCandidate> generate(const BenchmarkInstance& instance, KnowledgeSetting setting,
                                          const GenerationOptions& options, Gateway& gateway,
                                          const KnowledgeSources& sources) {
    if (options.n < 1) throw PreconditionError("candidate count must be >= 1");
    const auto prompt = generation_prompt(instance, setting, options, sources);
    const auto labels = label_set(instance.task);

    std::vector<HypothesisCandidate> out;
    out.reserve(static_cast<std::size_t>(options.n));
    for (int i = 0; i < options.n; ++i) {
        ChatRequest req;
        req.system_text = prompt.system;
        req.user_text = prompt.user;
        req.temperature = i == 0 ? options.greedy_temperature : options.sample_temperature;
        req.max_output_tokens = options.max_output_tokens;
        req.sample_index = i;
        const auto result = complete_structured(gateway, req, JsonShape::Hypothesis);

        HypothesisCandidate c;
        c.instance_id = instance.id;
        c.setting = setting;
        c.sample_index = i;
        c.raw_text = result.raw_text;
        if (result.value) {
            c.statement = result.value->statement;
            c.rationale = extract_rationale(result.raw_text);
            c.predicted_label = normalize_label(c.statement, labels);
        } else {
            c.parse_failed = true;
            c.predicted_label = kInvalidLabel;
        }
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace groundcheck
