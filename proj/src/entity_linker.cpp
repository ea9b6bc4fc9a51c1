#include "groundcheck/entity_linker.hpp"

#include <algorithm>
#include <set>

#include "groundcheck/prompts.hpp"
#include "groundcheck/tokenizer.hpp"

namespace groundcheck {

namespace {

std::string token_key(std::string_view text) {
    std::string key;
    for (const auto& t : tokenize(text)) {
        if (!key.empty()) key += ' ';
        key += t;
    }
    return key;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::vector<std::string> LinkedEntitySet::entity_ids() const {
    std::set<std::string> ids;
    for (const auto& r : resolved) ids.insert(r.entity_id);
    return {ids.begin(), ids.end()};
}

std::string mention_chunk(const Entity& entity) {
    std::string text;
    for (const auto& m : entity.mentions) {
        const auto t = trim(m);
        if (t.empty()) continue;
        if (!text.empty()) text += ' ';
        text += t;
    }
    return text;
}

MentionIndex MentionIndex::build(const KnowledgeGraph& graph, Bm25Params params) {
    MentionIndex out;
    out.graph_ = &graph;
    out.index_ = Bm25Index(params);
    for (const auto& e : graph.entities()) {
        const auto chunk = mention_chunk(e);
        if (chunk.empty()) {
            ++out.skipped_;
            continue;
        }
        out.index_.add(e.id, chunk);
        for (const auto& m : e.mentions) {
            auto& ids = out.exact_[token_key(m)];
            if (ids.empty() || ids.back() != e.id) ids.push_back(e.id);
        }
    }
    out.exact_.erase(std::string());
    return out;
}

std::optional<std::pair<std::string, double>> MentionIndex::best_match(std::string_view mention) const {
    const auto terms = tokenize(mention);
    if (terms.empty()) return std::nullopt;
    const auto top = index_.rank(terms, 1);
    if (top.empty() || !(top.front().score > 0.0)) return std::nullopt;
    return std::make_pair(std::string(top.front().key), top.front().score);
}

std::optional<std::string> MentionIndex::resolve(std::string_view mention) const {
    const auto [name, id] = split_mention(mention);
    if (id && graph_->find_entity(*id) != nullptr) return *id;
    if (const auto it = exact_.find(token_key(name)); it != exact_.end() && it->second.size() == 1) {
        return it->second.front();
    }
    if (auto hit = best_match(name)) return std::move(hit->first);
    return std::nullopt;
}

std::pair<std::string, std::optional<std::string>> split_mention(std::string_view mention) {
    std::string text = trim(mention);
    std::optional<std::string> id;
    if (!text.empty() && text.back() == ')') {
        const auto open = text.rfind('(');
        if (open != std::string::npos) {
            auto inner = trim(std::string_view(text).substr(open + 1, text.size() - open - 2));
            if (!inner.empty()) id = std::move(inner);
            text = trim(std::string_view(text).substr(0, open));
        }
    }
    const auto space = text.find(' ');
    if (space != std::string::npos && parse_entity_type(std::string_view(text).substr(0, space))) {
        text = trim(std::string_view(text).substr(space + 1));
    }
    return {text, id};
}

MentionExtraction extract_mentions(std::string_view claim, Gateway& gateway, int max_output_tokens) {
    const auto prompt = entity_prompt(claim);
    ChatRequest req;
    req.system_text = prompt.system;
    req.user_text = prompt.user;
    req.temperature = 0.0;
    req.max_output_tokens = max_output_tokens;
    const auto result = complete_structured(gateway, req, JsonShape::Entities);

    MentionExtraction out;
    out.raw_text = result.raw_text;
    if (result.value) {
        out.mentions = result.value->items;
    } else {
        out.failed = true;
    }
    return out;
}

LinkedEntitySet link_mentions(std::string_view claim, std::span<const std::string> mentions,
                              const MentionIndex& index) {
    LinkedEntitySet out;
    out.claim = std::string(claim);
    std::set<std::string> done;
    for (const auto& m : mentions) {
        if (!done.insert(m).second) continue;
        if (auto id = index.resolve(m)) {
            out.resolved.push_back({m, std::move(*id)});
        } else {
            out.unresolved.push_back(m);
        }
    }
    return out;
}

LinkedEntitySet link_claim(std::string_view claim, Gateway& gateway, const MentionIndex& index) {
    const auto extraction = extract_mentions(claim, gateway);
    auto out = link_mentions(claim, extraction.mentions, index);
    out.extraction_failed = extraction.failed;
    return out;
}

}  // namespace groundcheck
