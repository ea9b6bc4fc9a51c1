#include "groundcheck/tokenizer.hpp"

namespace groundcheck {

namespace {

bool is_term_char(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

char lower(unsigned char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> terms;
    std::string current;
    const auto n = text.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (is_term_char(c)) {
            current.push_back(lower(c));
            continue;
        }
        if (c == '-' && !current.empty() && i + 1 < n &&
            is_term_char(static_cast<unsigned char>(text[i + 1]))) {
            current.push_back('-');
            continue;
        }
        if (!current.empty()) {
            terms.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) terms.push_back(std::move(current));
    return terms;
}

}  // namespace groundcheck
