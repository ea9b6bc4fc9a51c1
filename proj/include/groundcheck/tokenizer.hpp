#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace groundcheck {

/// Splits text into lowercase terms for BM25.
///
/// A term is a maximal run of ASCII letters, digits and non-ASCII bytes
/// (UTF-8 sequences are kept intact, not split). A hyphen survives only
/// between two term characters, so "IL-6" -> "il-6" and "BRCA1" -> "brca1",
/// while "-foo-" -> "foo". No stemming and no stopword removal.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace groundcheck
