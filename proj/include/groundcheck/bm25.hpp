#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace groundcheck {

/// Okapi BM25 parameters.
struct Bm25Params {
    double k1 = 1.5;
    double b = 0.75;
};

struct IndexStats {
    std::size_t doc_count = 0;
    std::size_t term_count = 0;   ///< distinct terms
    std::size_t token_count = 0;  ///< total indexed tokens
    double mean_doc_length = 0.0;
};

/// One scored document, identified by its key.
struct ScoredKey {
    std::uint32_t doc = 0;  ///< insertion ordinal
    std::string_view key;
    double score = 0.0;
};

/// In-memory inverted index with Okapi BM25 scoring.
///
/// Documents are keyed by an opaque string and numbered in insertion order.
/// The index is built by a single writer through add(); once building is
/// finished every const member is safe to call from any number of threads.
///
/// Scoring, for query tokens q_1..q_m (repeats count once per occurrence):
///
///   score(d) = sum_i idf(q_i) * tf(q_i,d) * (k1 + 1)
///                    / (tf(q_i,d) + k1 * (1 - b + b * |d| / avgdl))
///   idf(t)   = max(0, ln(1 + (N - n_t + 0.5) / (n_t + 0.5)))
class Bm25Index {
public:
    explicit Bm25Index(Bm25Params params = {});

    /// Adds a document; returns its ordinal. The key must be unique (checked by callers).
    std::uint32_t add(std::string key, std::string_view text);

    std::size_t size() const noexcept { return keys_.size(); }
    const std::string& key(std::uint32_t doc) const { return keys_.at(doc); }
    const Bm25Params& params() const noexcept { return params_; }
    IndexStats stats() const;

    double idf(std::string_view term) const;
    std::uint32_t term_frequency(std::string_view term, std::uint32_t doc) const;
    std::uint32_t doc_length(std::uint32_t doc) const { return doc_lengths_.at(doc); }
    double mean_doc_length() const;

    /// BM25 score of one document; 0 when no query term occurs in it.
    double score(std::span<const std::string> query_terms, std::uint32_t doc) const;

    /// Every document containing at least one query term, for which `accept`
    /// (when set) returns true, ordered by score descending then key ascending.
    /// At most `limit` entries are returned.
    std::vector<ScoredKey> rank(std::span<const std::string> query_terms, std::size_t limit,
                                const std::function<bool(std::uint32_t)>& accept = {}) const;

    void save(std::ostream& out) const;
    static Bm25Index load(std::istream& in);

private:
    struct Posting {
        std::uint32_t doc;
        std::uint32_t tf;
    };

    double term_weight(double idf, std::uint32_t tf, std::uint32_t doc_len, double avgdl) const;

    Bm25Params params_;
    std::vector<std::string> keys_;
    std::vector<std::uint32_t> doc_lengths_;
    std::uint64_t total_tokens_ = 0;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
};

namespace binio {

void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f64(std::ostream& out, double v);
void write_str(std::ostream& out, std::string_view s);
std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
double read_f64(std::istream& in);
std::string read_str(std::istream& in);

}  // namespace binio

}  // namespace groundcheck
