#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "groundcheck/bm25.hpp"

namespace groundcheck {

/// One literature chunk with PubMed provenance.
struct Document {
    std::string doc_id;
    std::uint64_t pmid = 0;
    std::string title;
    std::string body;
};

struct RetrievalHit {
    std::string doc_id;
    double score = 0.0;
    std::uint32_t rank = 0;  ///< 1-based
};

struct RetrievalConfig {
    std::size_t k = 32;
    double tau = 0.0;
    std::optional<std::uint64_t> pmid_cutoff;  ///< only documents with pmid <= cutoff are candidates
};

/// Immutable literature corpus served through BM25.
///
/// Built once from a JSON-lines stream ({"id","pmid","title","content"}) or a
/// persisted index directory. The indexed text of a document is its title
/// followed by its body.
class CorpusStore {
public:
    static CorpusStore ingest(std::istream& jsonl, Bm25Params params = {});
    static CorpusStore from_documents(std::vector<Document> docs, Bm25Params params = {});

    IndexStats stats() const { return index_.stats(); }
    std::size_t size() const noexcept { return docs_.size(); }
    const Bm25Index& index() const noexcept { return index_; }
    std::span<const Document> documents() const noexcept { return docs_; }

    /// Throws NotFoundError for an unknown id.
    const Document& document(std::string_view doc_id) const;

    /// Throws NotFoundError for an unknown id.
    double bm25_score(std::span<const std::string> query_terms, std::string_view doc_id) const;

    /// Documents that share at least one term with the query are ranked by
    /// score (ties by ascending doc_id); the first k are kept, then any with
    /// score < tau are dropped. An empty query yields an empty list.
    std::vector<RetrievalHit> retrieve(std::string_view query, const RetrievalConfig& config) const;

    void save(const std::filesystem::path& dir) const;
    static CorpusStore load(const std::filesystem::path& dir);

    static constexpr std::string_view kIndexFileName = "corpus.gcx";

private:
    CorpusStore() = default;
    void add(Document doc, std::size_t record);

    std::vector<Document> docs_;
    std::unordered_map<std::string, std::uint32_t> by_id_;
    Bm25Index index_;
};

/// Text under which a document is indexed.
std::string indexed_text(const Document& doc);

}  // namespace groundcheck
