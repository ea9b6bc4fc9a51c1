#include "groundcheck/corpus_store.hpp"

#include <cmath>
#include <fstream>
#include <istream>

#include <json.hpp>

#include "groundcheck/errors.hpp"
#include "groundcheck/tokenizer.hpp"

namespace groundcheck {

namespace {

constexpr std::string_view kMagic = "GCCORPUS";
constexpr std::uint32_t kFormatVersion = 1;

Document parse_document(const std::string& line, std::size_t record) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw IngestError(record, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw IngestError(record, "expected a JSON object");

    const auto require_string = [&](const char* field) -> std::string {
        const auto it = j.find(field);
        if (it == j.end() || !it->is_string()) {
            throw IngestError(record, std::string("missing or non-string field '") + field + "'");
        }
        return it->get<std::string>();
    };

    Document doc;
    doc.doc_id = require_string("id");
    doc.title = j.contains("title") ? require_string("title") : std::string();
    doc.body = require_string("content");

    const auto pmid = j.find("pmid");
    if (pmid == j.end() || !pmid->is_number_integer() || pmid->get<std::int64_t>() <= 0) {
        throw IngestError(record, "field 'pmid' must be a positive integer");
    }
    doc.pmid = pmid->get<std::uint64_t>();
    return doc;
}

}  // namespace

std::string indexed_text(const Document& doc) {
    if (doc.title.empty()) return doc.body;
    return doc.title + " " + doc.body;
}

void CorpusStore::add(Document doc, std::size_t record) {
    if (doc.doc_id.empty()) throw IngestError(record, "empty document id");
    if (doc.pmid == 0) throw IngestError(record, "pmid must be positive");
    if (doc.body.empty()) throw IngestError(record, "empty document body");
    if (by_id_.contains(doc.doc_id)) {
        throw ConflictError("duplicate document id '" + doc.doc_id + "' at record " + std::to_string(record));
    }
    const auto ordinal = index_.add(doc.doc_id, indexed_text(doc));
    by_id_.emplace(doc.doc_id, ordinal);
    docs_.push_back(std::move(doc));
}

CorpusStore CorpusStore::ingest(std::istream& jsonl, Bm25Params params) {
    CorpusStore store;
    store.index_ = Bm25Index(params);
    std::string line;
    std::size_t record = 0;
    while (std::getline(jsonl, line)) {
        ++record;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        store.add(parse_document(line, record), record);
    }
    return store;
}

CorpusStore CorpusStore::from_documents(std::vector<Document> docs, Bm25Params params) {
    CorpusStore store;
    store.index_ = Bm25Index(params);
    std::size_t record = 0;
    for (auto& d : docs) store.add(std::move(d), ++record);
    return store;
}

const Document& CorpusStore::document(std::string_view doc_id) const {
    const auto it = by_id_.find(std::string(doc_id));
    if (it == by_id_.end()) throw NotFoundError("unknown document id '" + std::string(doc_id) + "'");
    return docs_[it->second];
}

double CorpusStore::bm25_score(std::span<const std::string> query_terms, std::string_view doc_id) const {
    const auto it = by_id_.find(std::string(doc_id));
    if (it == by_id_.end()) throw NotFoundError("unknown document id '" + std::string(doc_id) + "'");
    return index_.score(query_terms, it->second);
}

std::vector<RetrievalHit> CorpusStore::retrieve(std::string_view query, const RetrievalConfig& config) const {
    if (config.k < 1) throw PreconditionError("retrieval k must be >= 1");
    if (!(config.tau >= 0.0)) throw PreconditionError("retrieval tau must be >= 0");

    const auto terms = tokenize(query);
    std::function<bool(std::uint32_t)> accept;
    if (config.pmid_cutoff) {
        const auto cutoff = *config.pmid_cutoff;
        accept = [this, cutoff](std::uint32_t doc) { return docs_[doc].pmid <= cutoff; };
    }

    std::vector<RetrievalHit> hits;
    std::uint32_t rank = 0;
    for (const auto& s : index_.rank(terms, config.k, accept)) {
        ++rank;
        if (s.score < config.tau) break;
        hits.push_back({std::string(s.key), s.score, rank});
    }
    return hits;
}

void CorpusStore::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    const auto final_path = dir / kIndexFileName;
    auto tmp = final_path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write index file " + tmp.string());
        out.write(kMagic.data(), static_cast<std::streamsize>(kMagic.size()));
        binio::write_u32(out, kFormatVersion);
        index_.save(out);
        binio::write_u32(out, static_cast<std::uint32_t>(docs_.size()));
        for (const auto& d : docs_) {
            binio::write_u64(out, d.pmid);
            binio::write_str(out, d.title);
            binio::write_str(out, d.body);
        }
        if (!out) throw Error("failed writing index file " + tmp.string());
    }
    std::filesystem::rename(tmp, final_path);
}

CorpusStore CorpusStore::load(const std::filesystem::path& dir) {
    const auto path = dir / kIndexFileName;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("no corpus index at " + path.string());

    std::string magic(kMagic.size(), '\0');
    in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
    if (!in || magic != kMagic) throw FormatError(path.string() + " is not a corpus index");
    const auto version = binio::read_u32(in);
    if (version != kFormatVersion) {
        throw FormatError("unsupported corpus index version " + std::to_string(version));
    }

    CorpusStore store;
    store.index_ = Bm25Index::load(in);
    const auto n = binio::read_u32(in);
    if (n != store.index_.size()) throw FormatError("document table does not match index");
    store.docs_.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        Document d;
        d.doc_id = store.index_.key(i);
        d.pmid = binio::read_u64(in);
        d.title = binio::read_str(in);
        d.body = binio::read_str(in);
        store.by_id_.emplace(d.doc_id, i);
        store.docs_.push_back(std::move(d));
    }
    return store;
}

}  // namespace groundcheck
