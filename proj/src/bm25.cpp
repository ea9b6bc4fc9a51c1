#include "groundcheck/bm25.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>

#include "groundcheck/errors.hpp"
#include "groundcheck/tokenizer.hpp"

namespace groundcheck {

namespace binio {

namespace {

template <typename T>
void write_le(std::ostream& out, T v) {
    std::array<char, sizeof(T)> buf{};
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    }
    out.write(buf.data(), buf.size());
}

template <typename T>
T read_le(std::istream& in) {
    std::array<unsigned char, sizeof(T)> buf{};
    if (!in.read(reinterpret_cast<char*>(buf.data()), buf.size())) {
        throw FormatError("unexpected end of index data");
    }
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
}

}  // namespace

void write_u32(std::ostream& out, std::uint32_t v) { write_le(out, v); }
void write_u64(std::ostream& out, std::uint64_t v) { write_le(out, v); }
void write_f64(std::ostream& out, double v) { write_le(out, std::bit_cast<std::uint64_t>(v)); }

void write_str(std::ostream& out, std::string_view s) {
    write_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& in) { return read_le<std::uint32_t>(in); }
std::uint64_t read_u64(std::istream& in) { return read_le<std::uint64_t>(in); }
double read_f64(std::istream& in) { return std::bit_cast<double>(read_le<std::uint64_t>(in)); }

std::string read_str(std::istream& in) {
    const auto len = read_u64(in);
    if (len > (std::uint64_t{1} << 32)) throw FormatError("implausible string length in index data");
    std::string s(len, '\0');
    if (len > 0 && !in.read(s.data(), static_cast<std::streamsize>(len))) {
        throw FormatError("unexpected end of index data");
    }
    return s;
}

}  // namespace binio

Bm25Index::Bm25Index(Bm25Params params) : params_(params) {
    if (!(params_.k1 >= 0.0) || !(params_.b >= 0.0 && params_.b <= 1.0)) {
        throw PreconditionError("BM25 parameters require k1 >= 0 and 0 <= b <= 1");
    }
}

std::uint32_t Bm25Index::add(std::string key, std::string_view text) {
    const auto doc = static_cast<std::uint32_t>(keys_.size());
    const auto terms = tokenize(text);

    std::unordered_map<std::string_view, std::uint32_t> tf;
    for (const auto& t : terms) ++tf[t];
    for (const auto& [term, count] : tf) {
        postings_[std::string(term)].push_back({doc, count});
    }

    keys_.push_back(std::move(key));
    doc_lengths_.push_back(static_cast<std::uint32_t>(terms.size()));
    total_tokens_ += terms.size();
    return doc;
}

IndexStats Bm25Index::stats() const {
    return {keys_.size(), postings_.size(), static_cast<std::size_t>(total_tokens_), mean_doc_length()};
}

double Bm25Index::mean_doc_length() const {
    if (keys_.empty()) return 0.0;
    return static_cast<double>(total_tokens_) / static_cast<double>(keys_.size());
}

double Bm25Index::idf(std::string_view term) const {
    const auto it = postings_.find(std::string(term));
    const double n = it == postings_.end() ? 0.0 : static_cast<double>(it->second.size());
    const double total = static_cast<double>(keys_.size());
    return std::max(0.0, std::log(1.0 + (total - n + 0.5) / (n + 0.5)));
}

std::uint32_t Bm25Index::term_frequency(std::string_view term, std::uint32_t doc) const {
    const auto it = postings_.find(std::string(term));
    if (it == postings_.end()) return 0;
    const auto& list = it->second;
    const auto pos = std::lower_bound(list.begin(), list.end(), doc,
                                      [](const Posting& p, std::uint32_t d) { return p.doc < d; });
    return (pos != list.end() && pos->doc == doc) ? pos->tf : 0;
}

double Bm25Index::term_weight(double idf, std::uint32_t tf, std::uint32_t doc_len, double avgdl) const {
    const double norm = avgdl > 0.0 ? static_cast<double>(doc_len) / avgdl : 0.0;
    const double f = static_cast<double>(tf);
    return idf * f * (params_.k1 + 1.0) / (f + params_.k1 * (1.0 - params_.b + params_.b * norm));
}

double Bm25Index::score(std::span<const std::string> query_terms, std::uint32_t doc) const {
    if (doc >= keys_.size()) throw NotFoundError("document ordinal out of range");
    const double avgdl = mean_doc_length();
    double total = 0.0;
    for (const auto& term : query_terms) {
        const auto tf = term_frequency(term, doc);
        if (tf == 0) continue;
        total += term_weight(idf(term), tf, doc_lengths_[doc], avgdl);
    }
    return total;
}

std::vector<ScoredKey> Bm25Index::rank(std::span<const std::string> query_terms, std::size_t limit,
                                       const std::function<bool(std::uint32_t)>& accept) const {
    if (limit == 0 || query_terms.empty()) return {};
    const double avgdl = mean_doc_length();

    // Accumulate in query-term order so results equal score() bit for bit.
    std::unordered_map<std::uint32_t, double> acc;
    for (const auto& term : query_terms) {
        const auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const double w = idf(term);
        for (const auto& p : it->second) {
            if (accept && !accept(p.doc)) continue;
            acc[p.doc] += term_weight(w, p.tf, doc_lengths_[p.doc], avgdl);
        }
    }

    std::vector<ScoredKey> out;
    out.reserve(acc.size());
    for (const auto& [doc, s] : acc) out.push_back({doc, keys_[doc], s});
    const auto before = [](const ScoredKey& a, const ScoredKey& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.key < b.key;
    };
    if (out.size() > limit) {
        std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(limit), out.end(), before);
        out.resize(limit);
    } else {
        std::sort(out.begin(), out.end(), before);
    }
    return out;
}

void Bm25Index::save(std::ostream& out) const {
    binio::write_f64(out, params_.k1);
    binio::write_f64(out, params_.b);
    binio::write_u32(out, static_cast<std::uint32_t>(keys_.size()));
    for (std::size_t i = 0; i < keys_.size(); ++i) {
        binio::write_str(out, keys_[i]);
        binio::write_u32(out, doc_lengths_[i]);
    }
    std::vector<const std::string*> terms;
    terms.reserve(postings_.size());
    for (const auto& [term, _] : postings_) terms.push_back(&term);
    std::sort(terms.begin(), terms.end(), [](const auto* a, const auto* b) { return *a < *b; });

    binio::write_u64(out, terms.size());
    for (const auto* term : terms) {
        const auto& list = postings_.at(*term);
        binio::write_str(out, *term);
        binio::write_u32(out, static_cast<std::uint32_t>(list.size()));
        for (const auto& p : list) {
            binio::write_u32(out, p.doc);
            binio::write_u32(out, p.tf);
        }
    }
}

Bm25Index Bm25Index::load(std::istream& in) {
    Bm25Params params;
    params.k1 = binio::read_f64(in);
    params.b = binio::read_f64(in);
    Bm25Index index(params);

    const auto n_docs = binio::read_u32(in);
    index.keys_.reserve(n_docs);
    index.doc_lengths_.reserve(n_docs);
    for (std::uint32_t i = 0; i < n_docs; ++i) {
        index.keys_.push_back(binio::read_str(in));
        const auto len = binio::read_u32(in);
        index.doc_lengths_.push_back(len);
        index.total_tokens_ += len;
    }
    const auto n_terms = binio::read_u64(in);
    for (std::uint64_t i = 0; i < n_terms; ++i) {
        auto term = binio::read_str(in);
        const auto n_post = binio::read_u32(in);
        std::vector<Posting> list;
        list.reserve(n_post);
        for (std::uint32_t j = 0; j < n_post; ++j) {
            const auto doc = binio::read_u32(in);
            const auto tf = binio::read_u32(in);
            if (doc >= n_docs) throw FormatError("posting references unknown document");
            list.push_back({doc, tf});
        }
        index.postings_.emplace(std::move(term), std::move(list));
    }
    return index;
}

}  // namespace groundcheck
