#include "tfidf.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "errors.hpp"
#include "hashing.hpp"

namespace sentibench {

namespace {

// frequency-ranked terms with their df, before truncation
struct TermStats {
    std::string term;
    std::uint64_t corpus_frequency = 0;
    std::uint64_t document_frequency = 0;
};

std::vector<TermStats> ranked_terms(const std::vector<TokenSequence>& docs) {
    std::unordered_map<std::string, TermStats> stats;
    std::unordered_map<std::string, std::size_t> last_doc;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        for (const auto& token : docs[d]) {
            auto& s = stats[token];
            if (s.term.empty()) s.term = token;
            ++s.corpus_frequency;
            auto [it, inserted] = last_doc.try_emplace(token, d);
            if (inserted || it->second != d) {
                it->second = d;
                ++s.document_frequency;
            }
        }
    }
    std::vector<TermStats> ranked;
    ranked.reserve(stats.size());
    for (auto& [term, s] : stats) ranked.push_back(std::move(s));
    std::sort(ranked.begin(), ranked.end(), [](const TermStats& a, const TermStats& b) {
        if (a.corpus_frequency != b.corpus_frequency) return a.corpus_frequency > b.corpus_frequency;
        return a.term < b.term;
    });
    return ranked;
}

Vocabulary build(const std::vector<TokenSequence>& docs, std::size_t max_size,
                 std::uint32_t reserved_count) {
    if (docs.empty()) throw DataError("cannot fit a vocabulary on an empty corpus");
    if (max_size <= reserved_count) throw ConfigError("vocabulary size leaves no room for terms");

    Vocabulary vocab;
    vocab.max_size = max_size;
    vocab.fitted_documents = docs.size();
    vocab.reserved = reserved_count;
    if (reserved_count > 0) {
        vocab.terms = {"<pad>", "<unk>"};
        vocab.document_frequency.assign(reserved_count, 0);
    }

    auto ranked = ranked_terms(docs);
    const std::size_t keep = std::min(ranked.size(), max_size - reserved_count);
    for (std::size_t i = 0; i < keep; ++i) {
        vocab.term_to_index.emplace(ranked[i].term, static_cast<std::uint32_t>(vocab.terms.size()));
        vocab.terms.push_back(std::move(ranked[i].term));
        vocab.document_frequency.push_back(ranked[i].document_frequency);
    }
    return vocab;
}

} // namespace

Vocabulary fit_vocabulary(const std::vector<TokenSequence>& train_docs, std::size_t max_size) {
    return build(train_docs, max_size, 0);
}

Vocabulary fit_dl_vocabulary(const std::vector<TokenSequence>& train_docs, std::size_t total_size) {
    return build(train_docs, total_size, 2);
}

double dot(const SparseVector& x, const std::vector<double>& dense) {
    double acc = 0.0;
    for (const auto& e : x) acc += e.weight * dense[e.index];
    return acc;
}

double term_frequency(const std::string& term, const TokenSequence& doc) {
    if (doc.empty()) return 0.0;
    std::size_t count = 0;
    for (const auto& token : doc) {
        if (token == term) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(doc.size());
}

double inverse_document_frequency(const std::string& term, const Vocabulary& vocab) {
    const std::int64_t idx = vocab.index_of(term);
    if (idx < 0 || static_cast<std::uint32_t>(idx) < vocab.reserved) {
        throw DataError("term '" + term + "' is not in the fitted vocabulary");
    }
    const auto df = vocab.document_frequency[static_cast<std::size_t>(idx)];
    return std::log(static_cast<double>(vocab.fitted_documents) / static_cast<double>(df));
}

SparseVector transform(const TokenSequence& doc, const Vocabulary& vocab, bool l2_normalize) {
    if (doc.empty()) return {};

    // in-vocabulary counts; OOV tokens only grow the TF denominator
    std::unordered_map<std::uint32_t, std::uint32_t> counts;
    for (const auto& token : doc) {
        const std::int64_t idx = vocab.index_of(token);
        if (idx >= 0) ++counts[static_cast<std::uint32_t>(idx)];
    }

    const double inv_len = 1.0 / static_cast<double>(doc.size());
    const double n_docs = static_cast<double>(vocab.fitted_documents);
    SparseVector out;
    out.reserve(counts.size());
    for (const auto& [index, count] : counts) {
        const double tf = static_cast<double>(count) * inv_len;
        const double idf = std::log(n_docs / static_cast<double>(vocab.document_frequency[index]));
        const double w = tf * idf;
        if (w != 0.0) out.push_back({index, w});
    }
    std::sort(out.begin(), out.end(),
              [](const SparseEntry& a, const SparseEntry& b) { return a.index < b.index; });

    if (l2_normalize && !out.empty()) {
        double norm_sq = 0.0;
        for (const auto& e : out) norm_sq += e.weight * e.weight;
        const double inv_norm = 1.0 / std::sqrt(norm_sq);
        for (auto& e : out) e.weight *= inv_norm;
    }
    return out;
}

std::string TfidfTransformer::to_json_string() const {
    nlohmann::json j;
    j["format_version"] = 1;
    j["kind"] = "tfidf";
    j["max_size"] = vocab.max_size;
    j["documents"] = vocab.fitted_documents;
    j["l2_normalize"] = l2_normalize;
    j["terms"] = vocab.terms;
    j["document_frequency"] = vocab.document_frequency;
    return j.dump(2);
}

TfidfTransformer TfidfTransformer::from_json_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed transformer JSON: ") + e.what());
    }
    if (j.value("kind", "") != "tfidf") throw DataError("not a tfidf transformer file");
    if (j.value("format_version", 0) != 1) throw DataError("unsupported transformer format version");

    TfidfTransformer t;
    t.l2_normalize = j.at("l2_normalize").get<bool>();
    t.vocab.max_size = j.at("max_size").get<std::size_t>();
    t.vocab.fitted_documents = j.at("documents").get<std::uint64_t>();
    t.vocab.terms = j.at("terms").get<std::vector<std::string>>();
    t.vocab.document_frequency = j.at("document_frequency").get<std::vector<std::uint64_t>>();
    if (t.vocab.terms.size() != t.vocab.document_frequency.size()) {
        throw DataError("transformer term/df length mismatch");
    }
    for (std::uint32_t i = 0; i < t.vocab.terms.size(); ++i) {
        t.vocab.term_to_index.emplace(t.vocab.terms[i], i);
    }
    return t;
}

std::string TfidfTransformer::hash() const {
    return fnv1a64_hex(to_json_string());
}

} // namespace sentibench
