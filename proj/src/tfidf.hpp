#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "text_pipeline.hpp"

namespace sentibench {

// Term inventory fitted on a training corpus. Terms are ranked by corpus
// frequency (ties broken lexicographically) and truncated to max_size.
//
// The sequence-model flavor reserves ids 0 (<pad>) and 1 (<unk>) ahead of
// the ranked terms; the TF-IDF flavor reserves nothing.
struct Vocabulary {
    std::unordered_map<std::string, std::uint32_t> term_to_index;
    std::vector<std::string> terms;                  // index -> term (includes reserved slots)
    std::vector<std::uint64_t> document_frequency;   // per index; 0 for reserved slots
    std::size_t max_size = 0;
    std::uint64_t fitted_documents = 0;              // N of the fitting corpus
    std::uint32_t reserved = 0;                      // leading special-token count

    std::size_t size() const { return terms.size(); }

    // index of term, or -1 if absent
    std::int64_t index_of(const std::string& term) const {
        auto it = term_to_index.find(term);
        return it == term_to_index.end() ? -1 : static_cast<std::int64_t>(it->second);
    }
};

inline constexpr std::uint32_t kPadId = 0;
inline constexpr std::uint32_t kUnkId = 1;

Vocabulary fit_vocabulary(const std::vector<TokenSequence>& train_docs, std::size_t max_size);

// total_size counts the two reserved ids, so the ranked terms fill
// total_size - 2 slots.
Vocabulary fit_dl_vocabulary(const std::vector<TokenSequence>& train_docs, std::size_t total_size);

struct SparseEntry {
    std::uint32_t index = 0;
    double weight = 0.0;
};

// Strictly increasing indices, no explicit zeros.
using SparseVector = std::vector<SparseEntry>;

double dot(const SparseVector& x, const std::vector<double>& dense);

// TF(t,d): count of t in d over total token count (all tokens, in or out
// of vocabulary). Empty documents give 0 for every term.
double term_frequency(const std::string& term, const TokenSequence& doc);

// IDF(t) = ln(N / df(t)); t must be a fitted vocabulary term.
double inverse_document_frequency(const std::string& term, const Vocabulary& vocab);

// TF-IDF vector of doc under vocab, L2-normalized when requested.
SparseVector transform(const TokenSequence& doc, const Vocabulary& vocab, bool l2_normalize);

// Vocabulary plus the normalization flag, as serialized next to trained
// models. `hash()` keys model/feature compatibility checks.
struct TfidfTransformer {
    Vocabulary vocab;
    bool l2_normalize = true;

    SparseVector transform(const TokenSequence& doc) const {
        return sentibench::transform(doc, vocab, l2_normalize);
    }

    std::string to_json_string() const;
    static TfidfTransformer from_json_string(const std::string& text);
    std::string hash() const;
};

} // namespace sentibench
