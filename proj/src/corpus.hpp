#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "text_pipeline.hpp"

namespace sentibench {

// Label convention: 1 == "positive", 0 == "negative".
struct LabeledDocument {
    TokenSequence tokens;
    int label = 0;
};

struct CsvRow {
    RawDocument review;
    std::string label;
};

struct SplitFraction {
    std::string name;
    double fraction = 0.0;
};

struct SplitSpec {
    std::vector<SplitFraction> fractions; // must sum to 1 within 1e-9
    std::uint64_t seed = 42;
    bool stratified = true;

    void validate() const;
};

struct DatasetSplit {
    std::vector<std::string> names;
    std::vector<std::vector<LabeledDocument>> partitions;

    const std::vector<LabeledDocument>& partition(const std::string& name) const;
};

// Reads a `review,sentiment` CSV (RFC 4180 quoting, quoted fields may span
// lines). Rows come back in file order; labels are validated against
// {"positive","negative"} with the offending row named on failure.
std::vector<CsvRow> load_csv(const std::string& path);

int encode_label(std::string_view label);

// Number of rows whose review text exactly matches an earlier row's. The
// corpus is ingested as-is; duplicates are only counted for the manifest.
std::size_t count_duplicate_reviews(const std::vector<CsvRow>& rows);

// Draws n documents preserving class proportions (largest-remainder
// rounding, ties to the lower class id). Selection is a seeded per-class
// Fisher-Yates shuffle, so the result is reproducible across platforms.
std::vector<LabeledDocument> stratified_sample(const std::vector<LabeledDocument>& docs,
                                               std::size_t n, std::uint64_t seed);

// Partitions docs per spec.fractions. Sizes are floor(fraction * N) with
// the remainder assigned to the first partition; applied per class when
// stratified. Deterministic in spec.seed.
DatasetSplit split(const std::vector<LabeledDocument>& docs, const SplitSpec& spec);

} // namespace sentibench
