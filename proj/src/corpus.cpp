#include "corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include "errors.hpp"
#include "rng.hpp"

namespace sentibench {

void SplitSpec::validate() const {
    if (fractions.empty()) throw ConfigError("split spec has no partitions");
    double sum = 0.0;
    for (const auto& f : fractions) {
        if (f.fraction <= 0.0 || f.fraction > 1.0) {
            throw ConfigError("split fraction '" + f.name + "' outside (0,1]");
        }
        sum += f.fraction;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ConfigError("split fractions sum to " + std::to_string(sum) + ", expected 1");
    }
}

const std::vector<LabeledDocument>& DatasetSplit::partition(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return partitions[i];
    }
    throw ConfigError("no partition named '" + name + "'");
}

namespace {

// RFC 4180 field scanner. Returns one record per call; quoted fields may
// contain commas, escaped quotes ("") and newlines.
struct CsvReader {
    std::istream& in;
    std::size_t line = 1;

    // false on clean EOF
    bool next_record(std::vector<std::string>& fields) {
        fields.clear();
        int c = in.get();
        if (c == EOF) return false;
        std::string field;
        bool in_quotes = false;
        bool field_was_quoted = false;
        const std::size_t record_line = line;
        for (;; c = in.get()) {
            if (c == EOF) {
                if (in_quotes) {
                    throw DataError("CSV parse error at line " + std::to_string(record_line) +
                                    ": unterminated quoted field");
                }
                fields.push_back(std::move(field));
                return true;
            }
            if (in_quotes) {
                if (c == '"') {
                    if (in.peek() == '"') {
                        in.get();
                        field.push_back('"');
                    } else {
                        in_quotes = false;
                    }
                } else {
                    if (c == '\n') ++line;
                    field.push_back(static_cast<char>(c));
                }
                continue;
            }
            switch (c) {
            case '"':
                if (!field.empty()) {
                    throw DataError("CSV parse error at line " + std::to_string(line) +
                                    ": quote inside unquoted field");
                }
                in_quotes = true;
                field_was_quoted = true;
                break;
            case ',':
                fields.push_back(std::move(field));
                field.clear();
                field_was_quoted = false;
                break;
            case '\r':
                if (in.peek() == '\n') in.get();
                [[fallthrough]];
            case '\n':
                ++line;
                fields.push_back(std::move(field));
                return true;
            default:
                if (field_was_quoted) {
                    throw DataError("CSV parse error at line " + std::to_string(line) +
                                    ": data after closing quote");
                }
                field.push_back(static_cast<char>(c));
            }
        }
    }
};

} // namespace

std::vector<CsvRow> load_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset file: " + path);

    CsvReader reader{in};
    std::vector<std::string> fields;
    if (!reader.next_record(fields)) throw DataError("dataset file is empty: " + path);
    if (fields.size() != 2 || fields[0] != "review" || fields[1] != "sentiment") {
        throw DataError("expected header 'review,sentiment' in " + path);
    }

    std::vector<CsvRow> rows;
    std::size_t row_index = 0;
    while (true) {
        const std::size_t at_line = reader.line;
        if (!reader.next_record(fields)) break;
        if (fields.size() == 1 && fields[0].empty()) continue; // trailing blank line
        if (fields.size() != 2) {
            throw DataError("CSV parse error at line " + std::to_string(at_line) + ": expected 2 fields, got " +
                            std::to_string(fields.size()));
        }
        if (fields[1] != "positive" && fields[1] != "negative") {
            throw DataError("row " + std::to_string(row_index) + " has unknown label '" + fields[1] + "'");
        }
        rows.push_back(CsvRow{RawDocument{std::move(fields[0]), row_index}, std::move(fields[1])});
        ++row_index;
    }
    return rows;
}

int encode_label(std::string_view label) {
    if (label == "positive") return 1;
    if (label == "negative") return 0;
    throw DataError("unknown label '" + std::string(label) + "' (expected \"positive\" or \"negative\")");
}

std::size_t count_duplicate_reviews(const std::vector<CsvRow>& rows) {
    std::unordered_set<std::string_view> seen;
    seen.reserve(rows.size());
    std::size_t duplicates = 0;
    for (const auto& row : rows) {
        if (!seen.insert(row.review.text).second) ++duplicates;
    }
    return duplicates;
}

namespace {

std::array<std::vector<std::size_t>, 2> indices_by_class(const std::vector<LabeledDocument>& docs) {
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        by_class[static_cast<std::size_t>(docs[i].label)].push_back(i);
    }
    return by_class;
}

} // namespace

std::vector<LabeledDocument> stratified_sample(const std::vector<LabeledDocument>& docs,
                                               std::size_t n, std::uint64_t seed) {
    if (n > docs.size()) {
        throw DataError("stratified sample of " + std::to_string(n) + " from only " +
                        std::to_string(docs.size()) + " documents");
    }
    auto by_class = indices_by_class(docs);
    if (by_class[0].empty() || by_class[1].empty()) {
        throw DataError("stratified sampling requires both classes present");
    }

    const double total = static_cast<double>(docs.size());
    std::size_t take[2];
    double remainder[2];
    std::size_t assigned = 0;
    for (int c = 0; c < 2; ++c) {
        const double exact = static_cast<double>(n) * static_cast<double>(by_class[c].size()) / total;
        take[c] = static_cast<std::size_t>(exact);
        remainder[c] = exact - static_cast<double>(take[c]);
        assigned += take[c];
    }
    // largest remainder first; ties go to class 0
    while (assigned < n) {
        const int c = remainder[1] > remainder[0] ? 1 : 0;
        ++take[c];
        remainder[c] = -1.0;
        ++assigned;
    }

    Rng rng(seed);
    std::vector<LabeledDocument> out;
    out.reserve(n);
    for (int c = 0; c < 2; ++c) {
        if (take[c] > by_class[c].size()) {
            throw DataError("class " + std::to_string(c) + " has too few documents for the requested sample");
        }
        rng.shuffle(by_class[c]);
        for (std::size_t i = 0; i < take[c]; ++i) out.push_back(docs[by_class[c][i]]);
    }
    return out;
}

DatasetSplit split(const std::vector<LabeledDocument>& docs, const SplitSpec& spec) {
    spec.validate();
    if (docs.empty()) throw DataError("cannot split an empty dataset");

    const std::size_t parts = spec.fractions.size();
    DatasetSplit result;
    result.names.reserve(parts);
    for (const auto& f : spec.fractions) result.names.push_back(f.name);
    result.partitions.assign(parts, {});

    Rng rng(spec.seed);
    auto slice_group = [&](std::vector<std::size_t>& group) {
        rng.shuffle(group);
        const std::size_t n = group.size();
        std::vector<std::size_t> sizes(parts);
        std::size_t used = 0;
        for (std::size_t p = 0; p < parts; ++p) {
            sizes[p] = static_cast<std::size_t>(spec.fractions[p].fraction * static_cast<double>(n));
            used += sizes[p];
        }
        sizes[0] += n - used; // remainder to the first partition
        std::size_t cursor = 0;
        for (std::size_t p = 0; p < parts; ++p) {
            for (std::size_t i = 0; i < sizes[p]; ++i) {
                result.partitions[p].push_back(docs[group[cursor++]]);
            }
        }
    };

    if (spec.stratified) {
        auto by_class = indices_by_class(docs);
        slice_group(by_class[0]);
        slice_group(by_class[1]);
    } else {
        std::vector<std::size_t> all(docs.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        slice_group(all);
    }
    return result;
}

} // namespace sentibench
