#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace sentibench {

struct RawDocument {
    std::string text;    // preserved byte-for-byte from ingestion
    std::size_t id = 0;  // ordinal position in the source file
};

// Cleaned, tokenized document. Every token matches [a-z]+.
using TokenSequence = std::vector<std::string>;

// Normalizes arbitrary input down to the [a-z ] alphabet. Stages run in a
// fixed order: lowercase, URL strip, HTML tag strip, non-alphabet filter,
// whitespace collapse + trim. Idempotent; degenerate inputs yield "".
std::string clean_text(std::string_view raw);

// Splits cleaned text on spaces. Input must already be clean_text output.
TokenSequence tokenize(std::string_view cleaned);

} // namespace sentibench
