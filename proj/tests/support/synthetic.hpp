#pragma once

#include <cstdint>
#include <string>

namespace sentibench::testsupport {

// Deterministic two-class review corpus in the `review,sentiment` CSV
// format. Reviews mix class-leaning vocabulary with shared filler and
// deliberately include HTML tags, URLs, punctuation and mixed case so the
// full cleaning path gets exercised end to end.
struct SyntheticSpec {
    std::size_t rows = 600;
    std::uint64_t seed = 7;
    double positive_fraction = 0.5;
};

std::string synthetic_csv(const SyntheticSpec& spec);

} // namespace sentibench::testsupport
