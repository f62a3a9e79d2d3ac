#include "synthetic.hpp"

#include <array>
#include <vector>

#include "rng.hpp"

namespace sentibench::testsupport {

namespace {

const std::array<const char*, 16> kPositiveWords = {
    "superb",    "delightful", "wonderful", "gripping",  "masterful", "charming",
    "uplifting", "brilliant",  "stunning",  "heartfelt", "memorable", "excellent",
    "riveting",  "joyful",     "flawless",  "inspired",
};

const std::array<const char*, 16> kNegativeWords = {
    "dreadful", "tedious",  "awful",  "clumsy",   "wooden",     "bland",
    "dire",     "lifeless", "boring", "painful",  "incoherent", "terrible",
    "hollow",   "dismal",   "inept",  "pointless",
};

const std::array<const char*, 20> kFillerWords = {
    "the",    "movie", "plot",   "actor", "scene", "story", "film",
    "with",   "and",   "a",      "cast",  "script", "music", "ending",
    "camera", "pace",  "dialog", "tone",  "was",   "feels",
};

} // namespace

std::string synthetic_csv(const SyntheticSpec& spec) {
    Rng rng(spec.seed);
    std::string csv = "review,sentiment\n";

    const std::size_t positives =
        static_cast<std::size_t>(spec.positive_fraction * static_cast<double>(spec.rows));
    for (std::size_t row = 0; row < spec.rows; ++row) {
        const bool positive = row < positives;
        const auto& class_words = positive ? kPositiveWords : kNegativeWords;
        const auto& other_words = positive ? kNegativeWords : kPositiveWords;

        std::string review;
        const std::size_t words = 8 + rng.next_below(22);
        for (std::size_t w = 0; w < words; ++w) {
            if (!review.empty()) review += ' ';
            const double roll = rng.next_double();
            if (roll < 0.35) {
                review += class_words[rng.next_below(class_words.size())];
            } else if (roll < 0.40) {
                review += other_words[rng.next_below(other_words.size())];
            } else {
                review += kFillerWords[rng.next_below(kFillerWords.size())];
            }
            // noise the cleaner must strip
            const double noise = rng.next_double();
            if (noise < 0.05) review += "!";
            else if (noise < 0.08) review += ",";
            else if (noise < 0.11) review += " <br />";
            else if (noise < 0.13) review += " http://example.com/clip?id=42";
            else if (noise < 0.15) {
                for (char& c : review) {
                    if (c >= 'a' && c <= 'z' && rng.next_double() < 0.1) {
                        c = static_cast<char>(c - 'a' + 'A');
                    }
                }
            }
        }

        // RFC 4180: quote everything, escape embedded quotes
        if (rng.next_double() < 0.05) review += " she said \"never again\"";
        std::string quoted = "\"";
        for (char c : review) {
            quoted += c;
            if (c == '"') quoted += '"';
        }
        quoted += '"';
        csv += quoted;
        csv += positive ? ",positive\n" : ",negative\n";
    }
    return csv;
}

} // namespace sentibench::testsupport
