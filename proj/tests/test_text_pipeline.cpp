#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "rng.hpp"
#include "text_pipeline.hpp"

using namespace sentibench;

TEST_CASE("clean_text lowercases and strips punctuation") {
    CHECK(clean_text("Great MOVIE!") == "great movie");
}

TEST_CASE("clean_text applies the five stages in order") {
    // hand-applied oracle: lowercase -> URL strip -> HTML strip ->
    // non-alphabet filter -> whitespace normalize
    CHECK(clean_text("<br />Visit https://x.com NOW") == "visit now");
    CHECK(clean_text("see www.site.org/page then LEAVE") == "see then leave");
    CHECK(clean_text("a<b>c") == "a c");
    CHECK(clean_text("stray < bracket") == "stray bracket");
    CHECK(clean_text("ends with tag <br />") == "ends with tag");
    CHECK(clean_text("http://only.a.url") == "");
}

TEST_CASE("clean_text degenerate inputs") {
    CHECK(clean_text("") == "");
    CHECK(clean_text("   \t\n ") == "");
    CHECK(clean_text("123 456 !!!") == "");
    CHECK(clean_text("caf\xc3\xa9") == "caf"); // non-ASCII bytes are non-alphabet
}

TEST_CASE("tokenize splits on single spaces") {
    CHECK(tokenize("great movie") == TokenSequence{"great", "movie"});
    CHECK(tokenize("") == TokenSequence{});
    CHECK(tokenize("a a a") == TokenSequence{"a", "a", "a"});
}

namespace {

std::string random_unicode_string(Rng& rng) {
    const std::size_t len = rng.next_below(120);
    std::string s;
    s.reserve(len);
    for (std::size_t i = 0; i < len; ++i) {
        // full byte range, biased toward printable ASCII
        if (rng.next_double() < 0.7) {
            s.push_back(static_cast<char>(0x20 + rng.next_below(0x5f)));
        } else {
            s.push_back(static_cast<char>(rng.next_below(256)));
        }
    }
    return s;
}

bool only_lowercase_and_spaces(const std::string& s) {
    for (char c : s) {
        if (!((c >= 'a' && c <= 'z') || c == ' ')) return false;
    }
    return true;
}

} // namespace

TEST_CASE("clean_text properties over random inputs") {
    Rng rng(20240214);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::string raw = random_unicode_string(rng);
        const std::string cleaned = clean_text(raw);
        CAPTURE(raw);

        CHECK(only_lowercase_and_spaces(cleaned));
        CHECK(clean_text(cleaned) == cleaned); // idempotence

        for (const auto& token : tokenize(cleaned)) {
            CHECK(!token.empty());
            CHECK(only_lowercase_and_spaces(token));
            CHECK(token.find(' ') == std::string::npos);
        }
    }
}

TEST_CASE("token count equals spaces plus one for nonempty cleaned text") {
    Rng rng(99);
    for (int trial = 0; trial < 500; ++trial) {
        const std::string cleaned = clean_text(random_unicode_string(rng));
        if (cleaned.empty()) continue;
        const auto spaces = static_cast<std::size_t>(
            std::count(cleaned.begin(), cleaned.end(), ' '));
        CHECK(tokenize(cleaned).size() == spaces + 1);
    }
}
