#include "text_pipeline.hpp"

namespace sentibench {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool starts_url(std::string_view s, std::size_t pos, std::size_t* prefix_len) {
    static constexpr std::string_view prefixes[] = {"https://", "http://", "www."};
    for (std::string_view p : prefixes) {
        if (s.compare(pos, p.size(), p) == 0) {
            *prefix_len = p.size();
            return true;
        }
    }
    return false;
}

} // namespace

std::string clean_text(std::string_view raw) {
    // lowercase (ASCII only; bytes outside [a-z] fall to the filter stage)
    std::string text(raw);
    for (char& c : text) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }

    // URL strip: from any http://, https:// or www. occurrence up to the
    // next whitespace, matching the usual \S+ tail of a URL regex
    std::string no_urls;
    no_urls.reserve(text.size());
    for (std::size_t i = 0; i < text.size();) {
        std::size_t prefix_len = 0;
        if (starts_url(text, i, &prefix_len)) {
            i += prefix_len;
            while (i < text.size() && !is_space(text[i])) ++i;
        } else {
            no_urls.push_back(text[i]);
            ++i;
        }
    }

    // HTML strip: complete <...> spans become a single space; a stray '<'
    // without a closing '>' is left for the non-alphabet filter
    std::string no_tags;
    no_tags.reserve(no_urls.size());
    for (std::size_t i = 0; i < no_urls.size();) {
        if (no_urls[i] == '<') {
            const std::size_t close = no_urls.find('>', i + 1);
            if (close != std::string::npos) {
                no_tags.push_back(' ');
                i = close + 1;
                continue;
            }
        }
        no_tags.push_back(no_urls[i]);
        ++i;
    }

    // non-alphabet filter + whitespace normalize in one pass
    std::string out;
    out.reserve(no_tags.size());
    for (char c : no_tags) {
        if (c >= 'a' && c <= 'z') {
            out.push_back(c);
        } else if (!out.empty() && out.back() != ' ') {
            out.push_back(' ');
        }
    }
    if (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

TokenSequence tokenize(std::string_view cleaned) {
    TokenSequence tokens;
    std::size_t start = 0;
    while (start < cleaned.size()) {
        std::size_t end = cleaned.find(' ', start);
        if (end == std::string_view::npos) end = cleaned.size();
        if (end > start) tokens.emplace_back(cleaned.substr(start, end - start));
        start = end + 1;
    }
    return tokens;
}

} // namespace sentibench
