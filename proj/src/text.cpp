#include "ravu/text.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace ravu::text {

namespace {

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

// Function words plus the temporal verbs question templates use
// ("when did X start Y"), so matching keys on entity and action words.
const std::unordered_set<std::string_view>& stopwords() {
    static const std::unordered_set<std::string_view> set = {
        "a",      "an",     "the",    "and",    "or",     "but",   "of",    "to",
        "in",     "on",     "at",     "by",     "for",    "with",  "from",  "up",
        "down",   "into",   "onto",   "over",   "is",     "are",   "was",   "were",
        "be",     "been",   "being",  "am",     "do",     "does",  "did",   "doing",
        "done",   "what",   "which",  "who",    "whom",   "whose", "when",  "where",
        "why",    "how",    "this",   "that",   "these",  "those", "it",    "its",
        "he",     "she",    "they",   "them",   "his",    "her",   "their", "there",
        "then",   "than",   "as",     "so",     "if",     "while", "after", "before",
        "during", "start",  "started", "starts", "begin", "began", "begins", "stop",
        "stopped", "finish", "finished", "end",  "ended",  "many",  "much",  "any",
        "some",   "all",    "video",  "appear", "appears", "have", "has",   "had",
        "will",   "would",  "can",    "could",  "should", "not",   "no",    "yes",
        "very",   "just",   "also",   "about",  "out",    "off",   "again",
    };
    return set;
}

}  // namespace

std::vector<std::string> words(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (is_word_char(c)) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

bool is_stopword(std::string_view word) {
    return stopwords().contains(word);
}

std::vector<std::string> content_words(std::string_view text) {
    auto all = words(text);
    std::erase_if(all, [](const std::string& w) { return is_stopword(w); });
    return all;
}

std::set<std::string> word_set(std::string_view text) {
    auto w = words(text);
    return {w.begin(), w.end()};
}

std::set<std::string> content_word_set(std::string_view text) {
    auto w = content_words(text);
    return {w.begin(), w.end()};
}

std::size_t overlap(std::string_view query, std::string_view candidate) {
    const auto q = word_set(query);
    const auto c = word_set(candidate);
    return static_cast<std::size_t>(
        std::count_if(q.begin(), q.end(), [&](const std::string& w) { return c.contains(w); }));
}

std::size_t content_overlap(std::string_view query, std::string_view candidate) {
    const auto q = content_word_set(query);
    const auto c = word_set(candidate);
    return static_cast<std::size_t>(
        std::count_if(q.begin(), q.end(), [&](const std::string& w) { return c.contains(w); }));
}

bool contains_all_content_words(std::string_view query, std::string_view candidate) {
    const auto q = content_word_set(query);
    if (q.empty()) return false;
    const auto c = word_set(candidate);
    return std::all_of(q.begin(), q.end(), [&](const std::string& w) { return c.contains(w); });
}

std::size_t whitespace_tokens(std::string_view text) {
    std::size_t n = 0;
    bool in_token = false;
    for (char c : text) {
        const bool ws = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!ws && !in_token) ++n;
        in_token = !ws;
    }
    return n;
}

std::string trim(std::string_view s) {
    auto b = s.begin();
    auto e = s.end();
    while (b != e && std::isspace(static_cast<unsigned char>(*b))) ++b;
    while (e != b && std::isspace(static_cast<unsigned char>(*(e - 1)))) --e;
    return {b, e};
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string> split(std::string_view s, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(delim, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            return out;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace ravu::text
