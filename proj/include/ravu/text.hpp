#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

// Word-level text helpers shared by the mock backend and the
// deterministic matchers in the reasoning layer.
namespace ravu::text {

// Lowercased maximal runs of ASCII letters/digits. "[E3] ran." -> {"e3", "ran"}.
std::vector<std::string> words(std::string_view text);

bool is_stopword(std::string_view word);

// words() minus stopwords, order preserved, duplicates kept.
std::vector<std::string> content_words(std::string_view text);

std::set<std::string> word_set(std::string_view text);
std::set<std::string> content_word_set(std::string_view text);

// Number of distinct words of `query` that also occur in `candidate`.
std::size_t overlap(std::string_view query, std::string_view candidate);

// Number of distinct content words of `query` that occur in `candidate`.
std::size_t content_overlap(std::string_view query, std::string_view candidate);

// True when every content word of `query` occurs in `candidate`.
// A query with no content words matches nothing.
bool contains_all_content_words(std::string_view query, std::string_view candidate);

std::size_t whitespace_tokens(std::string_view text);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split(std::string_view s, char delim);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace ravu::text
