#pragma once

// Small text utilities shared by ingestion, retrieval and prompt assembly.
// Everything here is ASCII-aware only; other UTF-8 bytes pass through as-is.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace pathrag {

inline bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

inline std::string fold_case(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

// Trimmed, case-folded key used for entity merging and keyword dedup.
inline std::string identity_key(std::string_view s) { return fold_case(trim(s)); }

// Collapse internal whitespace runs to single spaces.
inline std::string squeeze_spaces(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending = false;
    for (char c : trim(s)) {
        if (is_space(c)) {
            pending = true;
            continue;
        }
        if (pending && !out.empty()) out.push_back(' ');
        pending = false;
        out.push_back(c);
    }
    return out;
}

// FNV-1a, 64 bit. Stable across platforms, unlike std::hash.
inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Token counter contract: any callable mapping text to a non-negative count.
/// The default estimator is ceil(bytes / 4).
using TokenCounter = std::function<std::size_t(std::string_view)>;

inline std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

inline std::size_t token_count(std::string_view text) { return estimate_tokens(text); }

inline TokenCounter default_token_counter() { return &estimate_tokens; }

// Truncate to at most `max_chars` UTF-8 code points.
inline std::string utf8_prefix(std::string_view s, std::size_t max_chars) {
    std::size_t chars = 0;
    std::size_t i = 0;
    while (i < s.size()) {
        auto lead = static_cast<unsigned char>(s[i]);
        std::size_t len = 1;
        if (lead >= 0xF0) len = 4;
        else if (lead >= 0xE0) len = 3;
        else if (lead >= 0xC0) len = 2;
        if (chars == max_chars) break;
        i = std::min(s.size(), i + len);
        ++chars;
    }
    return std::string(s.substr(0, i));
}

/// Splits text into sentences. Each piece keeps its trailing whitespace so
/// concatenating the pieces reproduces the input exactly.
inline std::vector<std::string_view> split_sentences(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        bool terminator = c == '.' || c == '!' || c == '?';
        if (c == '\n' || (terminator && (i + 1 == text.size() || is_space(text[i + 1])))) {
            std::size_t end = i + 1;
            while (end < text.size() && is_space(text[end])) ++end;
            out.push_back(text.substr(start, end - start));
            start = end;
            i = end;
            continue;
        }
        ++i;
    }
    if (start < text.size()) out.push_back(text.substr(start));
    return out;
}

struct WordToken {
    std::string_view text;
    std::size_t offset = 0;
};

inline bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || static_cast<unsigned char>(c) >= 0x80;
}

/// Alphanumeric runs; internal apostrophes and hyphens are kept ("don't", "long-term").
inline std::vector<WordToken> word_tokens(std::string_view text) {
    std::vector<WordToken> out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!is_word_char(text[i])) {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < text.size()) {
            if (is_word_char(text[j])) {
                ++j;
            } else if ((text[j] == '\'' || text[j] == '-') && j + 1 < text.size() &&
                       is_word_char(text[j + 1])) {
                j += 2;
            } else {
                break;
            }
        }
        out.push_back({text.substr(i, j - i), i});
        i = j;
    }
    return out;
}

inline bool is_capitalized(std::string_view word) {
    return !word.empty() && word.front() >= 'A' && word.front() <= 'Z';
}

inline constexpr std::array<std::string_view, 124> kStopwords = {
    "a",       "about",   "above",  "after",   "again",  "against", "all",     "am",
    "an",      "and",     "any",    "are",     "as",     "at",      "be",      "because",
    "been",    "before",  "being",  "below",   "between", "both",   "but",     "by",
    "can",     "could",   "did",    "do",      "does",   "doing",   "down",    "during",
    "each",    "few",     "for",    "from",    "further", "had",    "has",     "have",
    "having",  "he",      "her",    "here",    "hers",   "herself", "him",     "himself",
    "his",     "how",     "i",      "if",      "in",     "into",    "is",      "it",
    "its",     "itself",  "just",   "me",      "more",   "most",    "my",      "myself",
    "no",      "nor",     "not",    "now",     "of",     "off",     "on",      "once",
    "only",    "or",      "other",  "our",     "ours",   "out",     "over",    "own",
    "same",    "she",     "should", "so",      "some",   "such",    "than",    "that",
    "the",     "their",   "theirs", "them",    "then",   "there",   "these",   "they",
    "this",    "those",   "through", "to",     "too",    "under",   "until",   "up",
    "very",    "was",     "we",     "were",    "what",   "when",    "where",   "which",
    "while",   "who",     "whom",   "why",     "will",   "with",    "would",   "you",
    "your",    "yours",   "tell",   "describe",
};

inline bool is_stopword(std::string_view word) {
    std::string key = fold_case(word);
    return std::find(kStopwords.begin(), kStopwords.end(), key) != kStopwords.end();
}

}  // namespace pathrag
