#pragma once

// Query keywords -> the N query-relevant nodes.

#include <pathrag/embedding_index.hpp>
#include <pathrag/error.hpp>
#include <pathrag/providers.hpp>
#include <pathrag/text.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstddef>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

namespace pathrag {

struct KeywordSet {
    std::vector<std::string> keywords;
    std::string source_query;
    bool used_fallback = false;
};

class KeywordExtractor {
public:
    virtual ~KeywordExtractor() = default;
    virtual std::vector<std::string> extract(const std::string& query) = 0;
    virtual std::string tag() const = 0;
};

/// Trims, drops empties and removes case-insensitive duplicates (first wins).
inline std::vector<std::string> dedup_keywords(const std::vector<std::string>& raw) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& k : raw) {
        std::string cleaned = squeeze_spaces(k);
        if (cleaned.empty()) continue;
        if (seen.insert(fold_case(cleaned)).second) out.push_back(std::move(cleaned));
    }
    return out;
}

/// Content tokens of the query with the embedded stopword list removed.
inline std::vector<std::string> fallback_keywords(std::string_view query) {
    std::vector<std::string> raw;
    for (const auto& tok : word_tokens(query)) {
        if (!is_stopword(tok.text)) raw.emplace_back(tok.text);
    }
    return dedup_keywords(raw);
}

/// Offline extractor. Runs of capitalized content words ("Acme Corp") form one
/// keyword; other content words are keywords on their own.
class MockKeywordExtractor final : public KeywordExtractor {
public:
    std::vector<std::string> extract(const std::string& query) override {
        std::vector<std::string> raw;
        auto tokens = word_tokens(query);
        std::size_t i = 0;
        while (i < tokens.size()) {
            const auto& tok = tokens[i];
            if (is_stopword(tok.text)) {
                ++i;
                continue;
            }
            if (!is_capitalized(tok.text)) {
                raw.emplace_back(tok.text);
                ++i;
                continue;
            }
            std::size_t j = i + 1;
            while (j < tokens.size() && is_capitalized(tokens[j].text) && !is_stopword(tokens[j].text) &&
                   only_spaces_between(query, tokens[j - 1], tokens[j])) {
                ++j;
            }
            std::size_t begin = tokens[i].offset;
            std::size_t end = tokens[j - 1].offset + tokens[j - 1].text.size();
            raw.emplace_back(query.substr(begin, end - begin));
            i = j;
        }
        return raw;
    }

    std::string tag() const override { return "mock"; }

    static bool only_spaces_between(std::string_view text, const WordToken& a, const WordToken& b) {
        std::size_t from = a.offset + a.text.size();
        return b.offset > from && b.offset - from == 1 && text[from] == ' ';
    }
};

/// Asks a generator for a JSON list of keywords.
class LlmKeywordExtractor final : public KeywordExtractor {
public:
    explicit LlmKeywordExtractor(Generator& generator) : generator_(generator) {}

    static std::string build_prompt(const std::string& query) {
        return "Extract the keywords (entities, concepts and themes) from the question below.\n"
               "Respond with a JSON list of strings only, for example [\"keyword one\", \"keyword two\"].\n\n"
               "Question: " +
               query + "\nKeywords:";
    }

    /// Pulls the first JSON array of strings out of a free-form response.
    static std::vector<std::string> parse_response(const std::string& text) {
        auto open = text.find('[');
        auto close = text.rfind(']');
        if (open == std::string::npos || close == std::string::npos || close < open) {
            throw Error(Errc::ProviderFailure, "keyword response has no JSON list");
        }
        nlohmann::json parsed;
        try {
            parsed = nlohmann::json::parse(text.substr(open, close - open + 1));
        } catch (const nlohmann::json::parse_error&) {
            throw Error(Errc::ProviderFailure, "keyword response is not valid JSON");
        }
        std::vector<std::string> out;
        for (const auto& item : parsed) {
            if (item.is_string()) out.push_back(item.get<std::string>());
        }
        return out;
    }

    std::vector<std::string> extract(const std::string& query) override {
        return parse_response(generator_.generate(build_prompt(query)).text);
    }

    std::string tag() const override { return "llm:" + generator_.tag(); }

private:
    Generator& generator_;
};

/// Provider keywords, deduplicated; falls back to stopword-filtered query
/// tokens when the provider fails or yields nothing, and to the whole query if
/// even that is empty.
inline KeywordSet extract_keywords(const std::string& query, KeywordExtractor& provider) {
    if (trim(query).empty()) throw Error(Errc::EmptyQuery, "query is empty");
    KeywordSet set;
    set.source_query = query;
    try {
        set.keywords = dedup_keywords(provider.extract(query));
    } catch (const Error& e) {
        if (e.code() != Errc::ProviderFailure) throw;
    }
    if (set.keywords.empty()) {
        set.used_fallback = true;
        set.keywords = fallback_keywords(query);
    }
    if (set.keywords.empty()) set.keywords.push_back(squeeze_spaces(query));
    return set;
}

enum class NodeSelectionMode { RoundRobin, GlobalPool };

struct NodeProvenance {
    std::string keyword;
    double similarity = 0.0;
};

struct RetrievedNodes {
    std::vector<NodeId> nodes;  // claim order
    std::map<NodeId, NodeProvenance> provenance;

    std::size_t size() const noexcept { return nodes.size(); }
    bool empty() const noexcept { return nodes.empty(); }

    /// Nodes by descending similarity, ties by ascending id.
    std::vector<NodeId> by_similarity() const {
        std::vector<NodeId> out = nodes;
        std::stable_sort(out.begin(), out.end(), [&](NodeId a, NodeId b) {
            double sa = provenance.at(a).similarity, sb = provenance.at(b).similarity;
            if (sa != sb) return sa > sb;
            return a < b;
        });
        return out;
    }
};

/// Selects up to `n` nodes. RoundRobin lets each keyword in turn claim its
/// best unclaimed node; GlobalPool claims by similarity over all
/// keyword/node pairs (ties: keyword order, then node id).
inline RetrievedNodes retrieve_nodes(const KeywordSet& keywords, const NodeEmbeddingIndex& index,
                                     Embedder& embedder, std::size_t n,
                                     NodeSelectionMode mode = NodeSelectionMode::RoundRobin) {
    if (n == 0) throw Error(Errc::InvalidArgument, "n must be >= 1");
    if (index.empty()) throw Error(Errc::EmptyIndex, "embedding index is empty");
    auto terms = dedup_keywords(keywords.keywords);
    if (terms.empty()) throw Error(Errc::EmptyQuery, "no keywords to retrieve with");

    auto vectors = embed(terms, embedder);
    std::vector<std::vector<ScoredNode>> rankings;
    rankings.reserve(terms.size());
    for (const auto& v : vectors) rankings.push_back(top_k_nodes(v, index, index.size()));

    RetrievedNodes out;
    const std::size_t target = std::min(n, index.size());
    auto claim = [&](std::size_t kw, const ScoredNode& s) {
        if (out.provenance.count(s.node)) return false;
        out.nodes.push_back(s.node);
        out.provenance.emplace(s.node, NodeProvenance{terms[kw], s.similarity});
        return true;
    };

    if (mode == NodeSelectionMode::RoundRobin) {
        std::vector<std::size_t> cursor(terms.size(), 0);
        bool progressed = true;
        while (out.size() < target && progressed) {
            progressed = false;
            for (std::size_t kw = 0; kw < terms.size() && out.size() < target; ++kw) {
                auto& pos = cursor[kw];
                while (pos < rankings[kw].size() && !claim(kw, rankings[kw][pos])) ++pos;
                if (pos < rankings[kw].size()) {
                    ++pos;
                    progressed = true;
                }
            }
        }
    } else {
        struct Candidate {
            std::size_t keyword;
            ScoredNode scored;
        };
        std::vector<Candidate> pool;
        for (std::size_t kw = 0; kw < rankings.size(); ++kw) {
            for (const auto& s : rankings[kw]) pool.push_back({kw, s});
        }
        std::stable_sort(pool.begin(), pool.end(), [](const Candidate& a, const Candidate& b) {
            if (a.scored.similarity != b.scored.similarity) return a.scored.similarity > b.scored.similarity;
            if (a.keyword != b.keyword) return a.keyword < b.keyword;
            return a.scored.node < b.scored.node;
        });
        for (const auto& c : pool) {
            if (out.size() >= target) break;
            claim(c.keyword, c.scored);
        }
    }
    return out;
}

}  // namespace pathrag
