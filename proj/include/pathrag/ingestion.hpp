#pragma once

// Corpus -> indexing graph: sentence-aligned chunking, a pluggable
// entity/relation extractor, and serialized merging into the graph store.

#include <pathrag/concurrency.hpp>
#include <pathrag/error.hpp>
#include <pathrag/graph_store.hpp>
#include <pathrag/providers.hpp>
#include <pathrag/text.hpp>

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace pathrag {

struct Chunk {
    std::size_t chunk_id = 0;
    std::string doc_id;
    std::string text;
    std::size_t token_estimate = 0;
    // Leading bytes of `text` repeated from the previous chunk of the same document.
    std::size_t overlap_prefix = 0;
};

struct ChunkingOptions {
    std::size_t target_tokens = 1200;
    std::size_t overlap_tokens = 100;
};

/// Packs whole sentences into chunks of at most `target_tokens`; a sentence
/// longer than the target becomes a chunk of its own. Each chunk after the
/// first re-reads up to `overlap_tokens` worth of trailing sentences of its
/// predecessor, recorded in `overlap_prefix`.
inline std::vector<Chunk> chunk_document(std::string_view text, std::size_t target_tokens,
                                         std::size_t overlap_tokens, std::string_view doc_id = {},
                                         const TokenCounter& counter = default_token_counter()) {
    if (!(target_tokens > overlap_tokens)) {
        throw Error(Errc::InvalidArgument, "target_tokens must exceed overlap_tokens");
    }
    if (trim(text).empty()) throw Error(Errc::EmptyDocument, "document is empty");

    auto sentences = split_sentences(text);
    std::vector<Chunk> chunks;
    std::size_t i = 0;
    std::size_t carried_from = 0;  // first sentence index re-read as overlap
    while (i < sentences.size()) {
        std::size_t begin = carried_from;
        auto span_text = [&](std::size_t from, std::size_t to) {
            const char* start = sentences[from].data();
            const char* end = sentences[to - 1].data() + sentences[to - 1].size();
            return std::string_view(start, static_cast<std::size_t>(end - start));
        };
        // Shrink the overlap until at least the next sentence fits.
        while (begin < i && counter(span_text(begin, i + 1)) > target_tokens) ++begin;
        std::size_t end = i + 1;
        while (end < sentences.size() && counter(span_text(begin, end + 1)) <= target_tokens) ++end;

        Chunk c;
        c.chunk_id = chunks.size();
        c.doc_id = std::string(doc_id);
        c.text = std::string(span_text(begin, end));
        c.token_estimate = counter(c.text);
        c.overlap_prefix = begin < i ? span_text(begin, i).size() : 0;
        chunks.push_back(std::move(c));

        // Trailing sentences of this chunk that fit in the overlap budget.
        carried_from = end;
        while (overlap_tokens > 0 && carried_from > begin &&
               counter(span_text(carried_from - 1, end)) <= overlap_tokens) {
            --carried_from;
        }
        i = end;
    }
    return chunks;
}

// ---------------------------------------------------------------------------
// Extraction

struct ExtractedEntity {
    std::string name;
    std::string description;
};

struct ExtractedRelation {
    std::string src;
    std::string dst;
    std::string description;
};

struct Extraction {
    std::vector<ExtractedEntity> entities;
    std::vector<ExtractedRelation> relations;
    std::size_t unparsed_lines = 0;
};

class Extractor {
public:
    virtual ~Extractor() = default;
    virtual Extraction extract(const Chunk& chunk) = 0;
    virtual std::string tag() const = 0;
};

/// Offline rule-based extractor. Entities are runs of capitalized words
/// (runs made only of stopwords such as "The" are skipped); each sentence
/// emits a relation for every ordered pair of distinct entities in order of
/// appearance, described by the words between them.
class MockExtractor final : public Extractor {
public:
    Extraction extract(const Chunk& chunk) override {
        Extraction out;
        std::unordered_map<std::string, std::size_t> entity_slot;
        for (std::string_view sentence : split_sentences(chunk.text)) {
            std::string_view s = trim(sentence);
            if (s.empty()) continue;
            struct Mention {
                std::string name;
                std::size_t begin, end;
            };
            std::vector<Mention> mentions;
            auto tokens = word_tokens(s);
            std::size_t i = 0;
            while (i < tokens.size()) {
                if (!is_capitalized(tokens[i].text)) {
                    ++i;
                    continue;
                }
                std::size_t j = i + 1;
                while (j < tokens.size() && is_capitalized(tokens[j].text) &&
                       tokens[j].offset == tokens[j - 1].offset + tokens[j - 1].text.size() + 1 &&
                       s[tokens[j].offset - 1] == ' ') {
                    ++j;
                }
                bool all_stop = true;
                for (std::size_t k = i; k < j; ++k) all_stop = all_stop && is_stopword(tokens[k].text);
                if (!all_stop) {
                    // Drop leading stopwords ("The Acme" -> "Acme").
                    std::size_t first = i;
                    while (is_stopword(tokens[first].text)) ++first;
                    std::size_t b = tokens[first].offset;
                    std::size_t e = tokens[j - 1].offset + tokens[j - 1].text.size();
                    mentions.push_back({std::string(s.substr(b, e - b)), b, e});
                }
                i = j;
            }
            // Distinct entities of the sentence, first mention wins.
            std::vector<Mention> distinct;
            for (auto& m : mentions) {
                bool dup = std::any_of(distinct.begin(), distinct.end(),
                                       [&](const Mention& d) { return identity_key(d.name) == identity_key(m.name); });
                if (!dup) distinct.push_back(m);
            }
            for (const auto& m : distinct) {
                auto key = identity_key(m.name);
                auto [it, inserted] = entity_slot.emplace(key, out.entities.size());
                if (inserted) {
                    out.entities.push_back({m.name, std::string(s)});
                } else {
                    auto& desc = out.entities[it->second].description;
                    if (desc.find(s) == std::string::npos) desc += " " + std::string(s);
                }
            }
            for (std::size_t a = 0; a < distinct.size(); ++a) {
                for (std::size_t b = a + 1; b < distinct.size(); ++b) {
                    std::string phrase;
                    if (distinct[b].begin > distinct[a].end) {
                        std::string between;
                        for (const auto& tok : word_tokens(s.substr(distinct[a].end, distinct[b].begin - distinct[a].end))) {
                            if (!between.empty()) between += ' ';
                            between += tok.text;
                        }
                        phrase = between;
                    }
                    if (phrase.empty()) phrase = std::string(kRelatedTo);
                    out.relations.push_back({distinct[a].name, distinct[b].name, phrase});
                }
            }
        }
        return out;
    }

    std::string tag() const override { return "mock"; }

private:
    static constexpr std::string_view kRelatedTo = "related to";
};

/// Tuple-style extraction through a generator. The response is read line by
/// line; ("entity"|name|description) and ("relation"|src|dst|description)
/// records are kept, anything else is counted in `unparsed_lines`.
class LlmExtractor final : public Extractor {
public:
    explicit LlmExtractor(Generator& generator) : generator_(generator) {}

    static std::string build_prompt(const Chunk& chunk) {
        return "Identify the entities in the text below and the relationships between them.\n"
               "Output one record per line and nothing else:\n"
               "(\"entity\"|<entity name>|<short description of the entity>)\n"
               "(\"relation\"|<source entity>|<target entity>|<description of how they are related>)\n"
               "Every relation must connect two entities listed as entity records.\n\n"
               "Text:\n" +
               chunk.text + "\n\nRecords:\n";
    }

    static Extraction parse_response(std::string_view response) {
        Extraction out;
        std::istringstream lines{std::string(response)};
        std::string line;
        while (std::getline(lines, line)) {
            std::string_view l = trim(line);
            if (l.empty()) continue;
            if (l.front() != '(' || l.back() != ')') {
                ++out.unparsed_lines;
                continue;
            }
            l = l.substr(1, l.size() - 2);
            std::vector<std::string> fields;
            std::size_t start = 0;
            while (true) {
                auto bar = l.find('|', start);
                std::string_view f = trim(l.substr(start, bar == std::string_view::npos ? std::string_view::npos : bar - start));
                if (f.size() >= 2 && f.front() == '"' && f.back() == '"') f = f.substr(1, f.size() - 2);
                fields.emplace_back(trim(f));
                if (bar == std::string_view::npos) break;
                start = bar + 1;
            }
            auto kind = fold_case(fields[0]);
            if (kind == "entity" && fields.size() == 3 && !fields[1].empty()) {
                out.entities.push_back({fields[1], fields[2]});
            } else if (kind == "relation" && fields.size() == 4 && !fields[1].empty() && !fields[2].empty()) {
                out.relations.push_back({fields[1], fields[2], fields[3]});
            } else {
                ++out.unparsed_lines;
            }
        }
        return out;
    }

    Extraction extract(const Chunk& chunk) override {
        return parse_response(generator_.generate(build_prompt(chunk)).text);
    }

    std::string tag() const override { return "llm:" + generator_.tag(); }

private:
    Generator& generator_;
};

struct IngestionReport {
    std::size_t documents = 0;
    std::size_t chunks = 0;
    std::size_t entities_emitted = 0;
    std::size_t relations_emitted = 0;
    std::vector<std::size_t> skipped_chunks;  // extractor failures
    std::size_t dropped_relations = 0;
    std::size_t unparsed_lines = 0;
    std::vector<std::string> warnings;
};

struct IngestionResult {
    IndexingGraph graph;
    IngestionReport report;
};

/// Runs the extractor over every chunk (up to `threads` at once) and merges
/// the extractions into one frozen graph in chunk order.
inline IngestionResult extract_graph(const std::vector<Chunk>& chunks, Extractor& extractor, bool bidirectional = true,
                                     std::size_t threads = 1) {
    std::vector<std::optional<Extraction>> results(chunks.size());
    std::vector<std::string> failures(chunks.size());
    parallel_for(chunks.size(), threads, [&](std::size_t i) {
        try {
            results[i] = extractor.extract(chunks[i]);
        } catch (const std::exception& e) {
            failures[i] = e.what();
        }
    });

    IngestionResult out{IndexingGraph(bidirectional), {}};
    auto& report = out.report;
    auto& graph = out.graph;
    report.chunks = chunks.size();
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        const Chunk& chunk = chunks[i];
        if (!results[i]) {
            report.skipped_chunks.push_back(chunk.chunk_id);
            report.warnings.push_back("ExtractorFailure(chunk " + std::to_string(chunk.chunk_id) + "): " + failures[i]);
            spdlog::warn("extractor failed on chunk {} ({}): {}", chunk.chunk_id, chunk.doc_id, failures[i]);
            continue;
        }
        const Extraction& ex = *results[i];
        report.entities_emitted += ex.entities.size();
        report.relations_emitted += ex.relations.size();
        report.unparsed_lines += ex.unparsed_lines;
        for (const auto& ent : ex.entities) {
            if (trim(ent.name).empty()) continue;
            graph.add_node(ent.name, ent.description);
        }
        for (const auto& rel : ex.relations) {
            auto src = graph.find_node(rel.src);
            auto dst = graph.find_node(rel.dst);
            if (!src || !dst) {
                ++report.dropped_relations;
                report.warnings.push_back("DanglingRelation(chunk " + std::to_string(chunk.chunk_id) + "): " + rel.src +
                                          " -> " + rel.dst);
                spdlog::warn("dropping relation {} -> {}: endpoint never defined", rel.src, rel.dst);
                continue;
            }
            if (*src == *dst) {
                ++report.dropped_relations;
                report.warnings.push_back("SelfLoop(chunk " + std::to_string(chunk.chunk_id) + "): " + rel.src);
                continue;
            }
            graph.add_edge(*src, *dst, rel.description);
        }
    }
    graph.freeze();
    return out;
}

struct Document {
    std::string doc_id;
    std::string text;
};

/// Reads every *.txt file of `dir` (sorted by file name).
inline std::vector<Document> load_corpus(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) {
        throw Error(Errc::IoFailure, "corpus directory " + dir.string() + " not found");
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<Document> docs;
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        if (!in) throw Error(Errc::IoFailure, "cannot read " + f.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        docs.push_back({f.filename().string(), ss.str()});
    }
    if (docs.empty()) throw Error(Errc::EmptyCorpus, "no documents in " + dir.string());
    return docs;
}

/// Chunks every document; chunk ids are global and follow document order.
/// Empty documents are skipped.
inline std::vector<Chunk> chunk_corpus(const std::vector<Document>& docs, const ChunkingOptions& options,
                                       const TokenCounter& counter = default_token_counter()) {
    std::vector<Chunk> all;
    for (const auto& doc : docs) {
        if (trim(doc.text).empty()) continue;
        for (auto& c : chunk_document(doc.text, options.target_tokens, options.overlap_tokens, doc.doc_id, counter)) {
            c.chunk_id = all.size();
            all.push_back(std::move(c));
        }
    }
    return all;
}

}  // namespace pathrag
