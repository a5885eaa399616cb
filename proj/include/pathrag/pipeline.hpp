#pragma once

// End-to-end query: keywords -> nodes -> paths -> prompt -> generator.

#include <pathrag/config.hpp>
#include <pathrag/embedding_index.hpp>
#include <pathrag/error.hpp>
#include <pathrag/graph_store.hpp>
#include <pathrag/node_retrieval.hpp>
#include <pathrag/path_retrieval.hpp>
#include <pathrag/prompt_assembly.hpp>
#include <pathrag/providers.hpp>

#include <nlohmann/json.hpp>

#include <string>
#include <utility>
#include <vector>

namespace pathrag {

inline constexpr const char* kKeywordStage = "keyword stage";
inline constexpr const char* kNodeStage = "node retrieval stage";
inline constexpr const char* kPathStage = "path retrieval stage";
inline constexpr const char* kPromptStage = "prompt stage";
inline constexpr const char* kGenerationStage = "generation stage";

/// Runs `fn`, labelling any library error that escapes it with `stage`.
template <typename Fn>
decltype(auto) in_stage(const char* stage, Fn&& fn) {
    try {
        return fn();
    } catch (Error& e) {
        if (e.stage().empty()) e.with_stage(stage);
        throw;
    }
}

struct RetrievalOutcome {
    KeywordSet keywords;
    RetrievedNodes nodes;
    PathRetrieval paths;
    PromptBundle bundle;
};

struct QueryOutcome {
    RetrievalOutcome retrieval;
    GenerationResult answer;
    nlohmann::ordered_json diagnostics;
};

/// Everything up to (not including) generation. An empty graph or a node set
/// with no connecting paths produces the node-chunk fallback prompt.
inline RetrievalOutcome retrieve_context(const std::string& query, const IndexingGraph& graph,
                                         const NodeEmbeddingIndex& index, const RetrievalConfig& config,
                                         KeywordExtractor& keywords, Embedder& embedder) {
    RetrievalOutcome out;
    out.keywords = in_stage(kKeywordStage, [&] { return extract_keywords(query, keywords); });
    if (!index.empty()) {
        out.nodes = in_stage(kNodeStage, [&] {
            return retrieve_nodes(out.keywords, index, embedder, config.n_nodes, config.node_mode);
        });
        out.paths = in_stage(kPathStage, [&] { return collect_paths(graph, out.nodes.nodes, config.path_config()); });
    }
    out.bundle = in_stage(kPromptStage, [&] {
        auto tmpl = config.prompt_template();
        if (out.paths.paths.empty()) {
            return assemble_fallback_prompt(query, graph, out.nodes.by_similarity(), config.budget_tokens, tmpl);
        }
        std::vector<TextualPath> textual;
        textual.reserve(out.paths.paths.size());
        for (const auto& p : out.paths.paths) textual.push_back(textualize_path(p, graph));
        return assemble_prompt(query, std::move(textual), config.budget_tokens, tmpl, config.assembly_options());
    });
    return out;
}

inline nlohmann::ordered_json path_json(const RelationalPath& p, const IndexingGraph& graph) {
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    for (NodeId v : p.nodes) nodes.push_back(graph.node(v).identifier);
    return {{"nodes", nodes}, {"node_ids", p.nodes}, {"edge_ids", p.edges}, {"hops", p.hops()},
            {"reliability", p.reliability}};
}

/// Deterministic diagnostics record (no timings) for a retrieval run.
inline nlohmann::ordered_json diagnostics_json(const std::string& query, const RetrievalOutcome& r,
                                               const IndexingGraph& graph, const RetrievalConfig& config) {
    using nlohmann::ordered_json;
    ordered_json nodes = ordered_json::array();
    for (NodeId v : r.nodes.nodes) {
        const auto& prov = r.nodes.provenance.at(v);
        nodes.push_back({{"id", v}, {"identifier", graph.node(v).identifier}, {"keyword", prov.keyword},
                         {"similarity", prov.similarity}});
    }
    ordered_json props = ordered_json::array();
    for (const auto& s : r.paths.propagations) {
        props.push_back({{"source", s.source}, {"settled", s.settled}, {"pruned", s.pruned},
                         {"alive_per_layer", s.frontier_history}});
    }
    ordered_json truncated = ordered_json::array();
    for (const auto& t : r.paths.truncated_pairs) {
        truncated.push_back({{"source", t.source}, {"target", t.target}, {"expansions", t.expansions}});
    }
    ordered_json scored = ordered_json::array();
    for (const auto& p : r.paths.paths) scored.push_back(path_json(p, graph));
    ordered_json included = ordered_json::array();
    for (const auto& t : r.bundle.included) {
        included.push_back({{"reliability", t.reliability}, {"tokens", t.token_estimate}, {"text", t.text}});
    }
    ordered_json dropped = ordered_json::array();
    for (const auto& d : r.bundle.dropped) {
        dropped.push_back({{"reliability", d.path.reliability}, {"reason", d.reason}});
    }
    return {{"query", query},
            {"keywords", r.keywords.keywords},
            {"keyword_fallback", r.keywords.used_fallback},
            {"retrieved_nodes", nodes},
            {"propagations", props},
            {"truncated_pairs", truncated},
            {"candidate_paths", r.paths.candidates},
            {"paths", scored},
            {"prompt",
             {{"fallback", r.bundle.fallback},
              {"included", included},
              {"dropped", dropped},
              {"fallback_nodes", r.bundle.fallback_nodes},
              {"total_tokens", r.bundle.total_tokens},
              {"budget_tokens", config.budget_tokens}}},
            {"config", config.to_json()}};
}

/// Full pipeline; errors carry the label of the stage that raised them.
inline QueryOutcome run_query(const std::string& query, const IndexingGraph& graph, const NodeEmbeddingIndex& index,
                              const RetrievalConfig& config, KeywordExtractor& keywords, Embedder& embedder,
                              Generator& generator) {
    QueryOutcome out;
    out.retrieval = retrieve_context(query, graph, index, config, keywords, embedder);
    out.answer = in_stage(kGenerationStage, [&] { return generator.generate(out.retrieval.bundle.prompt); });
    out.diagnostics = diagnostics_json(query, out.retrieval, graph, config);
    out.diagnostics["answer"] = out.answer.text;
    return out;
}

}  // namespace pathrag
