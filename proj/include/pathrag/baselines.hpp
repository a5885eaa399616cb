#pragma once

// Reference retrievers for token-cost comparisons: the ego-network of the
// retrieved nodes (neighborhood-style retrieval) and flat top-k chunks.

#include <pathrag/config.hpp>
#include <pathrag/embedding_index.hpp>
#include <pathrag/graph_store.hpp>
#include <pathrag/ingestion.hpp>
#include <pathrag/node_retrieval.hpp>
#include <pathrag/path_retrieval.hpp>
#include <pathrag/pipeline.hpp>
#include <pathrag/prompt_assembly.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace pathrag {

struct FlatSegment {
    std::string text;
    std::size_t token_estimate = 0;
    std::string provenance;  // "node:<id>", "edge:<id>" or "chunk:<id>"
};

struct FlatContext {
    std::vector<FlatSegment> segments;
    std::vector<std::string> dropped;  // provenance of segments cut by the budget
    std::size_t total_tokens = 0;

    std::string render() const {
        std::string out;
        for (std::size_t i = 0; i < segments.size(); ++i) {
            if (i) out += '\n';
            out += segments[i].text;
        }
        return out;
    }
};

namespace detail {

inline void fit_to_budget(FlatContext& ctx, std::size_t budget, const TokenCounter& counter) {
    ctx.total_tokens = counter(ctx.render());
    while (!ctx.segments.empty() && ctx.total_tokens > budget) {
        ctx.dropped.insert(ctx.dropped.begin(), ctx.segments.back().provenance);
        ctx.segments.pop_back();
        ctx.total_tokens = counter(ctx.render());
    }
}

inline std::string node_text(const Node& n) {
    std::string chunk = squeeze_spaces(n.chunk);
    return chunk.empty() ? n.identifier : n.identifier + ": " + chunk;
}

}  // namespace detail

/// For each retrieved node (most similar first, ties by id): its chunk, the
/// chunks of its incident edges, then its immediate neighbors' chunks. Each
/// element appears once; reverse twins count as their primary edge. Material
/// from the least similar nodes is cut first when over budget.
inline FlatContext ego_retrieve(const IndexingGraph& graph, const RetrievedNodes& retrieved, std::size_t budget,
                                const TokenCounter& counter = default_token_counter()) {
    FlatContext ctx;
    std::set<NodeId> seen_nodes;
    std::set<EdgeId> seen_edges;
    auto add_node = [&](NodeId v) {
        if (!seen_nodes.insert(v).second) return;
        auto text = detail::node_text(graph.node(v));
        ctx.segments.push_back({text, counter(text), "node:" + std::to_string(v)});
    };
    auto add_edge = [&](EdgeId id) {
        const Edge& e = graph.edge(id);
        EdgeId key = e.twin_of.value_or(e.id);
        if (!seen_edges.insert(key).second) return;
        const Edge& primary = graph.edge(key);
        std::string rel = squeeze_spaces(primary.chunk);
        auto text = graph.node(primary.src).identifier + " -> " + graph.node(primary.dst).identifier + ": " +
                    (rel.empty() ? std::string(kEmptyRelation) : rel);
        ctx.segments.push_back({text, counter(text), "edge:" + std::to_string(key)});
    };
    for (NodeId v : retrieved.by_similarity()) {
        add_node(v);
        std::set<NodeId> neighbors;
        for (auto dir : {Direction::Out, Direction::In}) {
            for (const Adjacent& a : graph.neighbors(v, dir)) {
                add_edge(a.edge);
                neighbors.insert(a.node);
            }
        }
        for (NodeId u : neighbors) add_node(u);
    }
    detail::fit_to_budget(ctx, budget, counter);
    return ctx;
}

struct ScoredChunk {
    std::size_t index = 0;
    double similarity = 0.0;
};

/// Top-k chunks by cosine similarity (descending, ties by chunk id).
inline FlatContext flat_chunk_retrieve(const std::vector<Chunk>& chunks, std::span<const EmbeddingVector> chunk_vectors,
                                       const EmbeddingVector& query_vec, std::size_t k,
                                       std::size_t budget = static_cast<std::size_t>(-1),
                                       const TokenCounter& counter = default_token_counter()) {
    if (chunks.empty()) throw Error(Errc::EmptyCorpus, "no chunks to retrieve from");
    if (chunks.size() != chunk_vectors.size()) throw Error(Errc::InvalidArgument, "one embedding per chunk required");
    if (k == 0) throw Error(Errc::InvalidArgument, "k must be >= 1");
    std::vector<ScoredChunk> scored;
    for (std::size_t i = 0; i < chunks.size(); ++i) scored.push_back({i, cosine_similarity(query_vec, chunk_vectors[i])});
    std::stable_sort(scored.begin(), scored.end(), [&](const ScoredChunk& a, const ScoredChunk& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return chunks[a.index].chunk_id < chunks[b.index].chunk_id;
    });
    scored.resize(std::min(k, scored.size()));
    FlatContext ctx;
    for (const auto& s : scored) {
        const Chunk& c = chunks[s.index];
        ctx.segments.push_back({c.text, counter(c.text), "chunk:" + std::to_string(c.chunk_id)});
    }
    detail::fit_to_budget(ctx, budget, counter);
    return ctx;
}

// ---------------------------------------------------------------------------
// Token-cost comparison

struct CostRow {
    std::string method;
    std::size_t n_nodes = 0;
    std::size_t top_k = 0;  // 0 for the ego baseline
    std::vector<std::size_t> per_query;
    double mean_tokens = 0.0;
};

struct CostReport {
    std::vector<CostRow> rows;  // PathRAG, PathRAG-lt, ego-network
    double reduction_vs_ego = 0.0;     // 1 - PathRAG / ego
    double lt_reduction_vs_ego = 0.0;  // 1 - PathRAG-lt / ego
    nlohmann::ordered_json config;
    std::vector<std::string> prompts;  // PathRAG prompts, one per query

    const CostRow& row(std::string_view method) const {
        for (const auto& r : rows) {
            if (r.method == method) return r;
        }
        throw Error(Errc::InvalidArgument, "no row " + std::string(method));
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json methods = nlohmann::ordered_json::array();
        for (const auto& r : rows) {
            methods.push_back({{"method", r.method}, {"n_nodes", r.n_nodes}, {"top_k", r.top_k},
                               {"mean_context_tokens", r.mean_tokens}, {"per_query", r.per_query}});
        }
        return {{"methods", methods},
                {"pathrag_reduction_vs_ego", reduction_vs_ego},
                {"pathrag_lt_reduction_vs_ego", lt_reduction_vs_ego},
                {"config", config}};
    }

    std::string to_table() const {
        std::string out;
        char line[160];
        std::snprintf(line, sizeof(line), "%-14s %8s %8s %20s\n", "method", "N", "K", "mean context tokens");
        out += line;
        for (const auto& r : rows) {
            std::string k = r.top_k ? std::to_string(r.top_k) : "-";
            std::snprintf(line, sizeof(line), "%-14s %8zu %8s %20.1f\n", r.method.c_str(), r.n_nodes, k.c_str(),
                          r.mean_tokens);
            out += line;
        }
        std::snprintf(line, sizeof(line), "PathRAG vs ego-network: %.2f%% fewer tokens; PathRAG-lt: %.2f%%\n",
                      100.0 * reduction_vs_ego, 100.0 * lt_reduction_vs_ego);
        out += line;
        return out;
    }
};

/// Mean retrieval-context tokens per query for PathRAG (config), PathRAG-lt
/// (N=20, K=5) and the ego-network baseline over the N nodes PathRAG used.
/// The context is what fills {paths} in the prompt (or the ego context),
/// all bounded by config.budget_tokens.
inline CostReport compare_token_cost(const IndexingGraph& graph, const NodeEmbeddingIndex& index,
                                     const std::vector<std::string>& queries, const RetrievalConfig& config,
                                     KeywordExtractor& keywords, Embedder& embedder,
                                     const TokenCounter& counter = default_token_counter()) {
    if (queries.empty()) throw Error(Errc::InvalidArgument, "at least one query is required");
    RetrievalConfig lt = config;
    lt.n_nodes = 20;
    lt.top_k = 5;

    CostReport report;
    report.config = config.to_json();
    CostRow full{"PathRAG", config.n_nodes, config.top_k, {}, 0.0};
    CostRow light{"PathRAG-lt", lt.n_nodes, lt.top_k, {}, 0.0};
    CostRow ego{"ego-network", config.n_nodes, 0, {}, 0.0};
    for (const auto& q : queries) {
        auto r = retrieve_context(q, graph, index, config, keywords, embedder);
        full.per_query.push_back(counter(r.bundle.context));
        report.prompts.push_back(r.bundle.prompt);
        auto rl = retrieve_context(q, graph, index, lt, keywords, embedder);
        light.per_query.push_back(counter(rl.bundle.context));
        ego.per_query.push_back(ego_retrieve(graph, r.nodes, config.budget_tokens, counter).total_tokens);
    }
    for (CostRow* row : {&full, &light, &ego}) {
        double sum = 0.0;
        for (auto t : row->per_query) sum += static_cast<double>(t);
        row->mean_tokens = sum / static_cast<double>(row->per_query.size());
    }
    if (ego.mean_tokens > 0.0) {
        report.reduction_vs_ego = 1.0 - full.mean_tokens / ego.mean_tokens;
        report.lt_reduction_vs_ego = 1.0 - light.mean_tokens / ego.mean_tokens;
    }
    report.rows = {full, light, ego};
    return report;
}

}  // namespace pathrag
