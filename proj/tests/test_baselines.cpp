#include <pathrag/baselines.hpp>
#include <pathrag/synthetic.hpp>

#include <gtest/gtest.h>

#include "fixtures.hpp"

#include <set>

using namespace pathrag;

namespace {

RetrievedNodes retrieved(std::vector<std::pair<NodeId, double>> scored) {
    RetrievedNodes r;
    for (auto [v, s] : scored) {
        r.nodes.push_back(v);
        r.provenance[v] = {"kw", s};
    }
    return r;
}

std::vector<std::string> provenance(const FlatContext& ctx) {
    std::vector<std::string> out;
    for (const auto& s : ctx.segments) out.push_back(s.provenance);
    return out;
}

}  // namespace

TEST(Ego, DiamondFromA) {
    auto g = fixtures::diamond();
    auto ctx = ego_retrieve(g, retrieved({{0, 1.0}}), 8000);
    EXPECT_EQ(provenance(ctx), (std::vector<std::string>{"node:0", "edge:0", "edge:1", "node:1", "node:2"}));
    EXPECT_EQ(ctx.segments[0].text, "A: a-desc");
    EXPECT_EQ(ctx.segments[1].text, "A -> B: a to b");
    EXPECT_EQ(ctx.total_tokens, token_count(ctx.render()));
}

TEST(Ego, MostSimilarNodeFirstAndNoRepeats) {
    auto g = fixtures::diamond();
    auto ctx = ego_retrieve(g, retrieved({{0, 0.2}, {3, 0.9}}), 8000);
    auto prov = provenance(ctx);
    EXPECT_EQ(prov.front(), "node:3");
    EXPECT_EQ(std::set<std::string>(prov.begin(), prov.end()).size(), prov.size());
    EXPECT_EQ(prov.size(), 8u);  // 4 nodes + 4 edges
}

TEST(Ego, IsolatedNodeAndTinyBudget) {
    IndexingGraph g(true);
    g.add_node("Solo", "alone");
    g.add_node("Other", "x");
    g.freeze();
    auto ctx = ego_retrieve(g, retrieved({{0, 1.0}}), 8000);
    EXPECT_EQ(provenance(ctx), std::vector<std::string>{"node:0"});

    auto d = fixtures::diamond();
    auto tiny = ego_retrieve(d, retrieved({{0, 1.0}}), 1);
    EXPECT_TRUE(tiny.segments.empty());
    EXPECT_EQ(tiny.dropped, (std::vector<std::string>{"node:0", "edge:0", "edge:1", "node:1", "node:2"}));
    EXPECT_EQ(tiny.total_tokens, 0u);
}

TEST(Ego, TwinsCountAsTheirPrimary) {
    IndexingGraph g(true);
    g.add_node("x", "");
    g.add_node("y", "");
    g.add_edge(0, 1, "joins");
    g.freeze();
    auto ctx = ego_retrieve(g, retrieved({{0, 1.0}, {1, 0.5}}), 8000);
    EXPECT_EQ(provenance(ctx), (std::vector<std::string>{"node:0", "edge:0", "node:1"}));
}

TEST(Ego, CoversShortPathsBetweenRetrievedNodes) {
    std::mt19937_64 rng(73);
    for (int t = 0; t < 40; ++t) {
        auto g = fixtures::random_graph(rng, {3, 20, 0.05, 0.3, true});
        std::vector<std::pair<NodeId, double>> picks;
        std::vector<NodeId> ids;
        for (NodeId v = 0; v < g.node_count(); ++v) {
            if (rng() % 3 == 0) {
                picks.push_back({v, 0.01 * static_cast<double>(rng() % 100)});
                ids.push_back(v);
            }
        }
        if (ids.size() < 2) continue;
        auto ctx = ego_retrieve(g, retrieved(picks), static_cast<std::size_t>(-1));
        auto prov = provenance(ctx);
        std::set<std::string> have(prov.begin(), prov.end());
        PathRetrievalConfig cfg;
        cfg.flow = {0.7, 1e-6};
        cfg.top_k = 1000;
        for (const auto& p : collect_paths(g, ids, cfg).paths) {
            if (p.hops() > 2) continue;
            for (NodeId v : p.nodes) EXPECT_TRUE(have.count("node:" + std::to_string(v)));
            for (EdgeId e : p.edges) {
                EXPECT_TRUE(have.count("edge:" + std::to_string(g.edge(e).twin_of.value_or(e))));
            }
        }
    }
}

TEST(FlatChunks, SmallCases) {
    MockEmbedder m(16);
    std::vector<Chunk> one = {{0, "d", "only chunk", 3, 0}};
    std::vector<EmbeddingVector> vecs = {m.embed_one("only chunk")};
    auto ctx = flat_chunk_retrieve(one, vecs, m.embed_one("query"), 1);
    EXPECT_EQ(provenance(ctx), std::vector<std::string>{"chunk:0"});

    std::vector<Chunk> three = {{0, "d", "alpha", 2, 0}, {1, "d", "beta", 1, 0}, {2, "d", "gamma", 2, 0}};
    std::vector<EmbeddingVector> v3;
    for (const auto& c : three) v3.push_back(m.embed_one(c.text));
    auto all = flat_chunk_retrieve(three, v3, m.embed_one("beta"), 10);
    ASSERT_EQ(all.segments.size(), 3u);
    EXPECT_EQ(all.segments[0].provenance, "chunk:1");

    try {
        flat_chunk_retrieve({}, {}, m.embed_one("q"), 3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EmptyCorpus);
    }
}

TEST(FlatChunks, MatchesBruteForceSort) {
    std::mt19937_64 rng(20);
    MockEmbedder m(8);
    for (int t = 0; t < 50; ++t) {
        std::vector<Chunk> chunks;
        std::vector<EmbeddingVector> vecs;
        for (std::size_t i = 0; i < 20; ++i) {
            std::string text = fixtures::random_text(rng, 4) + " c" + std::to_string(i % 7);
            chunks.push_back({i, "d", text, token_count(text), 0});
            vecs.push_back(m.embed_one(text));
        }
        auto q = m.embed_one(fixtures::random_text(rng, 3) + "q");
        std::vector<std::pair<double, std::size_t>> brute;
        for (std::size_t i = 0; i < 20; ++i) {
            double dot = 0;
            for (std::size_t d = 0; d < 8; ++d) dot += q.values[d] * vecs[i].values[d];
            brute.push_back({-dot, i});  // unit vectors: cosine == dot
        }
        std::sort(brute.begin(), brute.end());
        auto ctx = flat_chunk_retrieve(chunks, vecs, q, 5);
        ASSERT_EQ(ctx.segments.size(), 5u);
        for (std::size_t i = 0; i < 5; ++i) {
            // Near-ties may swap under rounding; compare similarity, not id.
            double got = cosine_similarity(q, vecs[std::stoul(ctx.segments[i].provenance.substr(6))]);
            EXPECT_NEAR(got, -brute[i].first, 1e-12);
        }
    }
}

TEST(CompareTokenCost, OrderingOnSyntheticGraph) {
    auto g = synthetic::scale_free_graph(120, 3, 9);
    MockEmbedder m;
    auto index = build_node_index(g, m);
    MockKeywordExtractor kw;
    auto queries = synthetic::pair_queries(g, 6, 4);
    RetrievalConfig cfg;
    auto report = compare_token_cost(g, index, queries, cfg, kw, m);
    ASSERT_EQ(report.rows.size(), 3u);
    EXPECT_EQ(report.rows[0].method, "PathRAG");
    EXPECT_EQ(report.rows[1].method, "PathRAG-lt");
    EXPECT_EQ(report.rows[2].method, "ego-network");
    EXPECT_LE(report.row("PathRAG-lt").mean_tokens, report.row("PathRAG").mean_tokens);
    for (const auto& r : report.rows) EXPECT_EQ(r.per_query.size(), queries.size());
    EXPECT_EQ(report.prompts.size(), queries.size());
    auto again = compare_token_cost(g, index, queries, cfg, kw, m);
    EXPECT_EQ(again.to_json(), report.to_json());
    EXPECT_NE(report.to_table().find("ego-network"), std::string::npos);
    EXPECT_THROW(compare_token_cost(g, index, {}, cfg, kw, m), Error);
}

TEST(CompareTokenCost, ZeroEdgeGraphUsesFallbackContext) {
    IndexingGraph g(true);
    g.add_node("Wheat", "a cereal grain");
    g.add_node("Drought", "a long dry spell");
    g.add_node("Kansas", "a state");
    g.freeze();
    MockEmbedder m;
    auto index = build_node_index(g, m);
    MockKeywordExtractor kw;
    RetrievalConfig cfg;
    std::string q = "Did the Drought hurt Wheat?";
    auto report = compare_token_cost(g, index, {q}, cfg, kw, m);
    auto nodes = retrieve_nodes(extract_keywords(q, kw), index, m, cfg.n_nodes);
    auto fallback = assemble_fallback_prompt(q, g, nodes.by_similarity(), cfg.budget_tokens);
    EXPECT_EQ(report.row("PathRAG").per_query[0], token_count(fallback.context));
    EXPECT_GT(report.row("PathRAG").per_query[0], 0u);
}
