#include <pathrag/prompt_assembly.hpp>

#include <gtest/gtest.h>

#include "fixtures.hpp"

#include <algorithm>
#include <set>

using namespace pathrag;

namespace {

const std::string kQuery = "How is Alpha linked to Delta?";

TextualPath synthetic_path(double reliability, std::vector<NodeId> nodes, std::string text) {
    TextualPath t;
    t.reliability = reliability;
    t.source_path.nodes = std::move(nodes);
    t.source_path.edges.resize(t.source_path.nodes.size() - 1);
    t.source_path.reliability = reliability;
    t.text = std::move(text);
    t.token_estimate = token_count(t.text);
    return t;
}

std::vector<TextualPath> three_paths() {
    return {synthetic_path(0.9, {0, 1}, "path nine"), synthetic_path(0.5, {0, 2}, "path five"),
            synthetic_path(0.2, {0, 3}, "path two")};
}

std::vector<double> reliabilities(const std::vector<TextualPath>& paths) {
    std::vector<double> out;
    for (const auto& p : paths) out.push_back(p.reliability);
    return out;
}

std::vector<TextualPath> random_paths(std::mt19937_64& rng) {
    std::vector<TextualPath> out;
    std::uniform_real_distribution<double> rel(0.0, 3.0);
    std::size_t n = rng() % 16;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<NodeId> nodes{static_cast<NodeId>(i)};
        for (std::size_t h = 0, hops = 1 + rng() % 3; h < hops; ++h) nodes.push_back(static_cast<NodeId>(100 + rng() % 50));
        // Coarse reliabilities so ties occur and exercise the node tie-break.
        double r = std::round(rel(rng) * 4) / 4;
        out.push_back(synthetic_path(r, nodes, fixtures::random_text(rng, 30) + " p" + std::to_string(i)));
    }
    return out;
}

}  // namespace

TEST(Textualize, SingleEdgeJoin) {
    IndexingGraph g(false);
    g.add_node("A", "a-desc");
    g.add_node("B", "b-desc");
    g.add_edge(0, 1, "rel-desc");
    g.freeze();
    RelationalPath p{{0, 1}, {0}, 1.0};
    auto t = textualize_path(p, g);
    EXPECT_EQ(t.text, "A: a-desc | rel-desc | B: b-desc");
    EXPECT_EQ(t.token_estimate, token_count(t.text));
    EXPECT_EQ(t.source_path, p);
}

TEST(Textualize, EmptyRelationPlaceholder) {
    IndexingGraph g(false);
    g.add_node("A", "a-desc");
    g.add_node("B", "b-desc");
    g.add_edge(0, 1, "");
    g.freeze();
    auto t = textualize_path({{0, 1}, {0}, 1.0}, g);
    EXPECT_EQ(t.text, "A: a-desc | related to | B: b-desc");
}

TEST(Textualize, ThreeNodePathHasFiveSegments) {
    auto g = fixtures::diamond();
    auto t = textualize_path({{0, 1, 3}, {0, 2}, 0.92}, g);
    ASSERT_EQ(t.segments.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(t.segments[i].kind, i % 2 ? PathSegment::Kind::Edge : PathSegment::Kind::Node);
    }
    EXPECT_EQ(t.text, "A: a-desc | a to b | B: b-desc | b to d | D: d-desc");
}

TEST(Textualize, InvalidPathRejected) {
    auto g = fixtures::diamond();
    try {
        textualize_path({{0, 3}, {0}, 1.0}, g);  // edge 0 is A->B
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::UnknownElement);
    }
    EXPECT_THROW(textualize_path({{0, 1}, {17}, 1.0}, g), Error);
}

TEST(Assemble, AscendingPlacementMostReliableLast) {
    auto b = assemble_prompt(kQuery, three_paths(), 8000);
    EXPECT_EQ(reliabilities(b.included), (std::vector<double>{0.2, 0.5, 0.9}));
    EXPECT_TRUE(b.dropped.empty());
    EXPECT_EQ(b.prompt.rfind(kQuery, 0), 0u);
    auto p2 = b.prompt.find("path two"), p5 = b.prompt.find("path five"), p9 = b.prompt.find("path nine");
    EXPECT_LT(p2, p5);
    EXPECT_LT(p5, p9);
    EXPECT_TRUE(b.prompt.ends_with("Path 1 (reliability=0.900000):\npath nine"));
    EXPECT_EQ(b.total_tokens, token_count(b.prompt));
}

TEST(Assemble, BudgetDropsLeastReliable) {
    auto paths = three_paths();
    auto top_two = assemble_prompt(kQuery, {paths[0], paths[1]}, 8000);
    auto b = assemble_prompt(kQuery, paths, top_two.total_tokens);
    EXPECT_EQ(reliabilities(b.included), (std::vector<double>{0.5, 0.9}));
    ASSERT_EQ(b.dropped.size(), 1u);
    EXPECT_EQ(b.dropped[0].path.reliability, 0.2);
    EXPECT_EQ(b.dropped[0].reason, "budget");
    EXPECT_EQ(b.prompt, top_two.prompt);
}

TEST(Assemble, BudgetTooSmallAndEmptyQuery) {
    PromptTemplate tmpl;
    auto overhead = token_count(tmpl.render(kQuery, ""));
    try {
        assemble_prompt(kQuery, three_paths(), overhead - 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::BudgetTooSmall);
    }
    // Query fits, the best path does not.
    EXPECT_THROW(assemble_prompt(kQuery, three_paths(), overhead + 1), Error);
    EXPECT_THROW(assemble_prompt("  ", three_paths(), 8000), Error);
    auto empty = assemble_prompt(kQuery, {}, overhead);
    EXPECT_TRUE(empty.included.empty());
    EXPECT_EQ(empty.prompt, tmpl.render(kQuery, ""));
}

TEST(Assemble, FallbackUsesNodeChunksInSimilarityOrder) {
    auto g = fixtures::diamond();
    auto b = assemble_fallback_prompt(kQuery, g, {3, 0}, 8000);
    EXPECT_TRUE(b.fallback);
    EXPECT_TRUE(b.included.empty());
    EXPECT_EQ(b.fallback_nodes, (std::vector<NodeId>{3, 0}));
    EXPECT_EQ(b.prompt.rfind(kQuery, 0), 0u);
    EXPECT_LT(b.prompt.find("D: d-desc"), b.prompt.find("A: a-desc"));

    auto tight = assemble_fallback_prompt(kQuery, g, {3, 0}, token_count(assemble_fallback_prompt(kQuery, g, {3}, 8000).prompt));
    EXPECT_EQ(tight.fallback_nodes, std::vector<NodeId>{3});
    EXPECT_EQ(tight.dropped_nodes, std::vector<NodeId>{0});

    auto none = assemble_fallback_prompt(kQuery, g, {}, 8000);
    EXPECT_EQ(none.prompt, PromptTemplate().render(kQuery, ""));
}

TEST(TokenCount, Examples) {
    EXPECT_EQ(token_count(""), 0u);
    EXPECT_EQ(token_count("abcdefgh"), 2u);
    EXPECT_EQ(token_count("abcdefghi"), 3u);
}

TEST(TokenCount, SubadditiveUnderConcatenation) {
    std::mt19937_64 rng(12);
    for (int t = 0; t < 1000; ++t) {
        std::string a(rng() % 50, 'x'), b = fixtures::random_text(rng, 10);
        auto whole = token_count(a + b);
        EXPECT_LE(whole, token_count(a) + token_count(b) + 1);
        EXPECT_GE(whole, std::max(token_count(a), token_count(b)));
        EXPECT_EQ(whole, (a.size() + b.size() + 3) / 4);
    }
}

TEST(Assemble, RandomSetsRespectOrderingAndBudget) {
    std::mt19937_64 rng(500);
    for (int t = 0; t < 300; ++t) {
        auto paths = random_paths(rng);
        std::size_t budget = 60 + rng() % 500;
        PromptBundle b;
        try {
            b = assemble_prompt(kQuery, paths, budget);
        } catch (const Error& e) {
            ASSERT_EQ(e.code(), Errc::BudgetTooSmall);
            continue;
        }
        EXPECT_LE(b.total_tokens, budget);
        EXPECT_EQ(b.included.size() + b.dropped.size(), paths.size());
        for (std::size_t i = 1; i < b.included.size(); ++i) {
            EXPECT_TRUE(ranks_before(b.included[i].source_path, b.included[i - 1].source_path));
        }
        if (!b.included.empty()) {
            double best = 0;
            for (const auto& p : b.included) best = std::max(best, p.reliability);
            EXPECT_EQ(b.included.back().reliability, best);
            EXPECT_TRUE(b.prompt.ends_with(b.included.back().text));
        }
        for (const auto& d : b.dropped) {
            for (const auto& kept : b.included) EXPECT_TRUE(ranks_before(kept.source_path, d.path.source_path));
        }

        auto shuffled = paths;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        EXPECT_EQ(assemble_prompt(kQuery, shuffled, budget).prompt, b.prompt);
    }
}

TEST(Assemble, RandomOrderKeepsSelectionAndIsSeeded) {
    std::vector<TextualPath> paths;
    for (int i = 0; i < 8; ++i) paths.push_back(synthetic_path(0.1 * (i + 1), {NodeId(i), 99}, "p" + std::to_string(i)));
    auto asc = assemble_prompt(kQuery, paths, 8000);
    AssemblyOptions random;
    random.order = OrderMode::Random;
    random.seed = 3;
    auto r1 = assemble_prompt(kQuery, paths, 8000, {}, random);
    auto r2 = assemble_prompt(kQuery, paths, 8000, {}, random);
    EXPECT_EQ(r1.prompt, r2.prompt);
    EXPECT_NE(r1.prompt, asc.prompt);
    auto sorted = reliabilities(r1.included);
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(sorted, reliabilities(asc.included));
}

TEST(Assemble, HopFirstPlacesShortPathsFirst) {
    std::vector<TextualPath> paths = {synthetic_path(0.9, {0, 1, 2, 3}, "three hops"),
                                      synthetic_path(0.5, {0, 1}, "one hop strong"),
                                      synthetic_path(0.3, {0, 2}, "one hop weak"),
                                      synthetic_path(0.2, {0, 1, 2}, "two hops")};
    AssemblyOptions opts;
    opts.order = OrderMode::HopFirst;
    auto b = assemble_prompt(kQuery, paths, 8000, {}, opts);
    EXPECT_EQ(reliabilities(b.included), (std::vector<double>{0.3, 0.5, 0.2, 0.9}));
}

TEST(Assemble, FlatFormatDeduplicatesElements) {
    auto g = fixtures::diamond();
    std::vector<TextualPath> paths = {textualize_path({{0, 1, 3}, {0, 2}, 0.92}, g),
                                      textualize_path({{0, 2, 3}, {1, 3}, 0.91}, g)};
    AssemblyOptions opts;
    opts.format = FormatMode::Flat;
    auto b = assemble_prompt(kQuery, paths, 8000, {}, opts);
    auto count = [&](const std::string& s) {
        std::size_t n = 0;
        for (auto p = b.context.find(s); p != std::string::npos; p = b.context.find(s, p + 1)) ++n;
        return n;
    };
    EXPECT_EQ(count("A: a-desc"), 1u);
    EXPECT_EQ(count("D: d-desc"), 1u);
    EXPECT_EQ(count("A -> B: a to b"), 1u);
    EXPECT_EQ(b.context.rfind("Entities:\n", 0), 0u);
    EXPECT_NE(b.context.find("\nRelationships:\n"), std::string::npos);
    EXPECT_EQ(b.included.size(), 2u);
}

TEST(Template, ValidationAndRendering) {
    EXPECT_THROW(PromptTemplate("no placeholders"), Error);
    EXPECT_THROW(PromptTemplate("{paths} then {query}"), Error);
    EXPECT_THROW(PromptTemplate("{query}{query}{paths}"), Error);
    PromptTemplate t("Q: {query}\nP:\n{paths}\n");
    EXPECT_EQ(t.render("why", "x | y"), "Q: why\nP:\nx | y\n");
    auto b = assemble_prompt("why", three_paths(), 8000, t);
    EXPECT_EQ(b.prompt.rfind("Q: why\n", 0), 0u);
}

TEST(FormatReliability, SixDecimals) {
    EXPECT_EQ(format_reliability(0.92), "0.920000");
    EXPECT_EQ(format_reliability(1.35), "1.350000");
}
