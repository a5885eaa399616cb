#include <pathrag/embedding_index.hpp>

#include <gtest/gtest.h>

#include "fixtures.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace pathrag;

namespace {

EmbeddingVector vec(std::initializer_list<double> v) { return EmbeddingVector{std::vector<double>(v)}; }

// Deliberately naive reference: dot / (|a| |b|) with separately computed norms.
double reference_cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    long double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        dot += static_cast<long double>(a.values[i]) * b.values[i];
        na += static_cast<long double>(a.values[i]) * a.values[i];
        nb += static_cast<long double>(b.values[i]) * b.values[i];
    }
    return static_cast<double>(dot / std::sqrt(na * nb));
}

class FixedEmbedder final : public Embedder {
public:
    FixedEmbedder(std::size_t returned_dim, std::size_t declared_dim) : returned_(returned_dim), declared_(declared_dim) {}
    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) override {
        return std::vector<EmbeddingVector>(texts.size(), EmbeddingVector{std::vector<double>(returned_, 0.5)});
    }
    std::size_t dimension() const override { return declared_; }
    std::string tag() const override { return "fixed"; }

private:
    std::size_t returned_, declared_;
};

NodeEmbeddingIndex random_index(std::mt19937_64& rng, std::size_t nodes, std::size_t dim) {
    std::normal_distribution<double> gauss;
    std::vector<EmbeddingVector> entries(nodes);
    for (auto& e : entries) {
        e.values.resize(dim);
        for (auto& x : e.values) x = gauss(rng);
        // Some exact duplicates to exercise the id tie-break.
        if (rng() % 5 == 0 && &e != &entries.front()) e = entries.front();
    }
    return NodeEmbeddingIndex(dim, "random", 0, std::move(entries));
}

}  // namespace

TEST(MockEmbedder, DeterministicAndUnitNorm) {
    MockEmbedder m;
    std::vector<std::string> once{"abc"};
    auto a = embed(once, m);
    auto b = embed(once, m);
    EXPECT_EQ(a[0].values, b[0].values);
    ASSERT_EQ(a[0].dim(), 64u);

    std::vector<std::string> two{"a", "b"};
    auto v = embed(two, m);
    EXPECT_NE(v[0].values, v[1].values);
    for (const auto& e : v) {
        double norm = 0;
        for (double x : e.values) norm += x * x;
        EXPECT_NEAR(std::sqrt(norm), 1.0, 1e-9);
    }
}

TEST(MockEmbedder, RandomTextsAreUnitNorm) {
    std::mt19937_64 rng(8);
    MockEmbedder m(32);
    for (int i = 0; i < 200; ++i) {
        auto v = m.embed_one(fixtures::random_text(rng, 5) + std::to_string(i));
        double norm = 0;
        for (double x : v.values) norm += x * x;
        EXPECT_NEAR(std::sqrt(norm), 1.0, 1e-9);
    }
}

TEST(Embed, RejectsEmptyInputAndWrongDimension) {
    MockEmbedder m;
    std::vector<std::string> none;
    EXPECT_THROW(embed(none, m), Error);
    FixedEmbedder wrong(8, 16);
    std::vector<std::string> one{"x"};
    try {
        embed(one, wrong);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DimensionMismatch);
    }
}

TEST(Cosine, HandExamples) {
    auto v = vec({0.3, -1.2, 4.0});
    EXPECT_NEAR(cosine_similarity(v, v), 1.0, 1e-12);
    EXPECT_NEAR(cosine_similarity(vec({1, 0}), vec({0, 1})), 0.0, 1e-12);
    EXPECT_NEAR(cosine_similarity(vec({1, 1}), vec({1, 0})), 0.7071, 1e-4);
    EXPECT_NEAR(cosine_similarity(vec({1, 1}), vec({1, 0})), 1.0 / std::sqrt(2.0), 1e-12);
}

TEST(Cosine, Errors) {
    try {
        cosine_similarity(vec({0, 0}), vec({1, 0}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::ZeroVector);
    }
    try {
        cosine_similarity(vec({1, 0}), vec({1, 0, 0}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DimensionMismatch);
    }
}

TEST(Cosine, SymmetricBoundedAndMatchesReference) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> gauss;
    for (int t = 0; t < 500; ++t) {
        std::size_t d = 1 + rng() % 20;
        EmbeddingVector a, b;
        for (std::size_t i = 0; i < d; ++i) {
            a.values.push_back(gauss(rng));
            b.values.push_back(gauss(rng));
        }
        double ab = cosine_similarity(a, b);
        EXPECT_EQ(ab, cosine_similarity(b, a));
        EXPECT_LE(std::abs(ab), 1.0);
        EXPECT_NEAR(ab, reference_cosine(a, b), 1e-12);
    }
}

TEST(TopK, ExactMatchWinsAndLargeKReturnsAll) {
    std::mt19937_64 rng(2);
    auto index = random_index(rng, 10, 8);
    auto hits = top_k_nodes(index.at(3), index, 1);
    ASSERT_EQ(hits.size(), 1u);
    EXPECT_NEAR(hits[0].similarity, 1.0, 1e-12);
    // Duplicates of node 3 would tie; the smallest id among them wins.
    EXPECT_LE(hits[0].node, 3u);
    EXPECT_EQ(top_k_nodes(index.at(0), index, 50).size(), 10u);
}

TEST(TopK, Errors) {
    NodeEmbeddingIndex empty;
    EXPECT_THROW(top_k_nodes(vec({1}), empty, 3), Error);
    try {
        top_k_nodes(vec({1}), empty, 3);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EmptyIndex);
    }
    std::mt19937_64 rng(1);
    auto index = random_index(rng, 3, 4);
    EXPECT_THROW(top_k_nodes(index.at(0), index, 0), Error);
}

TEST(TopK, MatchesBruteForceSort) {
    std::mt19937_64 rng(30);
    for (int t = 0; t < 200; ++t) {
        std::size_t n = 1 + rng() % 30;
        auto index = random_index(rng, n, 1 + rng() % 12);
        EmbeddingVector q = index.at(static_cast<NodeId>(rng() % n));
        for (auto& x : q.values) x += 0.1 * static_cast<double>(rng() % 3);
        std::vector<std::pair<double, NodeId>> all;
        for (NodeId v = 0; v < n; ++v) all.push_back({-reference_cosine(q, index.at(v)), v});
        std::sort(all.begin(), all.end());
        std::size_t k = 1 + rng() % (n + 2);
        auto hits = top_k_nodes(q, index, k);
        ASSERT_EQ(hits.size(), std::min(k, n));
        for (std::size_t i = 0; i < hits.size(); ++i) {
            EXPECT_NEAR(hits[i].similarity, -all[i].first, 1e-12);
            if (i > 0) {
                EXPECT_TRUE(hits[i - 1].similarity > hits[i].similarity ||
                            (hits[i - 1].similarity == hits[i].similarity && hits[i - 1].node < hits[i].node));
            }
        }
    }
}

TEST(NodeIndex, SidecarRoundTripAndStaleness) {
    auto g = fixtures::diamond();
    MockEmbedder m;
    auto index = build_node_index(g, m);
    ASSERT_EQ(index.size(), g.node_count());
    EXPECT_EQ(index.at(0).values, m.embed_one("A").values);
    auto path = std::filesystem::temp_directory_path() / "pathrag_test.graph.emb";
    save_index(index, path);
    auto back = load_index(path);
    EXPECT_EQ(back, index);
    EXPECT_NO_THROW(back.check_compatible(g, m));

    MockEmbedder other(32);
    try {
        back.check_compatible(g, other);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::StaleIndex);
    }
    IndexingGraph changed(false);
    changed.add_node("A", "");
    changed.freeze();
    EXPECT_THROW(back.check_compatible(changed, m), Error);

    std::ofstream(path, std::ios::binary | std::ios::trunc) << "garbage";
    try {
        load_index(path);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::MalformedRecord);
    }
    std::filesystem::remove(path);
    try {
        load_index(path);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("re-run build-index"), std::string::npos);
    }
}
