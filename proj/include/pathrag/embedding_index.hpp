#pragma once

#include <pathrag/error.hpp>
#include <pathrag/graph_store.hpp>
#include <pathrag/text.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <span>
#include <type_traits>
#include <string>
#include <utility>
#include <vector>

namespace pathrag {

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const noexcept { return values.size(); }
    bool operator==(const EmbeddingVector&) const = default;
};

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) = 0;
    virtual std::size_t dimension() const = 0;
    // Recorded in the index sidecar; a mismatch marks the index stale.
    virtual std::string tag() const = 0;
};

/// Offline embedder: seeds mt19937_64 with FNV-1a of the trimmed, case-folded
/// text, draws `dim` uniforms in [-1, 1] and normalizes to unit length.
class MockEmbedder final : public Embedder {
public:
    explicit MockEmbedder(std::size_t dim = 64) : dim_(dim) {}

    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) override {
        std::vector<EmbeddingVector> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(embed_one(t));
        return out;
    }

    EmbeddingVector embed_one(std::string_view text) const {
        std::mt19937_64 rng(fnv1a64(identity_key(text)));
        EmbeddingVector v;
        v.values.resize(dim_);
        double norm2 = 0.0;
        for (auto& x : v.values) {
            // 53 random bits -> [0,1) -> [-1,1)
            double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            x = 2.0 * u - 1.0;
            norm2 += x * x;
        }
        double norm = std::sqrt(norm2);
        for (auto& x : v.values) x /= norm;
        return v;
    }

    std::size_t dimension() const override { return dim_; }
    std::string tag() const override { return "mock-fnv1a-d" + std::to_string(dim_); }

private:
    std::size_t dim_;
};

/// Embeds `texts` through `provider`, checking count, dimension and finiteness.
inline std::vector<EmbeddingVector> embed(std::span<const std::string> texts, Embedder& provider) {
    if (texts.empty()) throw Error(Errc::InvalidArgument, "nothing to embed");
    auto vectors = provider.embed_batch(texts);
    if (vectors.size() != texts.size()) {
        throw Error(Errc::ProviderFailure, "provider returned " + std::to_string(vectors.size()) +
                                               " vectors for " + std::to_string(texts.size()) + " texts");
    }
    for (const auto& v : vectors) {
        if (v.dim() != provider.dimension()) {
            throw Error(Errc::DimensionMismatch, "expected dimension " + std::to_string(provider.dimension()) +
                                                     ", got " + std::to_string(v.dim()));
        }
        for (double x : v.values) {
            if (!std::isfinite(x)) throw Error(Errc::ProviderFailure, "non-finite embedding value");
        }
    }
    return vectors;
}

inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        throw Error(Errc::DimensionMismatch,
                    "cosine of " + std::to_string(a.dim()) + "-d and " + std::to_string(b.dim()) + "-d vectors");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) throw Error(Errc::ZeroVector, "cosine similarity of a zero vector");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

struct ScoredNode {
    NodeId node = 0;
    double similarity = 0.0;

    bool operator==(const ScoredNode&) const = default;
};

/// Graph fingerprint stored in the sidecar: FNV-1a over identifiers in id order.
inline std::uint64_t graph_fingerprint(const IndexingGraph& graph) {
    std::uint64_t h = fnv1a64("pathrag-graph");
    for (const Node& n : graph.nodes()) {
        h = fnv1a64(n.identifier, h);
        h = fnv1a64(std::string_view("\0", 1), h);
    }
    return h;
}

/// Dense node-id-indexed embeddings of node identifiers (optionally with chunks).
class NodeEmbeddingIndex {
public:
    NodeEmbeddingIndex() = default;
    NodeEmbeddingIndex(std::size_t dim, std::string provider_tag, std::uint64_t fingerprint,
                       std::vector<EmbeddingVector> entries)
        : dim_(dim), provider_tag_(std::move(provider_tag)), fingerprint_(fingerprint), entries_(std::move(entries)) {
        for (const auto& e : entries_) {
            if (e.dim() != dim_) throw Error(Errc::DimensionMismatch, "index entry dimension mismatch");
        }
    }

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    const std::string& provider_tag() const noexcept { return provider_tag_; }
    std::uint64_t fingerprint() const noexcept { return fingerprint_; }
    const EmbeddingVector& at(NodeId v) const { return entries_.at(v); }
    std::span<const EmbeddingVector> entries() const noexcept { return entries_; }

    bool operator==(const NodeEmbeddingIndex&) const = default;

    /// Rejects an index built for another graph or with another provider.
    void check_compatible(const IndexingGraph& graph, const Embedder& provider) const {
        if (entries_.size() != graph.node_count() || fingerprint_ != graph_fingerprint(graph)) {
            throw Error(Errc::StaleIndex, "embedding index does not match the graph; re-run build-index");
        }
        if (provider_tag_ != provider.tag()) {
            throw Error(Errc::StaleIndex, "embedding index was built with provider '" + provider_tag_ +
                                              "' but '" + provider.tag() + "' is configured; re-run build-index");
        }
        if (dim_ != provider.dimension()) {
            throw Error(Errc::DimensionMismatch, "index dimension " + std::to_string(dim_) +
                                                     " != provider dimension " + std::to_string(provider.dimension()));
        }
    }

private:
    std::size_t dim_ = 0;
    std::string provider_tag_;
    std::uint64_t fingerprint_ = 0;
    std::vector<EmbeddingVector> entries_;
};

inline std::string node_embedding_text(const Node& n, bool include_chunk) {
    if (!include_chunk || n.chunk.empty()) return n.identifier;
    return n.identifier + "\n" + n.chunk;
}

inline NodeEmbeddingIndex build_node_index(const IndexingGraph& graph, Embedder& provider,
                                           bool include_chunks = false, std::size_t batch_size = 256) {
    std::vector<EmbeddingVector> entries;
    entries.reserve(graph.node_count());
    std::vector<std::string> batch;
    auto flush = [&] {
        if (batch.empty()) return;
        auto vs = embed(batch, provider);
        for (auto& v : vs) entries.push_back(std::move(v));
        batch.clear();
    };
    for (const Node& n : graph.nodes()) {
        batch.push_back(node_embedding_text(n, include_chunks));
        if (batch.size() >= batch_size) flush();
    }
    flush();
    return NodeEmbeddingIndex(provider.dimension(), provider.tag(), graph_fingerprint(graph), std::move(entries));
}

/// Exact linear scan. Descending similarity, ties by ascending node id.
inline std::vector<ScoredNode> top_k_nodes(const EmbeddingVector& query, const NodeEmbeddingIndex& index,
                                           std::size_t k) {
    if (k == 0) throw Error(Errc::InvalidArgument, "k must be >= 1");
    if (index.empty()) throw Error(Errc::EmptyIndex, "embedding index is empty");
    std::vector<ScoredNode> scored;
    scored.reserve(index.size());
    for (std::size_t i = 0; i < index.size(); ++i) {
        auto v = static_cast<NodeId>(i);
        scored.push_back({v, cosine_similarity(query, index.at(v))});
    }
    auto better = [](const ScoredNode& a, const ScoredNode& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.node < b.node;
    };
    k = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(), better);
    scored.resize(k);
    return scored;
}

// ---------------------------------------------------------------------------
// Sidecar: "PRAGEMB1" | u32 version | u32 dim | u64 count | u64 fingerprint |
//          u32 tag_len | tag bytes | count*dim little-endian float64

inline constexpr char kSidecarMagic[8] = {'P', 'R', 'A', 'G', 'E', 'M', 'B', '1'};

inline std::filesystem::path sidecar_path(const std::filesystem::path& graph_path) {
    auto p = graph_path;
    p += ".emb";
    return p;
}

namespace detail {

template <typename T>
void put_le(std::ostream& out, T value) {
    unsigned char bytes[sizeof(T)];
    std::uint64_t bits = 0;
    if constexpr (std::is_floating_point_v<T>) {
        static_assert(sizeof(T) == 8);
        std::memcpy(&bits, &value, 8);
    } else {
        bits = static_cast<std::uint64_t>(value);
    }
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
    unsigned char bytes[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
        throw Error(Errc::MalformedRecord, "embedding sidecar truncated");
    }
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    if constexpr (std::is_floating_point_v<T>) {
        T value;
        std::memcpy(&value, &bits, 8);
        return value;
    } else {
        return static_cast<T>(bits);
    }
}

}  // namespace detail

inline void save_index(const NodeEmbeddingIndex& index, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
    out.write(kSidecarMagic, sizeof(kSidecarMagic));
    detail::put_le<std::uint32_t>(out, 1);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(index.dim()));
    detail::put_le<std::uint64_t>(out, index.size());
    detail::put_le<std::uint64_t>(out, index.fingerprint());
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(index.provider_tag().size()));
    out.write(index.provider_tag().data(), static_cast<std::streamsize>(index.provider_tag().size()));
    for (const auto& e : index.entries()) {
        for (double x : e.values) detail::put_le<double>(out, x);
    }
    if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

inline NodeEmbeddingIndex load_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::IoFailure, "embedding sidecar " + path.string() + " not found; re-run build-index");
    }
    char magic[sizeof(kSidecarMagic)];
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kSidecarMagic, sizeof(magic)) != 0) {
        throw Error(Errc::MalformedRecord, path.string() + " is not an embedding sidecar");
    }
    if (detail::get_le<std::uint32_t>(in) != 1) throw Error(Errc::MalformedRecord, "unsupported sidecar version");
    auto dim = detail::get_le<std::uint32_t>(in);
    auto count = detail::get_le<std::uint64_t>(in);
    auto fingerprint = detail::get_le<std::uint64_t>(in);
    auto tag_len = detail::get_le<std::uint32_t>(in);
    if (tag_len > 4096) throw Error(Errc::MalformedRecord, "sidecar provider tag too long");
    std::string tag(tag_len, '\0');
    if (!in.read(tag.data(), tag_len)) throw Error(Errc::MalformedRecord, "embedding sidecar truncated");
    std::vector<EmbeddingVector> entries(count);
    for (auto& e : entries) {
        e.values.resize(dim);
        for (auto& x : e.values) x = detail::get_le<double>(in);
    }
    return NodeEmbeddingIndex(dim, std::move(tag), fingerprint, std::move(entries));
}

}  // namespace pathrag
