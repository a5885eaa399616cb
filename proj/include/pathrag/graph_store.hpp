#pragma once

// Indexing graph: entity nodes (identifier + chunk) joined by directed relation
// edges that carry their own chunk.
//
// Lifecycle: single writer adds nodes/edges, then freeze() materializes reverse
// twins (bidirectional mode) and the graph becomes read-only. Frozen graphs are
// safe to share between threads.
//
// File format (UTF-8 JSON Lines):
//   {"t":"h","bidi":<bool>,"version":1}
//   {"t":"n","id":<int>,"k":<string>,"c":<string>}      nodes, in id order
//   {"t":"e","id":<int>,"s":<int>,"d":<int>,"c":<string>} primary edges, in id order
// Twin edges are never written; load() re-freezes and rebuilds them.

#include <pathrag/error.hpp>
#include <pathrag/text.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace pathrag {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;

struct Node {
    NodeId id = 0;
    std::string identifier;
    std::string chunk;

    bool operator==(const Node&) const = default;
};

struct Edge {
    EdgeId id = 0;
    NodeId src = 0;
    NodeId dst = 0;
    std::string chunk;
    // Set on reverse twins created by freeze(): the primary edge mirrored.
    std::optional<EdgeId> twin_of;

    bool operator==(const Edge&) const = default;
};

struct Adjacent {
    NodeId node = 0;
    EdgeId edge = 0;

    bool operator==(const Adjacent&) const = default;
};

enum class Direction { Out, In };

inline constexpr std::string_view kChunkSeparator = "\n";

class IndexingGraph {
public:
    explicit IndexingGraph(bool bidirectional = true) : bidirectional_(bidirectional) {}

    bool bidirectional() const noexcept { return bidirectional_; }
    bool frozen() const noexcept { return frozen_; }

    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    std::size_t primary_edge_count() const noexcept { return primary_edges_; }

    /// Adds an entity or merges into the existing one with the same case-folded
    /// identifier; the merged chunk is the old chunk + "\n" + the new chunk.
    NodeId add_node(std::string_view identifier, std::string_view chunk) {
        ensure_mutable();
        std::string_view trimmed = trim(identifier);
        if (trimmed.empty()) throw Error(Errc::EmptyIdentifier, "node identifier is empty");
        std::string key = fold_case(trimmed);
        if (auto it = by_key_.find(key); it != by_key_.end()) {
            merge_chunk(nodes_[it->second].chunk, chunk);
            return it->second;
        }
        auto id = static_cast<NodeId>(nodes_.size());
        nodes_.push_back(Node{id, std::string(trimmed), std::string(trim(chunk))});
        out_adj_.emplace_back();
        in_adj_.emplace_back();
        by_key_.emplace(std::move(key), id);
        return id;
    }

    EdgeId add_edge(NodeId src, NodeId dst, std::string_view chunk) {
        ensure_mutable();
        require_node(src);
        require_node(dst);
        if (src == dst) {
            throw Error(Errc::SelfLoop, "self loop on node " + std::to_string(src));
        }
        if (auto existing = find_edge(src, dst)) {
            merge_chunk(edges_[*existing].chunk, chunk);
            return *existing;
        }
        auto id = static_cast<EdgeId>(edges_.size());
        edges_.push_back(Edge{id, src, dst, std::string(trim(chunk)), std::nullopt});
        link(id);
        ++primary_edges_;
        return id;
    }

    /// Materializes reverse twins (bidirectional mode) and locks the graph.
    /// Twin ids follow all primary ids, in primary-id order.
    void freeze() {
        if (frozen_) return;
        if (bidirectional_) {
            std::size_t primaries = edges_.size();
            for (std::size_t i = 0; i < primaries; ++i) {
                const Edge primary = edges_[i];
                if (find_edge(primary.dst, primary.src)) continue;
                auto id = static_cast<EdgeId>(edges_.size());
                edges_.push_back(Edge{id, primary.dst, primary.src, primary.chunk, primary.id});
                link(id);
            }
        }
        frozen_ = true;
    }

    bool contains(NodeId v) const noexcept { return v < nodes_.size(); }

    const Node& node(NodeId v) const {
        require_node(v);
        return nodes_[v];
    }

    const Edge& edge(EdgeId e) const {
        if (e >= edges_.size()) {
            throw Error(Errc::UnknownElement, "unknown edge " + std::to_string(e));
        }
        return edges_[e];
    }

    std::span<const Node> nodes() const noexcept { return nodes_; }
    std::span<const Edge> edges() const noexcept { return edges_; }

    /// Neighbor list sorted by neighbor id.
    std::span<const Adjacent> neighbors(NodeId v, Direction dir) const {
        require_node(v);
        return dir == Direction::Out ? std::span<const Adjacent>(out_adj_[v])
                                     : std::span<const Adjacent>(in_adj_[v]);
    }

    std::size_t out_degree(NodeId v) const { return neighbors(v, Direction::Out).size(); }

    std::optional<EdgeId> find_edge(NodeId src, NodeId dst) const {
        if (auto it = by_pair_.find(pair_key(src, dst)); it != by_pair_.end()) return it->second;
        return std::nullopt;
    }

    std::optional<NodeId> find_node(std::string_view identifier) const {
        if (auto it = by_key_.find(identity_key(identifier)); it != by_key_.end()) return it->second;
        return std::nullopt;
    }

    bool operator==(const IndexingGraph& other) const {
        return bidirectional_ == other.bidirectional_ && frozen_ == other.frozen_ &&
               nodes_ == other.nodes_ && edges_ == other.edges_ && out_adj_ == other.out_adj_ &&
               in_adj_ == other.in_adj_;
    }

private:
    static std::uint64_t pair_key(NodeId src, NodeId dst) {
        return (static_cast<std::uint64_t>(src) << 32) | dst;
    }

    static void merge_chunk(std::string& target, std::string_view addition) {
        std::string_view add = trim(addition);
        if (add.empty()) return;
        if (target.empty()) {
            target = std::string(add);
            return;
        }
        // Skip segments already present verbatim.
        std::string_view rest = target;
        while (true) {
            auto pos = rest.find(kChunkSeparator);
            if (rest.substr(0, pos) == add) return;
            if (pos == std::string_view::npos) break;
            rest.remove_prefix(pos + kChunkSeparator.size());
        }
        target += kChunkSeparator;
        target += add;
    }

    static void sorted_insert(std::vector<Adjacent>& list, Adjacent entry) {
        auto it = std::lower_bound(list.begin(), list.end(), entry,
                                   [](const Adjacent& a, const Adjacent& b) { return a.node < b.node; });
        list.insert(it, entry);
    }

    void link(EdgeId id) {
        const Edge& e = edges_[id];
        sorted_insert(out_adj_[e.src], {e.dst, id});
        sorted_insert(in_adj_[e.dst], {e.src, id});
        by_pair_.emplace(pair_key(e.src, e.dst), id);
    }

    void ensure_mutable() const {
        if (frozen_) throw Error(Errc::GraphFrozen, "graph is frozen");
    }

    void require_node(NodeId v) const {
        if (v >= nodes_.size()) throw Error(Errc::UnknownNode, "unknown node " + std::to_string(v));
    }

    bool bidirectional_;
    bool frozen_ = false;
    std::size_t primary_edges_ = 0;
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::vector<std::vector<Adjacent>> out_adj_;
    std::vector<std::vector<Adjacent>> in_adj_;
    std::unordered_map<std::string, NodeId> by_key_;
    std::unordered_map<std::uint64_t, EdgeId> by_pair_;
};

// ---------------------------------------------------------------------------
// Persistence

inline constexpr int kGraphFormatVersion = 1;

inline void write_graph(const IndexingGraph& graph, std::ostream& out) {
    using nlohmann::ordered_json;
    ordered_json header = {{"t", "h"}, {"bidi", graph.bidirectional()}, {"version", kGraphFormatVersion}};
    out << header.dump() << '\n';
    for (const Node& n : graph.nodes()) {
        ordered_json rec = {{"t", "n"}, {"id", n.id}, {"k", n.identifier}, {"c", n.chunk}};
        out << rec.dump() << '\n';
    }
    for (const Edge& e : graph.edges()) {
        if (e.twin_of) continue;
        ordered_json rec = {{"t", "e"}, {"id", e.id}, {"s", e.src}, {"d", e.dst}, {"c", e.chunk}};
        out << rec.dump() << '\n';
    }
}

/// Writes the graph file and returns the number of bytes written.
inline std::size_t save_graph(const IndexingGraph& graph, const std::filesystem::path& path) {
    std::ostringstream buffer;
    write_graph(graph, buffer);
    std::string bytes = std::move(buffer).str();
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
    file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!file) throw Error(Errc::IoFailure, "write failed for " + path.string());
    return bytes.size();
}

namespace detail {

inline Error malformed(std::size_t line, const std::string& what) {
    Error err(Errc::MalformedRecord, "line " + std::to_string(line) + ": " + what);
    err.with_line(line);
    return err;
}

template <typename T>
T required_field(const nlohmann::json& rec, const char* key, std::size_t line) {
    auto it = rec.find(key);
    if (it == rec.end()) throw malformed(line, std::string("missing \"") + key + "\"");
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw malformed(line, std::string("bad type for \"") + key + "\"");
    }
}

}  // namespace detail

/// Parses a graph stream; the result is always frozen.
inline IndexingGraph read_graph(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    std::optional<IndexingGraph> graph;
    bool seen_edge = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error&) {
            throw detail::malformed(line_no, "invalid JSON");
        }
        if (!rec.is_object()) throw detail::malformed(line_no, "record is not an object");
        auto type = detail::required_field<std::string>(rec, "t", line_no);
        if (!graph) {
            if (type != "h") throw detail::malformed(line_no, "expected header record first");
            auto version = detail::required_field<int>(rec, "version", line_no);
            if (version != kGraphFormatVersion) {
                throw detail::malformed(line_no, "unsupported version " + std::to_string(version));
            }
            graph.emplace(detail::required_field<bool>(rec, "bidi", line_no));
            continue;
        }
        if (type == "n") {
            if (seen_edge) throw detail::malformed(line_no, "node record after edge records");
            auto id = detail::required_field<std::int64_t>(rec, "id", line_no);
            auto k = detail::required_field<std::string>(rec, "k", line_no);
            auto c = detail::required_field<std::string>(rec, "c", line_no);
            if (id != static_cast<std::int64_t>(graph->node_count())) {
                throw detail::malformed(line_no, "node id out of sequence");
            }
            try {
                if (graph->add_node(k, c) != id) throw detail::malformed(line_no, "duplicate identifier");
            } catch (const Error& e) {
                if (e.code() == Errc::MalformedRecord) throw;
                throw detail::malformed(line_no, e.what());
            }
        } else if (type == "e") {
            seen_edge = true;
            auto id = detail::required_field<std::int64_t>(rec, "id", line_no);
            auto s = detail::required_field<std::int64_t>(rec, "s", line_no);
            auto d = detail::required_field<std::int64_t>(rec, "d", line_no);
            auto c = detail::required_field<std::string>(rec, "c", line_no);
            if (id != static_cast<std::int64_t>(graph->edge_count())) {
                throw detail::malformed(line_no, "edge id out of sequence");
            }
            if (s < 0 || d < 0) throw detail::malformed(line_no, "negative node id");
            try {
                if (graph->add_edge(static_cast<NodeId>(s), static_cast<NodeId>(d), c) != id) {
                    throw detail::malformed(line_no, "duplicate edge");
                }
            } catch (const Error& e) {
                if (e.code() == Errc::MalformedRecord) throw;
                throw detail::malformed(line_no, e.what());
            }
        } else if (type == "h") {
            throw detail::malformed(line_no, "duplicate header");
        } else {
            throw detail::malformed(line_no, "unknown record type \"" + type + "\"");
        }
    }
    if (!graph) throw detail::malformed(line_no + 1, "missing header record");
    graph->freeze();
    return std::move(*graph);
}

inline IndexingGraph load_graph(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw Error(Errc::IoFailure, "cannot open " + path.string());
    return read_graph(file);
}

}  // namespace pathrag
