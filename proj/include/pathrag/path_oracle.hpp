#pragma once

// Brute-force reference for the flow engine, used by the test suites.
// Works on a dense adjacency matrix with explicit per-layer summation and
// exhaustive path enumeration; shares no code with path_retrieval.hpp.

#include <pathrag/error.hpp>
#include <pathrag/graph_store.hpp>
#include <pathrag/path_types.hpp>

#include <algorithm>
#include <cstddef>
#include <optional>
#include <vector>

namespace pathrag {

inline constexpr std::size_t kOracleMaxNodes = 25;

struct OracleFlow {
    std::vector<std::optional<double>> resource;  // indexed by node id
    std::vector<int> layer;                       // -1 when unsettled
    std::vector<bool> alive;                      // settled and expanding
};

namespace detail {

struct DenseGraph {
    std::size_t n = 0;
    std::vector<std::vector<std::optional<EdgeId>>> edge;  // edge[u][v]
    std::vector<std::size_t> degree;

    explicit DenseGraph(const IndexingGraph& g, std::size_t max_nodes) : n(g.node_count()) {
        if (n > max_nodes) {
            throw Error(Errc::GraphTooLarge, "oracle limited to " + std::to_string(max_nodes) + " nodes");
        }
        edge.assign(n, std::vector<std::optional<EdgeId>>(n));
        degree.assign(n, 0);
        for (const Edge& e : g.edges()) edge[e.src][e.dst] = e.id;
        for (std::size_t u = 0; u < n; ++u) {
            for (std::size_t v = 0; v < n; ++v) degree[u] += edge[u][v].has_value();
        }
    }
};

}  // namespace detail

inline OracleFlow oracle_flow(const IndexingGraph& graph, NodeId source, const FlowParams& params,
                              std::size_t max_nodes = kOracleMaxNodes) {
    detail::DenseGraph g(graph, max_nodes);
    if (source >= g.n) throw Error(Errc::UnknownNode, "unknown source");
    OracleFlow f;
    f.resource.assign(g.n, std::nullopt);
    f.layer.assign(g.n, -1);
    f.alive.assign(g.n, false);
    f.resource[source] = 1.0;
    f.layer[source] = 0;
    for (int depth = 0;; ++depth) {
        std::vector<std::size_t> senders;
        for (std::size_t u = 0; u < g.n; ++u) {
            if (f.layer[u] != depth || g.degree[u] == 0) continue;
            if (*f.resource[u] / static_cast<double>(g.degree[u]) >= params.theta) {
                f.alive[u] = true;
                senders.push_back(u);
            }
        }
        bool any = false;
        std::vector<std::optional<double>> next(g.n);
        for (std::size_t v = 0; v < g.n; ++v) {
            if (f.resource[v]) continue;
            for (std::size_t u : senders) {
                if (!g.edge[u][v]) continue;
                double share = params.alpha * *f.resource[u] / static_cast<double>(g.degree[u]);
                next[v] = next[v] ? *next[v] + share : share;
            }
        }
        for (std::size_t v = 0; v < g.n; ++v) {
            if (!next[v]) continue;
            f.resource[v] = next[v];
            f.layer[v] = depth + 1;
            any = true;
        }
        if (!any) break;
    }
    return f;
}

/// Every forward path source -> target, scored and sorted; best `retention` kept.
inline std::vector<RelationalPath> oracle_paths(const IndexingGraph& graph, NodeId source, NodeId target,
                                                const FlowParams& params, std::size_t retention,
                                                std::size_t max_nodes = kOracleMaxNodes) {
    detail::DenseGraph g(graph, max_nodes);
    OracleFlow f = oracle_flow(graph, source, params, max_nodes);
    std::vector<RelationalPath> all;
    if (target >= g.n || target == source || !f.resource[target]) return all;

    RelationalPath walk;
    walk.nodes.push_back(source);
    auto recurse = [&](auto&& self, std::size_t u) -> void {
        if (u == target) {
            double sum = 0.0;
            for (NodeId v : walk.nodes) sum += *f.resource[v];
            RelationalPath p = walk;
            p.reliability = sum / static_cast<double>(walk.edges.size());
            all.push_back(std::move(p));
            return;
        }
        if (!f.alive[u]) return;
        for (std::size_t v = 0; v < g.n; ++v) {
            if (!g.edge[u][v] || f.layer[v] != f.layer[u] + 1) continue;
            walk.nodes.push_back(static_cast<NodeId>(v));
            walk.edges.push_back(*g.edge[u][v]);
            self(self, v);
            walk.nodes.pop_back();
            walk.edges.pop_back();
        }
    };
    recurse(recurse, source);

    std::sort(all.begin(), all.end(), [](const RelationalPath& a, const RelationalPath& b) {
        if (a.reliability != b.reliability) return a.reliability > b.reliability;
        return a.nodes < b.nodes;
    });
    if (all.size() > retention) all.resize(retention);
    return all;
}

}  // namespace pathrag
