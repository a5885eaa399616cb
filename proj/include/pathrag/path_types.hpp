#pragma once

#include <pathrag/error.hpp>
#include <pathrag/graph_store.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace pathrag {

/// Decay rate and pruning threshold of the resource flow.
struct FlowParams {
    double alpha = 0.7;
    double theta = 0.05;

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0)) throw Error(Errc::InvalidArgument, "alpha must lie in (0,1)");
        if (!(theta > 0.0) || !std::isfinite(theta)) throw Error(Errc::InvalidArgument, "theta must be > 0");
        if (!std::isfinite(1.0 / ((1.0 - alpha) * theta))) {
            throw Error(Errc::InvalidArgument, "alpha/theta bound is not representable");
        }
    }

    /// Upper bound on settled nodes per propagation: 1/((1-alpha)*theta) + 1.
    double settled_bound() const { return 1.0 / ((1.0 - alpha) * theta) + 1.0; }
};

/// v0 -e0-> v1 -e1-> ... ; |nodes| == |edges| + 1 >= 2.
struct RelationalPath {
    std::vector<NodeId> nodes;
    std::vector<EdgeId> edges;
    double reliability = 0.0;

    std::size_t hops() const noexcept { return edges.size(); }
    bool operator==(const RelationalPath&) const = default;
};

/// Pool order: higher reliability first, then lexicographically smaller node
/// sequence.
inline bool ranks_before(const RelationalPath& a, const RelationalPath& b) {
    if (a.reliability != b.reliability) return a.reliability > b.reliability;
    return a.nodes < b.nodes;
}

/// Structural check against a graph: alternating, connected, simple.
inline void validate_path(const RelationalPath& path, const IndexingGraph& graph) {
    if (path.nodes.size() < 2 || path.nodes.size() != path.edges.size() + 1) {
        throw Error(Errc::InvalidArgument, "path must have |nodes| == |edges| + 1 >= 2");
    }
    for (std::size_t i = 0; i < path.edges.size(); ++i) {
        const Edge& e = graph.edge(path.edges[i]);
        if (e.src != path.nodes[i] || e.dst != path.nodes[i + 1]) {
            throw Error(Errc::UnknownElement, "edge " + std::to_string(e.id) + " does not join path nodes");
        }
    }
    std::vector<NodeId> sorted = path.nodes;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw Error(Errc::InvalidArgument, "path repeats a node");
    }
}

}  // namespace pathrag
