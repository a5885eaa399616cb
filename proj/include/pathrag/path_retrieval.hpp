#pragma once

// Flow-based path retrieval.
//
// propagate() spreads a unit of resource from a source node layer by layer:
// a node settled at layer i+1 receives alpha * S(u) / outdeg(u) from every
// layer-i node u that points to it and still expands. A settled node stops
// expanding once S(v) / outdeg(v) < theta. Every node is settled exactly once,
// so the settled nodes and the forward edges between consecutive layers form
// a DAG rooted at the source; paths are enumerated on that DAG and scored by
// the sum of their node resources divided by their edge count.

#include <pathrag/concurrency.hpp>
#include <pathrag/error.hpp>
#include <pathrag/graph_store.hpp>
#include <pathrag/path_types.hpp>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace pathrag {

class ResourceMap {
public:
    ResourceMap() = default;
    explicit ResourceMap(NodeId source) : source_(source) {}

    NodeId source() const noexcept { return source_; }

    bool settled(NodeId v) const { return resource_.count(v) != 0; }
    std::size_t settled_count() const noexcept { return resource_.size(); }

    double resource(NodeId v) const {
        auto it = resource_.find(v);
        if (it == resource_.end()) {
            throw Error(Errc::UnsettledNode, "node " + std::to_string(v) + " is not settled");
        }
        return it->second;
    }
    std::uint32_t layer(NodeId v) const {
        auto it = layer_.find(v);
        if (it == layer_.end()) {
            throw Error(Errc::UnsettledNode, "node " + std::to_string(v) + " is not settled");
        }
        return it->second;
    }

    bool pruned(NodeId v) const { return pruned_.count(v) != 0; }
    bool expands(NodeId v) const { return expanding_.count(v) != 0; }
    std::size_t pruned_count() const noexcept { return pruned_.size(); }

    /// Settled nodes per layer, each sorted by id.
    const std::vector<std::vector<NodeId>>& layers() const noexcept { return layers_; }
    /// Per-layer count of settled nodes that went on to expand.
    const std::vector<std::size_t>& frontier_history() const noexcept { return frontier_history_; }
    /// Number of resource writes; equals settled_count() when the single-update rule held.
    std::size_t settle_writes() const noexcept { return settle_writes_; }

    /// Settled nodes sorted by id with their resource.
    std::vector<std::pair<NodeId, double>> sorted_resources() const {
        std::vector<std::pair<NodeId, double>> out(resource_.begin(), resource_.end());
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    friend ResourceMap propagate(const IndexingGraph&, NodeId, const FlowParams&);

    void settle(NodeId v, double s, std::uint32_t layer) {
        ++settle_writes_;
        auto [it, inserted] = resource_.emplace(v, s);
        if (!inserted) throw Error(Errc::InvalidArgument, "resource of node " + std::to_string(v) + " written twice");
        layer_.emplace(v, layer);
        if (layers_.size() <= layer) layers_.resize(layer + 1);
        layers_[layer].push_back(v);
    }

    NodeId source_ = 0;
    std::unordered_map<NodeId, double> resource_;
    std::unordered_map<NodeId, std::uint32_t> layer_;
    std::unordered_set<NodeId> pruned_;
    std::unordered_set<NodeId> expanding_;
    std::vector<std::vector<NodeId>> layers_;
    std::vector<std::size_t> frontier_history_;
    std::size_t settle_writes_ = 0;
};

inline ResourceMap propagate(const IndexingGraph& graph, NodeId source, const FlowParams& params) {
    params.validate();
    if (!graph.contains(source)) throw Error(Errc::UnknownNode, "unknown source node " + std::to_string(source));

    ResourceMap rm(source);
    rm.settle(source, 1.0, 0);
    std::vector<NodeId> current{source};
    std::uint32_t depth = 0;
    while (!current.empty()) {
        std::map<NodeId, double> incoming;
        std::size_t alive = 0;
        for (NodeId u : current) {
            auto out = graph.neighbors(u, Direction::Out);
            if (out.empty()) continue;  // terminal
            double s = rm.resource(u);
            auto degree = static_cast<double>(out.size());
            if (s / degree < params.theta) {
                rm.pruned_.insert(u);
                continue;
            }
            ++alive;
            rm.expanding_.insert(u);
            for (const Adjacent& a : out) {
                if (rm.settled(a.node)) continue;
                incoming[a.node] += params.alpha * s / degree;
            }
        }
        rm.frontier_history_.push_back(alive);
        ++depth;
        current.clear();
        for (const auto& [v, s] : incoming) {
            rm.settle(v, s, depth);
            current.push_back(v);
        }
    }
    return rm;
}

/// Sum of node resources along the path divided by its edge count.
inline double score_path(const RelationalPath& path, const ResourceMap& rmap) {
    if (path.edges.empty()) throw Error(Errc::InvalidArgument, "path has no edges");
    double sum = 0.0;
    for (NodeId v : path.nodes) sum += rmap.resource(v);
    return sum / static_cast<double>(path.edges.size());
}

struct EnumerationCaps {
    std::size_t max_paths_explored = 10000;
};

struct PairPaths {
    std::vector<RelationalPath> paths;
    bool truncated = false;
    std::size_t expansions = 0;
};

/// Paths from rmap.source() to `target` over forward edges of the propagation
/// DAG, best `retention` kept. Unsettled targets yield nothing.
inline PairPaths enumerate_pair_paths(const IndexingGraph& graph, const ResourceMap& rmap, NodeId target,
                                      std::size_t retention, const EnumerationCaps& caps = {}) {
    PairPaths result;
    const NodeId source = rmap.source();
    if (retention == 0 || target == source || !rmap.settled(target)) return result;

    auto forward = [&](NodeId u, NodeId v) {
        return rmap.expands(u) && rmap.settled(v) && rmap.layer(v) == rmap.layer(u) + 1;
    };

    // Nodes that can still reach the target through forward edges.
    std::unordered_set<NodeId> useful{target};
    std::vector<NodeId> frontier{target};
    while (!frontier.empty()) {
        std::vector<NodeId> next;
        for (NodeId v : frontier) {
            for (const Adjacent& a : graph.neighbors(v, Direction::In)) {
                if (rmap.settled(a.node) && forward(a.node, v) && useful.insert(a.node).second) {
                    next.push_back(a.node);
                }
            }
        }
        frontier = std::move(next);
    }
    if (!useful.count(source)) return result;

    std::vector<RelationalPath> found;
    RelationalPath current;
    current.nodes.push_back(source);

    // Depth-first over out-neighbors in id order.
    struct Frame {
        NodeId node;
        std::size_t next_child;
    };
    std::vector<Frame> stack{{source, 0}};
    while (!stack.empty()) {
        Frame& top = stack.back();
        auto out = graph.neighbors(top.node, Direction::Out);
        bool descended = false;
        while (top.next_child < out.size()) {
            const Adjacent& a = out[top.next_child++];
            if (!useful.count(a.node) || !forward(top.node, a.node)) continue;
            if (result.expansions >= caps.max_paths_explored) {
                result.truncated = true;
                break;
            }
            ++result.expansions;
            current.nodes.push_back(a.node);
            current.edges.push_back(a.edge);
            if (a.node == target) {
                current.reliability = score_path(current, rmap);
                found.push_back(current);
                current.nodes.pop_back();
                current.edges.pop_back();
                continue;
            }
            stack.push_back({a.node, 0});
            descended = true;
            break;
        }
        if (result.truncated) break;
        if (!descended) {
            stack.pop_back();
            if (!stack.empty()) {
                current.nodes.pop_back();
                current.edges.pop_back();
            }
        }
    }

    std::sort(found.begin(), found.end(), ranks_before);
    if (found.size() > retention) found.resize(retention);
    result.paths = std::move(found);
    return result;
}

struct PathRetrievalConfig {
    FlowParams flow;
    std::size_t top_k = 15;
    std::size_t per_pair = 5;
    EnumerationCaps caps;
    std::size_t threads = 1;
};

struct PropagationSummary {
    NodeId source = 0;
    std::size_t settled = 0;
    std::size_t pruned = 0;
    std::vector<std::size_t> frontier_history;
};

struct PairTruncation {
    NodeId source = 0;
    NodeId target = 0;
    std::size_t expansions = 0;
};

struct PathRetrieval {
    std::vector<RelationalPath> paths;  // global top-K, best first
    std::size_t candidates = 0;         // pool size after reverse dedup
    std::vector<PropagationSummary> propagations;
    std::vector<PairTruncation> truncated_pairs;
};

/// Reverse-duplicate removal for bidirectional graphs: of a path and its exact
/// reverse, keep the one that ranks first.
inline std::vector<RelationalPath> drop_reverse_duplicates(std::vector<RelationalPath> pool) {
    std::map<std::vector<NodeId>, std::size_t> by_key;
    std::vector<bool> keep(pool.size(), true);
    for (std::size_t i = 0; i < pool.size(); ++i) {
        std::vector<NodeId> reversed(pool[i].nodes.rbegin(), pool[i].nodes.rend());
        auto key = std::min(pool[i].nodes, reversed);
        auto [it, inserted] = by_key.emplace(std::move(key), i);
        if (inserted) continue;
        std::size_t j = it->second;
        if (ranks_before(pool[i], pool[j])) {
            keep[j] = false;
            it->second = i;
        } else {
            keep[i] = false;
        }
    }
    std::vector<RelationalPath> out;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (keep[i]) out.push_back(std::move(pool[i]));
    }
    return out;
}

/// Propagates from every retrieved node, enumerates each ordered pair, pools
/// the survivors and returns the global top-K. Never throws NoPathsFound.
inline PathRetrieval collect_paths(const IndexingGraph& graph, std::span<const NodeId> retrieved,
                                   const PathRetrievalConfig& config) {
    config.flow.validate();
    if (config.top_k == 0) throw Error(Errc::InvalidArgument, "top_k must be >= 1");
    std::vector<NodeId> sources(retrieved.begin(), retrieved.end());
    std::sort(sources.begin(), sources.end());
    sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
    for (NodeId v : sources) {
        if (!graph.contains(v)) throw Error(Errc::UnknownNode, "unknown retrieved node " + std::to_string(v));
    }

    std::vector<ResourceMap> maps(sources.size());
    std::vector<std::vector<PairPaths>> per_source(sources.size());
    parallel_for(sources.size(), config.threads, [&](std::size_t i) {
        maps[i] = propagate(graph, sources[i], config.flow);
        per_source[i].resize(sources.size());
        for (std::size_t j = 0; j < sources.size(); ++j) {
            if (i == j) continue;
            per_source[i][j] = enumerate_pair_paths(graph, maps[i], sources[j], config.per_pair, config.caps);
        }
    });

    PathRetrieval out;
    std::vector<RelationalPath> pool;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        out.propagations.push_back({sources[i], maps[i].settled_count(), maps[i].pruned_count(),
                                    maps[i].frontier_history()});
        for (std::size_t j = 0; j < sources.size(); ++j) {
            if (i == j) continue;
            auto& pair = per_source[i][j];
            if (pair.truncated) out.truncated_pairs.push_back({sources[i], sources[j], pair.expansions});
            for (auto& p : pair.paths) pool.push_back(std::move(p));
        }
    }
    if (graph.bidirectional()) pool = drop_reverse_duplicates(std::move(pool));
    out.candidates = pool.size();
    std::sort(pool.begin(), pool.end(), ranks_before);
    if (pool.size() > config.top_k) pool.resize(config.top_k);
    out.paths = std::move(pool);
    return out;
}

/// Global top-K paths between retrieved nodes; NoPathsFound when none exist.
inline std::vector<RelationalPath> retrieve_paths(const IndexingGraph& graph, std::span<const NodeId> retrieved,
                                                  const PathRetrievalConfig& config) {
    if (retrieved.empty()) throw Error(Errc::InvalidArgument, "no retrieved nodes");
    auto result = collect_paths(graph, retrieved, config);
    if (result.paths.empty()) throw Error(Errc::NoPathsFound, "no relational paths between retrieved nodes");
    return std::move(result.paths);
}

}  // namespace pathrag
