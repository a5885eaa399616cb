#pragma once

// Graphs and generators shared by the unit suites and the acceptance runner.

#include <pathrag/graph_store.hpp>
#include <pathrag/path_types.hpp>

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace fixtures {

using pathrag::IndexingGraph;
using pathrag::NodeId;

/// A->B, A->C, B->D, C->D (directed; reverse twins would change out-degrees).
inline IndexingGraph diamond(const std::array<const char*, 4>& names = {"A", "B", "C", "D"}) {
    IndexingGraph g(false);
    auto a = g.add_node(names[0], "a-desc");
    auto b = g.add_node(names[1], "b-desc");
    auto c = g.add_node(names[2], "c-desc");
    auto d = g.add_node(names[3], "d-desc");
    g.add_edge(a, b, "a to b");
    g.add_edge(a, c, "a to c");
    g.add_edge(b, d, "b to d");
    g.add_edge(c, d, "c to d");
    g.freeze();
    return g;
}

inline std::string random_text(std::mt19937_64& rng, std::size_t max_words) {
    static constexpr const char* kWords[] = {"river", "grain",  "Acme", "treaty", "drought", "caf\xc3\xa9",
                                             "port",  "\"quoted\"", "tab\tsep", "yields", "north", "back\\slash"};
    std::uniform_int_distribution<std::size_t> count(0, max_words);
    std::uniform_int_distribution<std::size_t> pick(0, std::size(kWords) - 1);
    std::string out;
    for (std::size_t i = 0, n = count(rng); i < n; ++i) {
        if (i) out += (rng() % 7 == 0) ? "\n" : " ";
        out += kWords[pick(rng)];
    }
    return out;
}

struct GraphShape {
    std::size_t min_nodes = 2;
    std::size_t max_nodes = 25;
    double min_p = 0.2;
    double max_p = 0.5;
    bool bidirectional = false;
};

/// Erdos-Renyi style digraph: each ordered pair gets an edge with probability p.
inline IndexingGraph random_graph(std::mt19937_64& rng, const GraphShape& shape = {}) {
    std::uniform_int_distribution<std::size_t> nodes(shape.min_nodes, shape.max_nodes);
    std::uniform_real_distribution<double> prob(shape.min_p, shape.max_p);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::size_t n = nodes(rng);
    double p = prob(rng);
    IndexingGraph g(shape.bidirectional);
    for (std::size_t i = 0; i < n; ++i) g.add_node("n" + std::to_string(i), random_text(rng, 6));
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = 0; v < n; ++v) {
            if (u != v && coin(rng) < p) g.add_edge(static_cast<NodeId>(u), static_cast<NodeId>(v), random_text(rng, 4));
        }
    }
    g.freeze();
    return g;
}

inline pathrag::FlowParams random_flow(std::mt19937_64& rng) {
    static constexpr double kAlphas[] = {0.3, 0.5, 0.7};
    static constexpr double kThetas[] = {1e-6, 0.01, 0.05};
    return {kAlphas[rng() % 3], kThetas[rng() % 3]};
}

}  // namespace fixtures
