#pragma once

// Seeded synthetic data for benches, demos and tests: scale-free indexing
// graphs with made-up entity names, small prose corpora, and queries that
// mention entities by name.

#include <pathrag/graph_store.hpp>
#include <pathrag/ingestion.hpp>
#include <pathrag/text.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <iterator>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace pathrag::synthetic {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

/// `count` distinct capitalized pseudo-words ("Valtor", "Quenmira", ...).
inline std::vector<std::string> entity_names(std::size_t count, Rng& rng) {
    static constexpr const char* kSyllables[] = {"val", "tor", "quen", "mi",  "ra",  "dor", "ke",  "lin", "sar",
                                                 "bel", "nox", "ari", "tem", "zu",  "phi", "gal", "ven", "ost",
                                                 "cre", "dal", "ith", "mor", "pel", "run", "sel", "tau", "vek"};
    constexpr std::size_t kCount = sizeof(kSyllables) / sizeof(kSyllables[0]);
    std::set<std::string> seen;
    std::vector<std::string> out;
    while (out.size() < count) {
        std::string name;
        std::size_t parts = 2 + rng.below(2);
        for (std::size_t i = 0; i < parts; ++i) name += kSyllables[rng.below(kCount)];
        name[0] = static_cast<char>(name[0] - 'a' + 'A');
        if (is_stopword(name) || !seen.insert(name).second) continue;
        out.push_back(name);
    }
    return out;
}

inline constexpr const char* kKinds[] = {"research institute", "river delta", "trading company", "farming cooperative",
                                         "software project", "mountain town", "medical charity", "shipping port"};
inline constexpr const char* kVerbs[] = {"supplies grain to", "funds research at", "shares a border with",
                                         "signed a treaty with", "acquired a stake in", "trains engineers for",
                                         "exports timber to", "publishes reports about"};

/// Barabasi-Albert graph: each new node attaches to `m` distinct existing
/// nodes chosen proportionally to degree. Node chunks are one or two
/// sentences, edge chunks a short relation sentence.
inline IndexingGraph scale_free_graph(std::size_t nodes, std::size_t m, std::uint64_t seed, bool bidirectional = true) {
    Rng rng(seed);
    auto names = entity_names(nodes, rng);
    IndexingGraph g(bidirectional);
    for (std::size_t i = 0; i < nodes; ++i) {
        const char* kind = kKinds[rng.below(std::size(kKinds))];
        std::string chunk = names[i] + " is a " + kind + " founded in " + std::to_string(1800 + rng.below(220)) + ".";
        if (rng.below(2)) chunk += " It is known for its annual report on " + names[rng.below(nodes)] + ".";
        g.add_node(names[i], chunk);
    }
    std::vector<NodeId> endpoints;  // each node repeated once per incident edge
    auto connect = [&](NodeId a, NodeId b) {
        const char* verb = kVerbs[rng.below(std::size(kVerbs))];
        g.add_edge(a, b, names[a] + " " + verb + " " + names[b] + ".");
        endpoints.push_back(a);
        endpoints.push_back(b);
    };
    std::size_t seed_nodes = std::min(nodes, m + 1);
    for (std::size_t i = 1; i < seed_nodes; ++i) connect(static_cast<NodeId>(i), static_cast<NodeId>(i - 1));
    for (std::size_t i = seed_nodes; i < nodes; ++i) {
        std::set<NodeId> targets;
        while (targets.size() < std::min(m, i)) targets.insert(endpoints[rng.below(endpoints.size())]);
        for (NodeId t : targets) connect(static_cast<NodeId>(i), t);
    }
    g.freeze();
    return g;
}

/// Questions naming two entities of `g`.
inline std::vector<std::string> pair_queries(const IndexingGraph& g, std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    static constexpr const char* kForms[] = {"How is {a} connected to {b}?", "What links {a} and {b}?",
                                             "Describe the relationship between {a} and {b}.",
                                             "Why does {a} matter for {b}?"};
    std::vector<std::string> out;
    for (std::size_t i = 0; i < count && g.node_count() >= 2; ++i) {
        auto a = rng.below(g.node_count());
        auto b = rng.below(g.node_count() - 1);
        if (b >= a) ++b;
        std::string q = kForms[rng.below(std::size(kForms))];
        q.replace(q.find("{a}"), 3, g.node(static_cast<NodeId>(a)).identifier);
        q.replace(q.find("{b}"), 3, g.node(static_cast<NodeId>(b)).identifier);
        out.push_back(q);
    }
    return out;
}

/// Prose documents over a shared pool of entity names, so the extracted
/// graph is connected across documents.
inline std::vector<Document> corpus(std::size_t documents, std::size_t sentences_per_doc, std::size_t entities,
                                    std::uint64_t seed) {
    Rng rng(seed);
    auto names = entity_names(entities, rng);
    std::vector<Document> docs;
    for (std::size_t d = 0; d < documents; ++d) {
        std::string text;
        for (std::size_t s = 0; s < sentences_per_doc; ++s) {
            auto a = rng.below(entities);
            auto b = rng.below(entities - 1);
            if (b >= a) ++b;
            if (!text.empty()) text += ' ';
            text += names[a] + " " + kVerbs[rng.below(std::size(kVerbs))] + " " + names[b] + ".";
            if (rng.below(3) == 0) text += " " + names[a] + " is a " + kKinds[rng.below(std::size(kKinds))] + ".";
        }
        char id[32];
        std::snprintf(id, sizeof(id), "doc%02zu.txt", d);
        docs.push_back({id, text + "\n"});
    }
    return docs;
}

}  // namespace pathrag::synthetic
