// Builds a small graph in memory, retrieves paths for one question and prints
// the prompt and the mock answer.

#include <pathrag/pathrag.hpp>

#include <iostream>

int main() {
    using namespace pathrag;

    IndexingGraph g(/*bidirectional=*/false);
    auto alice = g.add_node("Alice", "Alice is a botanist who studies drought-resistant wheat.");
    auto acme = g.add_node("Acme Seeds", "Acme Seeds is a seed company in Kansas.");
    auto bob = g.add_node("Bob", "Bob runs field trials for new wheat varieties.");
    auto kansas = g.add_node("Kansas", "Kansas had a severe drought in 2022.");
    g.add_edge(alice, acme, "Alice consults for Acme Seeds.");
    g.add_edge(acme, bob, "Acme Seeds employs Bob.");
    g.add_edge(alice, kansas, "Alice collects samples in Kansas.");
    g.add_edge(kansas, bob, "Bob's trial plots are in Kansas.");
    g.freeze();

    MockEmbedder embedder;
    MockKeywordExtractor keywords;
    MockGenerator generator;
    auto index = build_node_index(g, embedder);

    RetrievalConfig config;
    config.top_k = 6;
    auto result = run_query("How does Alice's work reach Bob?", g, index, config, keywords, embedder, generator);

    for (const auto& p : result.retrieval.paths.paths) {
        for (std::size_t i = 0; i < p.nodes.size(); ++i) std::cout << (i ? " -> " : "") << g.node(p.nodes[i]).identifier;
        std::cout << "  (" << format_reliability(p.reliability) << ")\n";
    }
    std::cout << "\n" << result.retrieval.bundle.prompt << "\n\n" << result.answer.text << "\n";
}
