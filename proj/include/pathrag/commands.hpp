#pragma once

// Subcommand bodies for the pathrag CLI. Each returns a process exit status
// and writes to caller-supplied streams, so tests can drive them in-process.

#include <pathrag/baselines.hpp>
#include <pathrag/config.hpp>
#include <pathrag/embedding_index.hpp>
#include <pathrag/error.hpp>
#include <pathrag/graph_store.hpp>
#include <pathrag/http_providers.hpp>
#include <pathrag/ingestion.hpp>
#include <pathrag/node_retrieval.hpp>
#include <pathrag/path_retrieval.hpp>
#include <pathrag/pipeline.hpp>
#include <pathrag/providers.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

namespace pathrag {

struct Providers {
    std::unique_ptr<Generator> llm;  // backs the llm extractors; created on demand
    std::unique_ptr<Generator> generator;
    std::unique_ptr<Embedder> embedder;
    std::unique_ptr<KeywordExtractor> keywords;
    std::unique_ptr<Extractor> extractor;
};

inline bool is_remote(const std::string& name, const char* what) {
    if (name == "mock") return false;
    if (name == "llm" || name == "http") return true;
    throw Error(Errc::ConfigError, std::string(what) + " must be mock|llm|http, got '" + name + "'");
}

inline Providers make_providers(const RetrievalConfig& config) {
    Providers p;
    auto backend = [&]() -> Generator& {
        if (!p.llm) p.llm = std::make_unique<HttpGenerator>(config.generation);
        return *p.llm;
    };
    if (is_remote(config.generator, "generator")) {
        p.generator = std::make_unique<HttpGenerator>(config.generation);
    } else {
        p.generator = std::make_unique<MockGenerator>(config.generation.context_tokens);
    }
    if (is_remote(config.embedder, "embedder")) {
        p.embedder = std::make_unique<HttpEmbedder>(config.embedding, config.embedding_dim);
    } else {
        p.embedder = std::make_unique<MockEmbedder>(config.embedding_dim);
    }
    if (is_remote(config.keyword_extractor, "keyword_extractor")) {
        p.keywords = std::make_unique<LlmKeywordExtractor>(backend());
    } else {
        p.keywords = std::make_unique<MockKeywordExtractor>();
    }
    if (is_remote(config.extractor, "extractor")) {
        p.extractor = std::make_unique<LlmExtractor>(backend());
    } else {
        p.extractor = std::make_unique<MockExtractor>();
    }
    return p;
}

struct OutputOptions {
    bool json = false;
    bool explain = false;
    std::string dump_prompt;  // file path, "-" for stdout
    std::string diagnostics;  // query only; empty = <graph>.query.json
};

namespace detail {

/// Converts a library error into an exit status, printing a stage-labelled
/// message.
template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        err << "error: " << e.describe();
        if (e.attempts() > 0) err << " (after " << e.attempts() << " attempts)";
        err << '\n';
        return exit_code_for(e.code());
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << '\n';
        return 4;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: IoFailure: " << e.what() << '\n';
        return 4;
    }
}

inline void write_text(const std::string& path, const std::string& text, std::ostream& out) {
    if (path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f || !(f << text)) throw Error(Errc::IoFailure, "cannot write " + path);
}

inline std::string path_label(const RelationalPath& p, const IndexingGraph& graph) {
    std::string s;
    for (std::size_t i = 0; i < p.nodes.size(); ++i) {
        if (i) s += " -> ";
        s += graph.node(p.nodes[i]).identifier;
    }
    return s;
}

/// Per-node resources behind a path's reliability.
inline nlohmann::ordered_json score_breakdown(const RelationalPath& p, const IndexingGraph& graph,
                                              const FlowParams& flow) {
    auto rmap = propagate(graph, p.nodes.front(), flow);
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    double sum = 0.0;
    for (NodeId v : p.nodes) {
        sum += rmap.resource(v);
        nodes.push_back({{"node", graph.node(v).identifier}, {"layer", rmap.layer(v)}, {"resource", rmap.resource(v)}});
    }
    return {{"nodes", nodes}, {"resource_sum", sum}, {"edges", p.edges.size()}};
}

struct LoadedIndex {
    IndexingGraph graph;
    NodeEmbeddingIndex index;
};

inline LoadedIndex load_graph_and_index(const std::string& graph_path, const Embedder& embedder) {
    LoadedIndex out{load_graph(graph_path), {}};
    out.index = load_index(sidecar_path(graph_path));
    out.index.check_compatible(out.graph, embedder);
    return out;
}

}  // namespace detail

/// build-index: corpus directory -> graph file + embedding sidecar.
inline int cmd_build_index(const std::string& corpus_dir, const std::string& graph_path, const RetrievalConfig& config,
                           const OutputOptions& opts, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        config.validate();
        auto providers = make_providers(config);
        auto docs = load_corpus(corpus_dir);
        auto chunks = chunk_corpus(docs, {config.chunk_tokens, config.chunk_overlap});
        auto result = extract_graph(chunks, *providers.extractor, config.bidirectional, config.threads);
        result.report.documents = docs.size();
        auto bytes = save_graph(result.graph, graph_path);
        auto index = build_node_index(result.graph, *providers.embedder, config.embed_chunks);
        auto sidecar = sidecar_path(graph_path);
        save_index(index, sidecar);

        const auto& r = result.report;
        nlohmann::ordered_json report = {{"graph", graph_path},
                                         {"sidecar", sidecar.string()},
                                         {"graph_bytes", bytes},
                                         {"documents", r.documents},
                                         {"chunks", r.chunks},
                                         {"nodes", result.graph.node_count()},
                                         {"edges", result.graph.primary_edge_count()},
                                         {"edges_with_twins", result.graph.edge_count()},
                                         {"skipped_chunks", r.skipped_chunks},
                                         {"dropped_relations", r.dropped_relations},
                                         {"unparsed_lines", r.unparsed_lines},
                                         {"warnings", r.warnings},
                                         {"embedder", providers.embedder->tag()},
                                         {"config", config.to_json()}};
        if (opts.json) {
            out << report.dump(2) << '\n';
        } else {
            out << "indexed " << r.documents << " documents, " << r.chunks << " chunks\n"
                << "graph: " << graph_path << " (" << result.graph.node_count() << " nodes, "
                << result.graph.primary_edge_count() << " edges, " << bytes << " bytes)\n"
                << "sidecar: " << sidecar.string() << " (" << providers.embedder->tag() << ")\n"
                << "skipped chunks: " << r.skipped_chunks.size() << ", dropped relations: " << r.dropped_relations
                << '\n';
            for (const auto& w : r.warnings) out << "warning: " << w << '\n';
            out << "config: " << config.to_json().dump() << '\n';
        }
        return 0;
    });
}

/// embed: (re)builds the sidecar of an existing graph file.
inline int cmd_embed(const std::string& graph_path, const RetrievalConfig& config, std::ostream& out,
                     std::ostream& err) {
    return detail::guarded(err, [&] {
        config.validate();
        auto providers = make_providers(config);
        auto graph = load_graph(graph_path);
        auto index = build_node_index(graph, *providers.embedder, config.embed_chunks);
        auto sidecar = sidecar_path(graph_path);
        save_index(index, sidecar);
        out << "sidecar: " << sidecar.string() << " (" << index.size() << " nodes, " << index.provider_tag() << ")\n";
        return 0;
    });
}

/// retrieve: top-K paths for a query, no generation.
inline int cmd_retrieve(const std::string& query, const std::string& graph_path, const RetrievalConfig& config,
                        const OutputOptions& opts, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        config.validate();
        auto providers = make_providers(config);
        auto loaded = detail::load_graph_and_index(graph_path, *providers.embedder);
        const auto& graph = loaded.graph;
        auto r = retrieve_context(query, graph, loaded.index, config, *providers.keywords, *providers.embedder);
        if (!opts.dump_prompt.empty()) detail::write_text(opts.dump_prompt, r.bundle.prompt, out);

        if (opts.json) {
            auto doc = diagnostics_json(query, r, graph, config);
            if (opts.explain) {
                for (std::size_t i = 0; i < r.paths.paths.size(); ++i) {
                    doc["paths"][i]["breakdown"] = detail::score_breakdown(r.paths.paths[i], graph, config.flow());
                }
            }
            out << doc.dump(2) << '\n';
            return 0;
        }

        out << "query: " << query << '\n';
        out << "keywords:";
        for (const auto& k : r.keywords.keywords) out << " [" << k << ']';
        out << (r.keywords.used_fallback ? " (fallback)" : "") << '\n';
        out << "retrieved nodes: " << r.nodes.size() << '\n';
        if (r.paths.paths.empty()) {
            out << "no relational paths connect the retrieved nodes; the prompt falls back to "
                << r.bundle.fallback_nodes.size() << " node descriptions\n";
        } else {
            out << "paths: " << r.paths.paths.size() << " of " << r.paths.candidates << " candidates\n";
            for (std::size_t i = 0; i < r.paths.paths.size(); ++i) {
                const auto& p = r.paths.paths[i];
                out << "  " << (i + 1) << ". " << detail::path_label(p, graph)
                    << "  reliability=" << format_reliability(p.reliability) << '\n';
            }
        }
        if (opts.explain) {
            out << "propagation:\n";
            for (const auto& s : r.paths.propagations) {
                out << "  source " << graph.node(s.source).identifier << ": settled=" << s.settled
                    << " pruned=" << s.pruned << " alive per layer=[";
                for (std::size_t i = 0; i < s.frontier_history.size(); ++i) {
                    out << (i ? "," : "") << s.frontier_history[i];
                }
                out << "]\n";
            }
            for (const auto& t : r.paths.truncated_pairs) {
                out << "  truncated: " << graph.node(t.source).identifier << " -> " << graph.node(t.target).identifier
                    << " after " << t.expansions << " expansions\n";
            }
            out << "score breakdown:\n";
            for (std::size_t i = 0; i < r.paths.paths.size(); ++i) {
                auto b = detail::score_breakdown(r.paths.paths[i], graph, config.flow());
                out << "  " << (i + 1) << ".";
                for (const auto& n : b["nodes"]) {
                    out << ' ' << n["node"].get<std::string>() << '=' << format_reliability(n["resource"].get<double>());
                }
                out << "  sum=" << format_reliability(b["resource_sum"].get<double>()) << " / " << b["edges"].get<std::size_t>()
                    << " edges\n";
            }
            out << "prompt tokens: " << r.bundle.total_tokens << " of " << config.budget_tokens << ", included "
                << r.bundle.included.size() << ", dropped " << r.bundle.dropped.size() << '\n';
        }
        out << "config: " << config.to_json().dump() << '\n';
        return 0;
    });
}

/// query: full pipeline; prints the answer and writes the diagnostics file.
inline int cmd_query(const std::string& query, const std::string& graph_path, const RetrievalConfig& config,
                     const OutputOptions& opts, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        config.validate();
        auto providers = make_providers(config);
        auto loaded = detail::load_graph_and_index(graph_path, *providers.embedder);
        auto result = run_query(query, loaded.graph, loaded.index, config, *providers.keywords, *providers.embedder,
                                *providers.generator);
        if (!opts.dump_prompt.empty()) detail::write_text(opts.dump_prompt, result.retrieval.bundle.prompt, out);
        std::string diag_path = opts.diagnostics.empty() ? graph_path + ".query.json" : opts.diagnostics;
        detail::write_text(diag_path, result.diagnostics.dump(2) + "\n", out);
        if (opts.json) {
            nlohmann::ordered_json doc = {{"answer", result.answer.text},
                                          {"attempts", result.answer.attempts},
                                          {"fallback", result.retrieval.bundle.fallback},
                                          {"paths_included", result.retrieval.bundle.included.size()},
                                          {"prompt_tokens", result.retrieval.bundle.total_tokens},
                                          {"diagnostics", diag_path},
                                          {"config", config.to_json()}};
            out << doc.dump(2) << '\n';
        } else {
            out << result.answer.text << '\n';
            if (opts.explain) {
                err << "diagnostics: " << diag_path << "\nconfig: " << config.to_json().dump() << '\n';
            }
        }
        return 0;
    });
}

/// One query per non-blank line; lines starting with '#' are skipped.
inline std::vector<std::string> read_queries(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoFailure, "cannot open queries file " + path);
    std::vector<std::string> queries;
    std::string line;
    while (std::getline(in, line)) {
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        queries.emplace_back(t);
    }
    if (queries.empty()) throw Error(Errc::InvalidArgument, "queries file " + path + " has no queries");
    return queries;
}

/// bench: token-cost comparison of PathRAG, PathRAG-lt and the ego baseline.
inline int cmd_bench(const std::string& queries_path, const std::string& graph_path, const RetrievalConfig& config,
                     const OutputOptions& opts, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&] {
        config.validate();
        auto providers = make_providers(config);
        auto loaded = detail::load_graph_and_index(graph_path, *providers.embedder);
        auto queries = read_queries(queries_path);
        auto report = compare_token_cost(loaded.graph, loaded.index, queries, config, *providers.keywords,
                                         *providers.embedder);
        if (!opts.dump_prompt.empty()) {
            std::string dump;
            for (std::size_t i = 0; i < report.prompts.size(); ++i) {
                dump += "=== query " + std::to_string(i + 1) + " ===\n" + report.prompts[i] + "\n";
            }
            detail::write_text(opts.dump_prompt, dump, out);
        }
        if (opts.json) {
            auto doc = report.to_json();
            doc["queries"] = queries.size();
            out << doc.dump(2) << '\n';
        } else {
            out << "queries: " << queries.size() << '\n' << report.to_table();
            out << "config: " << config.to_json().dump() << '\n';
        }
        return 0;
    });
}

}  // namespace pathrag
