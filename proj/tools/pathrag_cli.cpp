// pathrag: build-index | embed | retrieve | query | bench
//
// Settings come from built-in defaults, then --config FILE, then flags.

#include <pathrag/commands.hpp>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <iostream>
#include <optional>
#include <string>

namespace {

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> top_n, top_k, per_pair, max_explored, budget, chunk_tokens, chunk_overlap, threads;
    std::optional<double> alpha, theta;
    std::optional<std::string> order, format, node_mode, extractor, keyword_extractor, embedder, generator, tmpl;
    std::optional<bool> bidirectional, embed_chunks;

    pathrag::RetrievalConfig resolve() const {
        pathrag::RetrievalConfig c;
        if (!config_path.empty()) c = pathrag::load_config(config_path, c);
        if (seed) c.seed = *seed;
        if (top_n) c.n_nodes = *top_n;
        if (top_k) c.top_k = *top_k;
        if (per_pair) c.per_pair = *per_pair;
        if (max_explored) c.max_explored = *max_explored;
        if (budget) c.budget_tokens = *budget;
        if (chunk_tokens) c.chunk_tokens = *chunk_tokens;
        if (chunk_overlap) c.chunk_overlap = *chunk_overlap;
        if (threads) c.threads = *threads;
        if (alpha) c.alpha = *alpha;
        if (theta) c.theta = *theta;
        if (order) c.order = pathrag::parse_order_mode(*order);
        if (format) c.format = pathrag::parse_format_mode(*format);
        if (node_mode) c.node_mode = pathrag::parse_node_mode(*node_mode);
        if (extractor) c.extractor = *extractor;
        if (keyword_extractor) c.keyword_extractor = *keyword_extractor;
        if (embedder) c.embedder = *embedder;
        if (generator) c.generator = *generator;
        if (tmpl) c.template_path = *tmpl;
        if (bidirectional) c.bidirectional = *bidirectional;
        if (embed_chunks) c.embed_chunks = *embed_chunks;
        return c;
    }
};

void add_common(CLI::App* cmd, Overrides& o, pathrag::OutputOptions& out) {
    cmd->add_option("--config", o.config_path, "TOML-style config file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "seed for randomized modes");
    cmd->add_option("--embedder", o.embedder, "mock|http");
    cmd->add_option("--threads", o.threads, "worker threads");
    cmd->add_flag("--embed-chunks,!--no-embed-chunks", o.embed_chunks, "embed identifier plus chunk text");
    cmd->add_flag("--json", out.json, "machine-readable output");
}

void add_retrieval(CLI::App* cmd, Overrides& o, pathrag::OutputOptions& out) {
    cmd->add_option("--top-n", o.top_n, "retrieved nodes N");
    cmd->add_option("--top-k", o.top_k, "paths kept K");
    cmd->add_option("--alpha", o.alpha, "decay rate");
    cmd->add_option("--theta", o.theta, "pruning threshold");
    cmd->add_option("--per-pair", o.per_pair, "paths kept per node pair");
    cmd->add_option("--max-explored", o.max_explored, "DFS expansion cap per pair");
    cmd->add_option("--budget", o.budget, "prompt token budget");
    cmd->add_option("--order", o.order, "ascending|random|hop-first");
    cmd->add_option("--format", o.format, "path|flat");
    cmd->add_option("--node-mode", o.node_mode, "round-robin|global-pool");
    cmd->add_option("--keyword-extractor", o.keyword_extractor, "mock|llm");
    cmd->add_option("--generator", o.generator, "mock|http");
    cmd->add_option("--template", o.tmpl, "prompt template file with {query} and {paths}");
    cmd->add_option("--dump-prompt", out.dump_prompt, "write the assembled prompt(s) to FILE ('-' for stdout)");
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("pathrag"));
    spdlog::set_level(spdlog::level::warn);

    CLI::App app{"PathRAG: graph-based retrieval with flow-pruned relational paths"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "debug logging (request bodies, keys redacted)");

    Overrides o;
    pathrag::OutputOptions out;
    std::string corpus, graph, query, queries;

    auto* build = app.add_subcommand("build-index", "extract a graph from a corpus and embed its nodes");
    build->add_option("corpus", corpus, "directory of .txt files")->required();
    build->add_option("-o,--out", graph, "graph file to write")->required();
    build->add_option("--extractor", o.extractor, "mock|llm");
    build->add_flag("--bidirectional,!--no-bidirectional", o.bidirectional, "materialize reverse edges");
    build->add_option("--chunk-tokens", o.chunk_tokens, "chunk size in tokens");
    build->add_option("--chunk-overlap", o.chunk_overlap, "chunk overlap in tokens");
    add_common(build, o, out);

    auto* embed = app.add_subcommand("embed", "rebuild the embedding sidecar of a graph file");
    embed->add_option("graph", graph, "graph file")->required();
    add_common(embed, o, out);

    auto* retrieve = app.add_subcommand("retrieve", "print the top-K relational paths for a query");
    retrieve->add_option("query", query, "question")->required();
    retrieve->add_option("-g,--graph", graph, "graph file")->required();
    retrieve->add_flag("--explain", out.explain, "propagation and scoring diagnostics");
    add_common(retrieve, o, out);
    add_retrieval(retrieve, o, out);

    auto* ask = app.add_subcommand("query", "answer a query with the configured generator");
    ask->add_option("query", query, "question")->required();
    ask->add_option("-g,--graph", graph, "graph file")->required();
    ask->add_option("--diagnostics", out.diagnostics, "diagnostics JSON path (default <graph>.query.json)");
    ask->add_flag("--explain", out.explain, "report where diagnostics went");
    add_common(ask, o, out);
    add_retrieval(ask, o, out);

    auto* bench = app.add_subcommand("bench", "token cost of PathRAG, PathRAG-lt and the ego-network baseline");
    bench->add_option("queries", queries, "file with one query per line")->required();
    bench->add_option("-g,--graph", graph, "graph file")->required();
    add_common(bench, o, out);
    add_retrieval(bench, o, out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    if (verbose) spdlog::set_level(spdlog::level::debug);

    pathrag::RetrievalConfig config;
    try {
        config = o.resolve();
    } catch (const pathrag::Error& e) {
        std::cerr << "error: " << e.describe() << '\n';
        return pathrag::exit_code_for(e.code());
    }

    if (*build) return pathrag::cmd_build_index(corpus, graph, config, out, std::cout, std::cerr);
    if (*embed) return pathrag::cmd_embed(graph, config, std::cout, std::cerr);
    if (*retrieve) return pathrag::cmd_retrieve(query, graph, config, out, std::cout, std::cerr);
    if (*ask) return pathrag::cmd_query(query, graph, config, out, std::cout, std::cerr);
    return pathrag::cmd_bench(queries, graph, config, out, std::cout, std::cerr);
}
