#pragma once

// Turns retrieved paths into text and lays them out in the generator prompt:
// query first, then paths from least to most reliable so the strongest
// evidence sits at the end of the context.

#include <pathrag/error.hpp>
#include <pathrag/graph_store.hpp>
#include <pathrag/path_types.hpp>
#include <pathrag/text.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace pathrag {

inline constexpr std::string_view kSegmentDelimiter = " | ";
inline constexpr std::string_view kEmptyRelation = "related to";

struct PathSegment {
    enum class Kind { Node, Edge };
    Kind kind = Kind::Node;
    std::uint32_t element = 0;  // node id, or primary edge id for edges
    std::string label;          // identifier, or "src -> dst"
    std::string text;           // rendered segment
};

struct TextualPath {
    std::string text;
    double reliability = 0.0;
    RelationalPath source_path;
    std::vector<PathSegment> segments;
    std::size_t token_estimate = 0;
};

/// "k_v0: t_v0 | t_e0 | k_v1: t_v1 | ..."; empty relation chunks render as
/// "related to". Chunk whitespace (including merge newlines) collapses to
/// single spaces so each path is one line.
inline TextualPath textualize_path(const RelationalPath& path, const IndexingGraph& graph,
                                   const TokenCounter& counter = default_token_counter()) {
    try {
        validate_path(path, graph);
    } catch (const Error& e) {
        throw Error(Errc::UnknownElement, std::string("path is not valid in this graph: ") + e.what());
    }
    TextualPath out;
    out.reliability = path.reliability;
    out.source_path = path;
    for (std::size_t i = 0; i < path.nodes.size(); ++i) {
        const Node& n = graph.node(path.nodes[i]);
        std::string chunk = squeeze_spaces(n.chunk);
        out.segments.push_back({PathSegment::Kind::Node, n.id, n.identifier,
                                chunk.empty() ? n.identifier : n.identifier + ": " + chunk});
        if (i < path.edges.size()) {
            const Edge& e = graph.edge(path.edges[i]);
            std::string rel = squeeze_spaces(e.chunk);
            out.segments.push_back({PathSegment::Kind::Edge, e.twin_of.value_or(e.id),
                                    graph.node(e.src).identifier + " -> " + graph.node(e.dst).identifier,
                                    rel.empty() ? std::string(kEmptyRelation) : rel});
        }
    }
    for (std::size_t i = 0; i < out.segments.size(); ++i) {
        if (i) out.text += kSegmentDelimiter;
        out.text += out.segments[i].text;
    }
    out.token_estimate = counter(out.text);
    return out;
}

/// Prompt layout with {query} and {paths} placeholders, {query} first.
class PromptTemplate {
public:
    static constexpr std::string_view kDefault =
        "{query}\n\n"
        "---\n"
        "Answer the question above using the relational paths below. Each path alternates entities "
        "and the relations between them, separated by \" | \". Paths are listed in ascending order of "
        "reliability: the last path is the most reliable.\n"
        "---\n\n"
        "{paths}";

    PromptTemplate() : text_(kDefault) {}
    explicit PromptTemplate(std::string text) : text_(std::move(text)) { validate(); }

    static PromptTemplate from_file(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error(Errc::IoFailure, "cannot open template " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return PromptTemplate(ss.str());
    }

    const std::string& text() const noexcept { return text_; }

    std::string render(std::string_view query, std::string_view paths) const {
        auto q = text_.find("{query}");
        auto p = text_.find("{paths}");
        std::string out;
        out.reserve(text_.size() + query.size() + paths.size());
        out.append(text_, 0, q);
        out.append(query);
        out.append(text_, q + 7, p - q - 7);
        out.append(paths);
        out.append(text_, p + 7);
        return out;
    }

private:
    void validate() const {
        auto q = text_.find("{query}");
        auto p = text_.find("{paths}");
        if (q == std::string::npos || p == std::string::npos) {
            throw Error(Errc::ConfigError, "template needs {query} and {paths} placeholders");
        }
        if (text_.find("{query}", q + 1) != std::string::npos || text_.find("{paths}", p + 1) != std::string::npos) {
            throw Error(Errc::ConfigError, "template placeholders must appear once");
        }
        if (q > p) throw Error(Errc::ConfigError, "{query} must precede {paths} in the template");
    }

    std::string text_;
};

enum class OrderMode { Ascending, Random, HopFirst };
enum class FormatMode { Path, Flat };

struct AssemblyOptions {
    OrderMode order = OrderMode::Ascending;
    FormatMode format = FormatMode::Path;
    std::uint64_t seed = 0;
    TokenCounter counter = default_token_counter();
};

struct DroppedPath {
    TextualPath path;
    std::string reason;
};

struct PromptBundle {
    std::string prompt;
    std::string context;                // what replaced {paths}
    std::vector<TextualPath> included;  // as placed in the prompt
    std::vector<DroppedPath> dropped;
    std::size_t total_tokens = 0;
    bool fallback = false;                  // node-chunk prompt, no paths
    std::vector<NodeId> fallback_nodes;     // as placed
    std::vector<NodeId> dropped_nodes;
};

inline std::string format_reliability(double r) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", r);
    return buf;
}

namespace detail {

// `placed` is in prompt order; `rank_of[i]` is the 1-based reliability rank.
inline std::string render_path_block(const std::vector<const TextualPath*>& placed,
                                     const std::vector<std::size_t>& rank_of) {
    std::string out;
    for (std::size_t i = 0; i < placed.size(); ++i) {
        if (i) out += "\n\n";
        out += "Path " + std::to_string(rank_of[i]) + " (reliability=" + format_reliability(placed[i]->reliability) +
               "):\n";
        out += placed[i]->text;
    }
    return out;
}

// Node and edge chunks deduplicated into two sections, in placement order.
inline std::string render_flat_block(const std::vector<const TextualPath*>& placed) {
    std::set<std::uint32_t> seen_nodes, seen_edges;
    std::string entities, relations;
    for (const TextualPath* p : placed) {
        for (const auto& seg : p->segments) {
            if (seg.kind == PathSegment::Kind::Node) {
                if (seen_nodes.insert(seg.element).second) entities += "- " + seg.text + "\n";
            } else if (seen_edges.insert(seg.element).second) {
                relations += "- " + seg.label + ": " + seg.text + "\n";
            }
        }
    }
    if (placed.empty()) return {};
    std::string out = "Entities:\n" + entities + "\nRelationships:\n" + relations;
    out.pop_back();
    return out;
}

inline std::string render_block(const std::vector<const TextualPath*>& placed, const std::vector<std::size_t>& ranks,
                                 FormatMode format) {
    return format == FormatMode::Path ? render_path_block(placed, ranks) : render_flat_block(placed);
}

}  // namespace detail

/// Lays out `paths` (any order) under `budget_tokens`. Selection is by
/// reliability: the least reliable paths are dropped first until the prompt
/// fits. Placement then follows `options.order`; in the default ascending
/// mode the most reliable path is the last thing in the prompt.
inline PromptBundle assemble_prompt(const std::string& query, std::vector<TextualPath> paths,
                                    std::size_t budget_tokens, const PromptTemplate& tmpl = {},
                                    const AssemblyOptions& options = {}) {
    if (trim(query).empty()) throw Error(Errc::EmptyQuery, "query is empty");
    const auto& count = options.counter;
    if (count(tmpl.render(query, "")) > budget_tokens) {
        throw Error(Errc::BudgetTooSmall, "budget of " + std::to_string(budget_tokens) +
                                              " tokens does not fit the query and template");
    }

    std::sort(paths.begin(), paths.end(), [](const TextualPath& a, const TextualPath& b) {
        return ranks_before(a.source_path, b.source_path);
    });

    PromptBundle bundle;
    // Ascending placement of the best `n` ranked paths.
    auto ascending = [&](std::size_t n, std::vector<const TextualPath*>& placed, std::vector<std::size_t>& ranks) {
        placed.clear();
        ranks.clear();
        for (std::size_t r = n; r-- > 0;) {
            placed.push_back(&paths[r]);
            ranks.push_back(r + 1);
        }
    };

    std::vector<const TextualPath*> placed;
    std::vector<std::size_t> ranks;
    std::size_t keep = paths.size();
    while (keep > 0) {
        ascending(keep, placed, ranks);
        if (count(tmpl.render(query, detail::render_block(placed, ranks, options.format))) <= budget_tokens) break;
        --keep;
    }
    if (keep == 0 && !paths.empty()) {
        throw Error(Errc::BudgetTooSmall, "budget of " + std::to_string(budget_tokens) +
                                              " tokens cannot hold the query and the most reliable path");
    }
    for (std::size_t r = keep; r < paths.size(); ++r) bundle.dropped.push_back({paths[r], "budget"});

    ascending(keep, placed, ranks);
    if (options.order != OrderMode::Ascending && placed.size() > 1) {
        std::vector<std::size_t> idx(placed.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        if (options.order == OrderMode::Random) {
            std::mt19937_64 rng(options.seed);
            for (std::size_t i = idx.size() - 1; i > 0; --i) std::swap(idx[i], idx[rng() % (i + 1)]);
        } else {
            // Fewest hops first; among equal hop counts, ascending reliability.
            std::stable_sort(idx.begin(), idx.end(),
                             [&](std::size_t a, std::size_t b) { return placed[a]->source_path.hops() < placed[b]->source_path.hops(); });
        }
        std::vector<const TextualPath*> p2;
        std::vector<std::size_t> r2;
        for (std::size_t i : idx) {
            p2.push_back(placed[i]);
            r2.push_back(ranks[i]);
        }
        placed = std::move(p2);
        ranks = std::move(r2);
    }

    bundle.context = detail::render_block(placed, ranks, options.format);
    bundle.prompt = tmpl.render(query, bundle.context);
    for (const TextualPath* p : placed) bundle.included.push_back(*p);
    bundle.total_tokens = count(bundle.prompt);
    return bundle;
}

/// Prompt used when no paths connect the retrieved nodes: node descriptions in
/// the given (similarity) order, least similar dropped first to fit.
inline PromptBundle assemble_fallback_prompt(const std::string& query, const IndexingGraph& graph,
                                             const std::vector<NodeId>& by_similarity, std::size_t budget_tokens,
                                             const PromptTemplate& tmpl = {},
                                             const TokenCounter& counter = default_token_counter()) {
    if (trim(query).empty()) throw Error(Errc::EmptyQuery, "query is empty");
    auto block_for = [&](std::size_t n) {
        std::string block;
        if (n > 0) block = "No relational paths connect the retrieved entities. Their descriptions follow, most relevant first.\n";
        for (std::size_t i = 0; i < n; ++i) {
            const Node& node = graph.node(by_similarity[i]);
            std::string chunk = squeeze_spaces(node.chunk);
            block += "- " + (chunk.empty() ? node.identifier : node.identifier + ": " + chunk);
            if (i + 1 < n) block += "\n";
        }
        return block;
    };
    auto render = [&](std::size_t n) { return tmpl.render(query, block_for(n)); };
    std::size_t keep = by_similarity.size();
    while (keep > 0 && counter(render(keep)) > budget_tokens) --keep;
    PromptBundle bundle;
    bundle.fallback = true;
    bundle.context = block_for(keep);
    bundle.prompt = tmpl.render(query, bundle.context);
    bundle.total_tokens = counter(bundle.prompt);
    if (bundle.total_tokens > budget_tokens) {
        throw Error(Errc::BudgetTooSmall, "budget of " + std::to_string(budget_tokens) +
                                              " tokens does not fit the query and template");
    }
    bundle.fallback_nodes.assign(by_similarity.begin(), by_similarity.begin() + static_cast<std::ptrdiff_t>(keep));
    bundle.dropped_nodes.assign(by_similarity.begin() + static_cast<std::ptrdiff_t>(keep), by_similarity.end());
    return bundle;
}

}  // namespace pathrag
