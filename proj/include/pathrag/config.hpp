#pragma once

// Run configuration shared by every CLI subcommand. The file format is a flat
// TOML subset:
//
//   # comment
//   n_nodes = 40
//   order = "ascending"
//   [generation]
//   model = "gpt-4o-mini"
//
// Keys inside a [section] are addressed as "section.key". Every key is
// optional; unknown keys are rejected.

#include <pathrag/error.hpp>
#include <pathrag/node_retrieval.hpp>
#include <pathrag/path_retrieval.hpp>
#include <pathrag/prompt_assembly.hpp>
#include <pathrag/providers.hpp>
#include <pathrag/text.hpp>

#include <nlohmann/json.hpp>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

namespace pathrag {

inline std::string_view to_string(OrderMode m) {
    switch (m) {
        case OrderMode::Ascending: return "ascending";
        case OrderMode::Random: return "random";
        case OrderMode::HopFirst: return "hop-first";
    }
    return "ascending";
}

inline std::string_view to_string(FormatMode m) { return m == FormatMode::Path ? "path" : "flat"; }

inline std::string_view to_string(NodeSelectionMode m) {
    return m == NodeSelectionMode::RoundRobin ? "round-robin" : "global-pool";
}

inline OrderMode parse_order_mode(std::string_view s) {
    if (s == "ascending") return OrderMode::Ascending;
    if (s == "random") return OrderMode::Random;
    if (s == "hop-first") return OrderMode::HopFirst;
    throw Error(Errc::ConfigError, "order must be ascending|random|hop-first, got '" + std::string(s) + "'");
}

inline FormatMode parse_format_mode(std::string_view s) {
    if (s == "path") return FormatMode::Path;
    if (s == "flat") return FormatMode::Flat;
    throw Error(Errc::ConfigError, "format must be path|flat, got '" + std::string(s) + "'");
}

inline NodeSelectionMode parse_node_mode(std::string_view s) {
    if (s == "round-robin") return NodeSelectionMode::RoundRobin;
    if (s == "global-pool") return NodeSelectionMode::GlobalPool;
    throw Error(Errc::ConfigError, "node_mode must be round-robin|global-pool, got '" + std::string(s) + "'");
}

struct RetrievalConfig {
    // Retrieval
    std::size_t n_nodes = 40;
    std::size_t top_k = 15;
    double alpha = 0.7;
    double theta = 0.05;
    std::size_t per_pair = 5;
    std::size_t max_explored = 10000;
    NodeSelectionMode node_mode = NodeSelectionMode::RoundRobin;
    std::size_t threads = 1;

    // Prompt
    std::size_t budget_tokens = 8000;
    OrderMode order = OrderMode::Ascending;
    FormatMode format = FormatMode::Path;
    std::string template_path;
    std::uint64_t seed = 0;

    // Index construction
    bool bidirectional = true;
    bool embed_chunks = false;
    std::size_t chunk_tokens = 1200;
    std::size_t chunk_overlap = 100;

    // Providers: "mock" or "llm"/"http"
    std::string extractor = "mock";
    std::string keyword_extractor = "mock";
    std::string embedder = "mock";
    std::string generator = "mock";
    std::size_t embedding_dim = 64;
    ProviderConfig generation{"https://api.openai.com/v1/chat/completions", "gpt-4o-mini", "OPENAI_API_KEY"};
    ProviderConfig embedding{"https://api.openai.com/v1/embeddings", "text-embedding-3-small", "OPENAI_API_KEY"};

    /// N=20, K=5 profile.
    static RetrievalConfig lightweight() {
        RetrievalConfig c;
        c.n_nodes = 20;
        c.top_k = 5;
        return c;
    }

    void validate() const {
        if (n_nodes < 1) throw Error(Errc::ConfigError, "n_nodes must be >= 1");
        if (top_k < 1) throw Error(Errc::ConfigError, "top_k must be >= 1");
        if (per_pair < 1) throw Error(Errc::ConfigError, "per_pair must be >= 1");
        if (max_explored < 1) throw Error(Errc::ConfigError, "max_explored must be >= 1");
        if (budget_tokens < 1) throw Error(Errc::ConfigError, "budget_tokens must be > 0");
        if (!(chunk_tokens > chunk_overlap)) throw Error(Errc::ConfigError, "chunk_tokens must exceed chunk_overlap");
        try {
            flow().validate();
        } catch (const Error& e) {
            throw Error(Errc::ConfigError, e.what());
        }
        generation.validate();
        embedding.validate();
    }

    FlowParams flow() const { return {alpha, theta}; }

    PathRetrievalConfig path_config() const {
        PathRetrievalConfig p;
        p.flow = flow();
        p.top_k = top_k;
        p.per_pair = per_pair;
        p.caps.max_paths_explored = max_explored;
        p.threads = threads;
        return p;
    }

    AssemblyOptions assembly_options() const {
        AssemblyOptions o;
        o.order = order;
        o.format = format;
        o.seed = seed;
        return o;
    }

    PromptTemplate prompt_template() const {
        return template_path.empty() ? PromptTemplate{} : PromptTemplate::from_file(template_path);
    }

    /// Applies one "key = value" assignment (value already unquoted).
    void set(std::string_view key, std::string_view value) {
        auto as_size = [&](std::string_view v) {
            std::size_t out = 0;
            auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
            if (ec != std::errc{} || p != v.data() + v.size()) bad(key, v);
            return out;
        };
        auto as_u64 = [&](std::string_view v) {
            std::uint64_t out = 0;
            auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
            if (ec != std::errc{} || p != v.data() + v.size()) bad(key, v);
            return out;
        };
        auto as_double = [&](std::string_view v) {
            try {
                std::size_t used = 0;
                double d = std::stod(std::string(v), &used);
                if (used != v.size()) bad(key, v);
                return d;
            } catch (const std::logic_error&) {
                bad(key, v);
            }
            return 0.0;
        };
        auto as_bool = [&](std::string_view v) {
            if (v == "true") return true;
            if (v == "false") return false;
            bad(key, v);
            return false;
        };
        auto provider = [&](ProviderConfig& pc, std::string_view sub) {
            if (sub == "endpoint") pc.endpoint = value;
            else if (sub == "model") pc.model = value;
            else if (sub == "api_key_env") pc.api_key_env = value;
            else if (sub == "max_retries") pc.max_retries = static_cast<int>(as_size(value));
            else if (sub == "timeout_ms") pc.timeout = std::chrono::milliseconds(as_size(value));
            else if (sub == "rate_limit_rpm") pc.rate_limit_rpm = as_double(value);
            else if (sub == "context_tokens") pc.context_tokens = as_size(value);
            else if (sub == "max_in_flight") pc.max_in_flight = as_size(value);
            else if (sub == "initial_backoff_ms") pc.initial_backoff = std::chrono::milliseconds(as_size(value));
            else return false;
            return true;
        };

        if (key == "n_nodes") n_nodes = as_size(value);
        else if (key == "top_k") top_k = as_size(value);
        else if (key == "alpha") alpha = as_double(value);
        else if (key == "theta") theta = as_double(value);
        else if (key == "per_pair") per_pair = as_size(value);
        else if (key == "max_explored") max_explored = as_size(value);
        else if (key == "node_mode") node_mode = parse_node_mode(value);
        else if (key == "threads") threads = as_size(value);
        else if (key == "budget_tokens") budget_tokens = as_size(value);
        else if (key == "order") order = parse_order_mode(value);
        else if (key == "format") format = parse_format_mode(value);
        else if (key == "template") template_path = value;
        else if (key == "seed") seed = as_u64(value);
        else if (key == "bidirectional") bidirectional = as_bool(value);
        else if (key == "embed_chunks") embed_chunks = as_bool(value);
        else if (key == "chunk_tokens") chunk_tokens = as_size(value);
        else if (key == "chunk_overlap") chunk_overlap = as_size(value);
        else if (key == "extractor") extractor = value;
        else if (key == "keyword_extractor") keyword_extractor = value;
        else if (key == "embedder") embedder = value;
        else if (key == "generator") generator = value;
        else if (key == "embedding.dim") embedding_dim = as_size(value);
        else if (key.starts_with("generation.") && provider(generation, key.substr(11))) {}
        else if (key.starts_with("embedding.") && provider(embedding, key.substr(10))) {}
        else throw Error(Errc::ConfigError, "unknown config key '" + std::string(key) + "'");
    }

    nlohmann::ordered_json to_json() const {
        auto provider = [](const ProviderConfig& pc) {
            return nlohmann::ordered_json{{"endpoint", pc.endpoint},
                                          {"model", pc.model},
                                          {"api_key_env", pc.api_key_env},
                                          {"max_retries", pc.max_retries},
                                          {"timeout_ms", pc.timeout.count()},
                                          {"rate_limit_rpm", pc.rate_limit_rpm},
                                          {"context_tokens", pc.context_tokens}};
        };
        return {{"n_nodes", n_nodes},
                {"top_k", top_k},
                {"alpha", alpha},
                {"theta", theta},
                {"per_pair", per_pair},
                {"max_explored", max_explored},
                {"node_mode", to_string(node_mode)},
                {"budget_tokens", budget_tokens},
                {"order", to_string(order)},
                {"format", to_string(format)},
                {"template", template_path},
                {"seed", seed},
                {"bidirectional", bidirectional},
                {"embed_chunks", embed_chunks},
                {"chunk_tokens", chunk_tokens},
                {"chunk_overlap", chunk_overlap},
                {"extractor", extractor},
                {"keyword_extractor", keyword_extractor},
                {"embedder", embedder},
                {"generator", generator},
                {"embedding_dim", embedding_dim},
                {"generation", provider(generation)},
                {"embedding", provider(embedding)}};
    }

private:
    [[noreturn]] static void bad(std::string_view key, std::string_view value) {
        throw Error(Errc::ConfigError, "bad value '" + std::string(value) + "' for '" + std::string(key) + "'");
    }
};

/// Applies every assignment of a config file on top of `config`.
inline void apply_config_text(RetrievalConfig& config, std::string_view text) {
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        // Strip a trailing comment that is not inside quotes.
        bool quoted = false;
        std::size_t cut = raw.size();
        for (std::size_t i = 0; i < raw.size(); ++i) {
            if (raw[i] == '"') quoted = !quoted;
            if (raw[i] == '#' && !quoted) {
                cut = i;
                break;
            }
        }
        std::string_view line = trim(raw.substr(0, cut));
        if (line.empty()) continue;
        auto fail = [&](const std::string& why) -> Error {
            Error e(Errc::ConfigError, "config line " + std::to_string(line_no) + ": " + why);
            e.with_line(line_no);
            return e;
        };
        if (line.front() == '[') {
            if (line.back() != ']') throw fail("unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string_view::npos) throw fail("expected key = value");
        std::string key(trim(line.substr(0, eq)));
        std::string_view value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        if (!section.empty()) key = section + "." + key;
        try {
            config.set(key, value);
        } catch (const Error& e) {
            throw fail(e.what());
        }
    }
}

inline RetrievalConfig load_config(const std::filesystem::path& path, RetrievalConfig base = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::ConfigError, "cannot open config file " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    apply_config_text(base, text);
    return base;
}

}  // namespace pathrag
