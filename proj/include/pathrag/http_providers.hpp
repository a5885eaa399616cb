#pragma once

// HTTP backends for generation and embeddings (chat-completions and
// embeddings JSON wire formats). This is the only header in the library that
// opens network connections; every request goes through http_post() and is
// counted by network_request_count().

#include <pathrag/embedding_index.hpp>
#include <pathrag/error.hpp>
#include <pathrag/providers.hpp>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace pathrag {

inline std::atomic<std::size_t>& network_request_counter() {
    static std::atomic<std::size_t> counter{0};
    return counter;
}

inline std::size_t network_request_count() { return network_request_counter().load(); }

struct HttpRequest {
    std::string url;
    std::string body;
    std::vector<std::pair<std::string, std::string>> headers;
    std::chrono::milliseconds timeout{60000};
};

struct HttpResponse {
    int status = 0;  // 0: no response (connection error, timeout)
    std::string body;
    std::string error;
};

using HttpTransport = std::function<HttpResponse(const HttpRequest&)>;

struct ParsedUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

inline ParsedUrl parse_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error(Errc::ConfigError, "endpoint '" + url + "' has no scheme");
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

inline std::string redact_headers(const std::vector<std::pair<std::string, std::string>>& headers) {
    std::string out;
    for (const auto& [k, v] : headers) {
        if (!out.empty()) out += ", ";
        bool secret = k == "Authorization" || k == "api-key" || k == "x-api-key";
        out += k + ": " + (secret ? std::string("<redacted>") : v);
    }
    return out;
}

/// POST via cpp-httplib.
inline HttpResponse http_post(const HttpRequest& req) {
    ++network_request_counter();
    auto url = parse_url(req.url);
    spdlog::debug("POST {} [{}] body={}", req.url, redact_headers(req.headers), req.body);
    httplib::Client client(url.origin);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(req.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(req.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    for (const auto& [k, v] : req.headers) headers.emplace(k, v);
    auto res = client.Post(url.path, headers, req.body, "application/json");
    HttpResponse out;
    if (!res) {
        out.error = httplib::to_string(res.error());
        return out;
    }
    out.status = res->status;
    out.body = res->body;
    spdlog::debug("<- {} {} bytes", out.status, out.body.size());
    return out;
}

namespace detail {

inline std::vector<std::pair<std::string, std::string>> auth_headers(const ProviderConfig& config) {
    std::vector<std::pair<std::string, std::string>> headers;
    if (config.api_key_env.empty()) return headers;
    const char* key = std::getenv(config.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
        throw Error(Errc::AuthFailure, "environment variable " + config.api_key_env + " is not set");
    }
    headers.emplace_back("Authorization", std::string("Bearer ") + key);
    return headers;
}

inline bool transient_status(int status) {
    return status == 0 || status == 408 || status == 409 || status == 429 || status >= 500;
}

/// Sends `body` with retries; returns the successful response body.
inline std::string post_with_retries(const ProviderConfig& config, const HttpTransport& transport, TokenBucket& bucket,
                                     InFlightGate& gate, const std::string& body, int& attempts) {
    HttpRequest req{config.endpoint, body, auth_headers(config), config.timeout};
    std::string payload;
    attempts = run_with_retries(config, [&](int, std::string& last_error) {
        bucket.acquire();
        gate.enter();
        HttpResponse res;
        try {
            res = transport(req);
        } catch (...) {
            gate.leave();
            throw;
        }
        gate.leave();
        if (res.status == 200) {
            payload = std::move(res.body);
            return AttemptOutcome::Success;
        }
        if (res.status == 401 || res.status == 403) {
            throw Error(Errc::AuthFailure, "endpoint rejected credentials (HTTP " + std::to_string(res.status) + ")");
        }
        last_error = res.status == 0 ? "connection failed: " + res.error
                                     : "HTTP " + std::to_string(res.status) + ": " + res.body.substr(0, 200);
        return transient_status(res.status) ? AttemptOutcome::Transient : AttemptOutcome::Fatal;
    });
    return payload;
}

}  // namespace detail

/// Chat-completions generator.
class HttpGenerator final : public Generator {
public:
    explicit HttpGenerator(ProviderConfig config, HttpTransport transport = http_post)
        : config_(std::move(config)),
          transport_(std::move(transport)),
          bucket_(config_.rate_limit_rpm, std::max(1.0, config_.rate_limit_rpm / 60.0)),
          gate_(config_.max_in_flight) {
        config_.validate();
    }

    GenerationResult generate(const std::string& prompt) override {
        check_context(prompt, config_.context_tokens);
        nlohmann::json body = {{"model", config_.model},
                               {"messages", {{{"role", "user"}, {"content", prompt}}}}};
        auto start = std::chrono::steady_clock::now();
        GenerationResult result;
        auto payload = detail::post_with_retries(config_, transport_, bucket_, gate_, body.dump(), result.attempts);
        result.latency =
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
        try {
            auto json = nlohmann::json::parse(payload);
            result.text = json.at("choices").at(0).at("message").at("content").get<std::string>();
            if (auto usage = json.find("usage"); usage != json.end() && usage->is_object()) {
                if (usage->contains("prompt_tokens")) result.prompt_tokens = usage->at("prompt_tokens").get<std::size_t>();
                if (usage->contains("completion_tokens")) {
                    result.completion_tokens = usage->at("completion_tokens").get<std::size_t>();
                }
            }
        } catch (const nlohmann::json::exception& e) {
            Error err(Errc::ProviderFailure, std::string("unexpected completion response: ") + e.what());
            err.with_attempts(result.attempts);
            throw err;
        }
        return result;
    }

    std::string tag() const override { return "http:" + config_.model; }

private:
    ProviderConfig config_;
    HttpTransport transport_;
    TokenBucket bucket_;
    InFlightGate gate_;
};

/// Embeddings endpoint client ({"model", "input": [...]} -> data[].embedding).
class HttpEmbedder final : public Embedder {
public:
    HttpEmbedder(ProviderConfig config, std::size_t dimension, HttpTransport transport = http_post)
        : config_(std::move(config)),
          dim_(dimension),
          transport_(std::move(transport)),
          bucket_(config_.rate_limit_rpm, std::max(1.0, config_.rate_limit_rpm / 60.0)),
          gate_(config_.max_in_flight) {
        config_.validate();
    }

    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) override {
        nlohmann::json body = {{"model", config_.model}, {"input", std::vector<std::string>(texts.begin(), texts.end())}};
        int attempts = 0;
        auto payload = detail::post_with_retries(config_, transport_, bucket_, gate_, body.dump(), attempts);
        std::vector<EmbeddingVector> out(texts.size());
        try {
            auto json = nlohmann::json::parse(payload);
            const auto& data = json.at("data");
            if (data.size() != texts.size()) throw Error(Errc::ProviderFailure, "embedding count mismatch");
            for (std::size_t i = 0; i < data.size(); ++i) {
                std::size_t slot = data[i].contains("index") ? data[i].at("index").get<std::size_t>() : i;
                if (slot >= out.size()) throw Error(Errc::ProviderFailure, "embedding index out of range");
                out[slot].values = data[i].at("embedding").get<std::vector<double>>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::ProviderFailure, std::string("unexpected embeddings response: ") + e.what());
        }
        return out;
    }

    std::size_t dimension() const override { return dim_; }
    std::string tag() const override { return "http:" + config_.model + ":d" + std::to_string(dim_); }

private:
    ProviderConfig config_;
    std::size_t dim_;
    HttpTransport transport_;
    TokenBucket bucket_;
    InFlightGate gate_;
};

}  // namespace pathrag
