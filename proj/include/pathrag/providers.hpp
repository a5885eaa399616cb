#pragma once

// Generator contract shared by the three model roles (answer generation,
// keyword extraction, entity extraction), plus the offline mock and the
// retry/rate-limit machinery. Nothing in this header opens a connection;
// the HTTP backends live in http_providers.hpp.

#include <pathrag/error.hpp>
#include <pathrag/text.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

namespace pathrag {

struct ProviderConfig {
    std::string endpoint;
    std::string model;
    std::string api_key_env;
    int max_retries = 3;
    std::chrono::milliseconds timeout{60000};
    double rate_limit_rpm = 0.0;  // <= 0 disables limiting
    std::size_t context_tokens = 128000;
    std::chrono::milliseconds initial_backoff{500};
    std::size_t max_in_flight = 4;

    void validate() const {
        if (max_retries < 0) throw Error(Errc::ConfigError, "max_retries must be >= 0");
        if (timeout.count() <= 0) throw Error(Errc::ConfigError, "timeout must be > 0");
        if (context_tokens == 0) throw Error(Errc::ConfigError, "context_tokens must be > 0");
    }
};

struct GenerationResult {
    std::string text;
    std::optional<std::size_t> prompt_tokens;
    std::optional<std::size_t> completion_tokens;
    std::chrono::milliseconds latency{0};
    int attempts = 1;
};

class Generator {
public:
    virtual ~Generator() = default;
    virtual GenerationResult generate(const std::string& prompt) = 0;
    virtual std::string tag() const = 0;
};

/// Throws ContextOverflow when the prompt estimate exceeds the limit.
inline void check_context(const std::string& prompt, std::size_t limit) {
    auto tokens = token_count(prompt);
    if (tokens > limit) {
        throw Error(Errc::ContextOverflow, "prompt has ~" + std::to_string(tokens) +
                                               " tokens, context limit is " + std::to_string(limit));
    }
}

/// Echoes "MOCK:" followed by the first 200 characters of the prompt.
class MockGenerator final : public Generator {
public:
    explicit MockGenerator(std::size_t context_tokens = 128000) : context_tokens_(context_tokens) {}

    GenerationResult generate(const std::string& prompt) override {
        check_context(prompt, context_tokens_);
        GenerationResult result;
        result.text = "MOCK:" + utf8_prefix(prompt, 200);
        result.prompt_tokens = token_count(prompt);
        result.completion_tokens = token_count(result.text);
        return result;
    }

    std::string tag() const override { return "mock"; }

private:
    std::size_t context_tokens_;
};

// ---------------------------------------------------------------------------
// Retry policy

/// Classification of a single attempt, produced by the backend.
enum class AttemptOutcome { Success, Transient, Fatal };

/// Runs `attempt` up to 1 + max_retries times with exponential backoff
/// (initial_backoff * 2^k) between transient failures. `attempt` receives the
/// 1-based attempt number and returns its outcome; on exhaustion a
/// ProviderFailure carrying the attempt count is thrown.
template <typename Attempt, typename Sleep = void (*)(std::chrono::milliseconds)>
int run_with_retries(const ProviderConfig& config, Attempt&& attempt,
                     Sleep sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
    std::string last_error;
    const int total = 1 + std::max(0, config.max_retries);
    for (int n = 1; n <= total; ++n) {
        AttemptOutcome outcome = attempt(n, last_error);
        if (outcome == AttemptOutcome::Success) return n;
        if (outcome == AttemptOutcome::Fatal) {
            Error err(Errc::ProviderFailure, last_error);
            err.with_attempts(n);
            throw err;
        }
        if (n < total) {
            auto factor = static_cast<long long>(1) << std::min(n - 1, 16);
            sleep(std::chrono::milliseconds(config.initial_backoff.count() * factor));
        }
    }
    Error err(Errc::ProviderFailure, "gave up after " + std::to_string(total) + " attempts: " + last_error);
    err.with_attempts(total);
    throw err;
}

// ---------------------------------------------------------------------------
// Rate limiting

/// Token bucket admitting `rate_per_minute` requests per minute with bursts up
/// to `burst`. Shared by all threads using one provider.
class TokenBucket {
public:
    using Clock = std::chrono::steady_clock;

    explicit TokenBucket(double rate_per_minute, double burst = 1.0)
        : rate_per_sec_(rate_per_minute / 60.0),
          capacity_(std::max(1.0, burst)),
          tokens_(capacity_),
          last_(Clock::now()) {}

    bool unlimited() const noexcept { return rate_per_sec_ <= 0.0; }

    bool try_acquire(Clock::time_point now) {
        if (unlimited()) return true;
        std::lock_guard lock(mutex_);
        refill(now);
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return true;
        }
        return false;
    }

    /// Time until a token becomes available (zero if one is available now).
    Clock::duration wait_time(Clock::time_point now) {
        if (unlimited()) return Clock::duration::zero();
        std::lock_guard lock(mutex_);
        refill(now);
        if (tokens_ >= 1.0) return Clock::duration::zero();
        auto secs = (1.0 - tokens_) / rate_per_sec_;
        return std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(secs));
    }

    void acquire() {
        while (!try_acquire(Clock::now())) {
            std::this_thread::sleep_for(wait_time(Clock::now()));
        }
    }

private:
    void refill(Clock::time_point now) {
        if (now <= last_) return;
        double elapsed = std::chrono::duration<double>(now - last_).count();
        tokens_ = std::min(capacity_, tokens_ + elapsed * rate_per_sec_);
        last_ = now;
    }

    double rate_per_sec_;
    double capacity_;
    double tokens_;
    Clock::time_point last_;
    std::mutex mutex_;
};

/// Counting semaphore bounding concurrent in-flight requests.
class InFlightGate {
public:
    explicit InFlightGate(std::size_t limit) : limit_(std::max<std::size_t>(1, limit)) {}

    void enter() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return active_ < limit_; });
        ++active_;
    }
    void leave() {
        {
            std::lock_guard lock(mutex_);
            --active_;
        }
        cv_.notify_one();
    }

private:
    std::size_t limit_;
    std::size_t active_ = 0;
    std::mutex mutex_;
    std::condition_variable cv_;
};

}  // namespace pathrag
