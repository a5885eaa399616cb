#include <pathrag/http_providers.hpp>
#include <pathrag/pipeline.hpp>

#include <gtest/gtest.h>

#include "fixtures.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>

using namespace pathrag;

namespace {

ProviderConfig local_config(std::string endpoint = "http://127.0.0.1:9/v1/chat/completions") {
    ProviderConfig c;
    c.endpoint = std::move(endpoint);
    c.model = "test-model";
    c.api_key_env = "";
    c.max_retries = 2;
    c.initial_backoff = std::chrono::milliseconds(1);
    c.timeout = std::chrono::milliseconds(2000);
    return c;
}

std::string completion(const std::string& text) {
    return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}},
                          {"usage", {{"prompt_tokens", 12}, {"completion_tokens", 3}}}}
        .dump();
}

// Replays canned responses and records requests.
struct ScriptedTransport {
    std::vector<HttpResponse> script;
    std::shared_ptr<std::vector<HttpRequest>> seen = std::make_shared<std::vector<HttpRequest>>();
    std::shared_ptr<std::size_t> next = std::make_shared<std::size_t>(0);

    HttpResponse operator()(const HttpRequest& req) const {
        seen->push_back(req);
        return script.at(std::min((*next)++, script.size() - 1));
    }
};

}  // namespace

TEST(MockGenerator, EchoesPromptPrefix) {
    MockGenerator gen;
    std::string prompt(500, 'x');
    auto r = gen.generate(prompt);
    EXPECT_EQ(r.text, "MOCK:" + std::string(200, 'x'));
    EXPECT_EQ(r.prompt_tokens, std::optional<std::size_t>(125));
    EXPECT_EQ(gen.generate("short").text, "MOCK:short");
}

TEST(MockGenerator, ContextOverflow) {
    MockGenerator small(10);
    try {
        small.generate(std::string(41, 'x'));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::ContextOverflow);
    }
}

TEST(HttpGenerator, OverflowRaisedBeforeAnyRequest) {
    ScriptedTransport t{{{200, completion("hi"), ""}}};
    auto cfg = local_config();
    cfg.context_tokens = 5;
    HttpGenerator gen(cfg, t);
    EXPECT_THROW(gen.generate(std::string(100, 'y')), Error);
    EXPECT_TRUE(t.seen->empty());
}

TEST(HttpGenerator, RetriesTransientThenSucceeds) {
    ScriptedTransport t{{{429, "slow down", ""}, {200, completion("answer"), ""}}};
    HttpGenerator gen(local_config(), t);
    auto r = gen.generate("question");
    EXPECT_EQ(r.text, "answer");
    EXPECT_EQ(r.attempts, 2);
    EXPECT_EQ(r.prompt_tokens, std::optional<std::size_t>(12));
    EXPECT_EQ(r.completion_tokens, std::optional<std::size_t>(3));
    ASSERT_EQ(t.seen->size(), 2u);
    auto body = nlohmann::json::parse(t.seen->front().body);
    EXPECT_EQ(body["model"], "test-model");
    EXPECT_EQ(body["messages"][0]["content"], "question");
}

TEST(HttpGenerator, GivesUpAfterRetriesWithAttemptCount) {
    ScriptedTransport t{{{503, "down", ""}}};
    HttpGenerator gen(local_config(), t);
    try {
        gen.generate("q");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::ProviderFailure);
        EXPECT_EQ(e.attempts(), 3);
    }
    EXPECT_EQ(t.seen->size(), 3u);
}

TEST(HttpGenerator, FatalStatusAndBadPayloadDoNotRetry) {
    ScriptedTransport bad_request{{{400, "nope", ""}}};
    HttpGenerator a(local_config(), bad_request);
    EXPECT_THROW(a.generate("q"), Error);
    EXPECT_EQ(bad_request.seen->size(), 1u);

    ScriptedTransport garbage{{{200, "{\"choices\":[]}", ""}}};
    HttpGenerator b(local_config(), garbage);
    try {
        b.generate("q");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::ProviderFailure);
        EXPECT_EQ(e.attempts(), 1);
    }
}

TEST(HttpGenerator, AuthFailures) {
    ScriptedTransport denied{{{401, "bad key", ""}}};
    HttpGenerator gen(local_config(), denied);
    try {
        gen.generate("q");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::AuthFailure);
    }

    auto cfg = local_config();
    cfg.api_key_env = "PATHRAG_TEST_UNSET_KEY";
    ::unsetenv("PATHRAG_TEST_UNSET_KEY");
    ScriptedTransport t{{{200, completion("x"), ""}}};
    HttpGenerator missing(cfg, t);
    try {
        missing.generate("q");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::AuthFailure);
        EXPECT_NE(std::string(e.what()).find("PATHRAG_TEST_UNSET_KEY"), std::string::npos);
    }
    EXPECT_TRUE(t.seen->empty());

    ::setenv("PATHRAG_TEST_KEY", "sekrit", 1);
    cfg.api_key_env = "PATHRAG_TEST_KEY";
    HttpGenerator keyed(cfg, t);
    keyed.generate("q");
    ASSERT_EQ(t.seen->size(), 1u);
    EXPECT_EQ(t.seen->front().headers.at(0).second, "Bearer sekrit");
    EXPECT_EQ(redact_headers(t.seen->front().headers), "Authorization: <redacted>");
}

TEST(HttpEmbedder, ParsesIndexedData) {
    nlohmann::json body = {{"data", {{{"index", 1}, {"embedding", {0.0, 1.0}}}, {{"index", 0}, {"embedding", {1.0, 0.0}}}}}};
    ScriptedTransport t{{{200, body.dump(), ""}}};
    HttpEmbedder emb(local_config(), 2, t);
    std::vector<std::string> texts{"first", "second"};
    auto v = embed(texts, emb);
    EXPECT_EQ(v[0].values, (std::vector<double>{1.0, 0.0}));
    EXPECT_EQ(v[1].values, (std::vector<double>{0.0, 1.0}));
    EXPECT_EQ(nlohmann::json::parse(t.seen->front().body)["input"][1], "second");
    EXPECT_EQ(emb.tag(), "http:test-model:d2");

    ScriptedTransport short_reply{{{200, R"({"data":[]})", ""}}};
    HttpEmbedder bad(local_config(), 2, short_reply);
    EXPECT_THROW(embed(texts, bad), Error);
}

TEST(RunWithRetries, ExponentialBackoff) {
    ProviderConfig cfg;
    cfg.max_retries = 3;
    cfg.initial_backoff = std::chrono::milliseconds(100);
    std::vector<long long> sleeps;
    int calls = 0;
    int attempts = run_with_retries(
        cfg,
        [&](int n, std::string&) {
            ++calls;
            EXPECT_EQ(n, calls);
            return n < 4 ? AttemptOutcome::Transient : AttemptOutcome::Success;
        },
        [&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); });
    EXPECT_EQ(attempts, 4);
    EXPECT_EQ(sleeps, (std::vector<long long>{100, 200, 400}));
}

TEST(TokenBucket, AdmitsAtConfiguredRate) {
    TokenBucket bucket(60.0);  // one per second, burst 1
    auto t0 = TokenBucket::Clock::now();
    EXPECT_TRUE(bucket.try_acquire(t0));
    EXPECT_FALSE(bucket.try_acquire(t0));
    auto wait = std::chrono::duration<double>(bucket.wait_time(t0)).count();
    EXPECT_NEAR(wait, 1.0, 0.05);
    EXPECT_FALSE(bucket.try_acquire(t0 + std::chrono::milliseconds(500)));
    EXPECT_TRUE(bucket.try_acquire(t0 + std::chrono::milliseconds(1001)));

    TokenBucket unlimited(0.0);
    for (int i = 0; i < 100; ++i) EXPECT_TRUE(unlimited.try_acquire(t0));
}

TEST(InFlightGate, BoundsConcurrency) {
    InFlightGate gate(2);
    std::atomic<int> active{0}, peak{0};
    {
        std::vector<std::jthread> threads;
        for (int i = 0; i < 8; ++i) {
            threads.emplace_back([&] {
                gate.enter();
                int now = ++active;
                int prev = peak.load();
                while (now > prev && !peak.compare_exchange_weak(prev, now)) {}
                std::this_thread::sleep_for(std::chrono::milliseconds(5));
                --active;
                gate.leave();
            });
        }
    }
    EXPECT_LE(peak.load(), 2);
    EXPECT_GE(peak.load(), 1);
}

TEST(HttpPost, TalksToLocalServer) {
    httplib::Server server;
    std::string seen_auth;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen_auth = req.get_header_value("Authorization");
        auto body = nlohmann::json::parse(req.body);
        res.set_content(completion("echo " + body["messages"][0]["content"].get<std::string>()), "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    std::thread listener([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    ::setenv("PATHRAG_TEST_KEY", "abc", 1);
    auto cfg = local_config("http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions");
    cfg.api_key_env = "PATHRAG_TEST_KEY";
    auto before = network_request_count();
    HttpGenerator gen(cfg);
    auto r = gen.generate("ping");
    server.stop();
    listener.join();
    EXPECT_EQ(r.text, "echo ping");
    EXPECT_EQ(seen_auth, "Bearer abc");
    EXPECT_EQ(network_request_count(), before + 1);
}

TEST(HttpPost, UnreachableEndpointFailsGenerationStage) {
    auto g = fixtures::diamond({"Alpha", "Bravo", "Charlie", "Delta"});
    MockEmbedder emb;
    auto index = build_node_index(g, emb);
    MockKeywordExtractor kw;
    auto cfg = local_config("http://127.0.0.1:1/v1/chat/completions");
    cfg.max_retries = 0;
    cfg.timeout = std::chrono::milliseconds(300);
    HttpGenerator gen(cfg);
    RetrievalConfig rc;
    rc.n_nodes = 2;
    try {
        run_query("Alpha and Delta?", g, index, rc, kw, emb, gen);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::ProviderFailure);
        EXPECT_EQ(e.stage(), kGenerationStage);
        EXPECT_EQ(e.attempts(), 1);
        EXPECT_EQ(exit_code_for(e.code()), 3);
    }
}

TEST(ParseUrl, SplitsOriginAndPath) {
    auto u = parse_url("https://api.example.com:8443/v1/embeddings");
    EXPECT_EQ(u.origin, "https://api.example.com:8443");
    EXPECT_EQ(u.path, "/v1/embeddings");
    EXPECT_EQ(parse_url("http://host").path, "/");
    EXPECT_THROW(parse_url("host/path"), Error);
}
