#include "brqual/core/error.hpp"
#include "brqual/provider/gateway.hpp"
#include "fixture_model.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <cmath>
#include <filesystem>
#include <thread>

using namespace brqual;
using namespace brqual::provider;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("brqual_provider_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

// Scripted backend: fails a fixed number of times, then answers.
class FlakyBackend : public Backend {
public:
    int failures = 0;
    bool auth = false;
    bool fatal = false;
    int calls = 0;
    std::size_t dim = 4;
    std::string chat(const ChatRequest& r, const std::string&) override {
        ++calls;
        if (auth) throw AuthError("nope");
        if (fatal) throw TransportError("bad body", false);
        if (calls <= failures) throw RateLimited("slow down");
        return "echo:" + r.user_text;
    }
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts, const std::string&) override {
        ++calls;
        return std::vector<std::vector<double>>(texts.size(), std::vector<double>(dim, 0.5));
    }
    std::vector<double> rerank(const RerankRequest& r, const std::string&) override {
        ++calls;
        return std::vector<double>(r.candidate_texts.size(), 0.25);
    }
};

GatewayConfig config(Mode mode, const std::filesystem::path& cache, std::size_t dim = 4) {
    GatewayConfig c;
    c.mode = mode;
    c.cache_path = cache;
    c.embed_dimension = dim;
    c.rerank_mode = RerankMode::Remote;
    return c;
}

Timestamp fixed_clock() { return parse_timestamp("2025-03-01T00:00:00Z"); }

}  // namespace

TEST(Canonical, SortsKeysAndCollapsesWhitespace) {
    const Json a = canonicalize(Json{{"b", "x   y\n"}, {"a", {{"d", " z "}, {"c", 1}}}});
    EXPECT_EQ(a.dump(), R"({"a":{"c":1,"d":"z"},"b":"x y"})");
    ChatRequest r1{"p", "sys", "hello   world", 0.0, 1024};
    ChatRequest r2{"p", "sys", "hello world\n", 0.0, 1024};
    EXPECT_EQ(request_hash(canonical_chat_request(r1, "m")), request_hash(canonical_chat_request(r2, "m")));
    r2.prompt_id = "q";
    EXPECT_NE(request_hash(canonical_chat_request(r1, "m")), request_hash(canonical_chat_request(r2, "m")));
    EXPECT_NE(request_hash(canonical_chat_request(r1, "m")), request_hash(canonical_chat_request(r1, "n")));
}

TEST(Gateway, RecordThenReplay) {
    TempDir dir;
    const auto cache = dir.path / "cache.jsonl";
    ChatRequest req{"demo.v1", "system", "hello", 0.0, 1024};
    {
        Gateway g(config(Mode::Record, cache), std::make_unique<FlakyBackend>(), fixed_clock);
        EXPECT_EQ(g.chat(req), "echo:hello");
        EXPECT_EQ(g.chat(req), "echo:hello");
        const auto log = g.call_log();
        ASSERT_EQ(log.size(), 2u);
        EXPECT_FALSE(log[0].cache_hit);
        EXPECT_TRUE(log[1].cache_hit);
        EXPECT_EQ(g.cache().size(), 1u);
        const auto entry = g.cache().entries().front();
        EXPECT_EQ(entry.request["user_text"], "hello");
        EXPECT_EQ(format_timestamp(entry.recorded_at), "2025-03-01T00:00:00Z");
    }
    Gateway replay(config(Mode::Replay, cache));
    EXPECT_EQ(replay.chat(req), "echo:hello");
    req.user_text = "other";
    EXPECT_THROW(replay.chat(req), CacheMiss);
    EXPECT_EQ(replay.count_calls("chat", "demo"), 2u);
}

TEST(Gateway, CacheIsAppendOnly) {
    TempDir dir;
    const auto path = dir.path / "c.jsonl";
    ReplayCache cache(path);
    EXPECT_TRUE(cache.append({"h1", "one", fixed_clock(), Json::object()}));
    EXPECT_FALSE(cache.append({"h1", "two", fixed_clock(), Json::object()}));
    ReplayCache reopened(path);
    EXPECT_EQ(reopened.size(), 1u);
    EXPECT_EQ(reopened.find("h1")->response_body, "one");
    EXPECT_FALSE(reopened.find("h2").has_value());
}

TEST(Gateway, RetriesRateLimitsWithBackoff) {
    TempDir dir;
    auto backend = std::make_unique<FlakyBackend>();
    backend->failures = 2;
    auto* raw = backend.get();
    std::vector<std::chrono::milliseconds> sleeps;
    auto cfg = config(Mode::Live, dir.path / "c.jsonl");
    Gateway g(cfg, std::move(backend), fixed_clock, [&](std::chrono::milliseconds d) { sleeps.push_back(d); });
    EXPECT_EQ(g.chat({"p", "", "x", 0.0, 10}), "echo:x");
    EXPECT_EQ(raw->calls, 3);
    ASSERT_EQ(sleeps.size(), 2u);
    EXPECT_EQ(sleeps[1], 2 * sleeps[0]);
    EXPECT_EQ(g.cache().size(), 0u);  // live mode never writes
}

TEST(Gateway, RetryBudgetAndNonRetryableErrors) {
    TempDir dir;
    auto cfg = config(Mode::Live, dir.path / "c.jsonl");
    auto noop = [](std::chrono::milliseconds) {};
    {
        auto b = std::make_unique<FlakyBackend>();
        b->failures = 10;
        Gateway g(cfg, std::move(b), fixed_clock, noop);
        EXPECT_THROW(g.chat({"p", "", "x", 0.0, 10}), RateLimited);
    }
    {
        auto b = std::make_unique<FlakyBackend>();
        b->auth = true;
        auto* raw = b.get();
        Gateway g(cfg, std::move(b), fixed_clock, noop);
        EXPECT_THROW(g.chat({"p", "", "x", 0.0, 10}), AuthError);
        EXPECT_EQ(raw->calls, 1);
    }
    {
        auto b = std::make_unique<FlakyBackend>();
        b->fatal = true;
        auto* raw = b.get();
        Gateway g(cfg, std::move(b), fixed_clock, noop);
        EXPECT_THROW(g.chat({"p", "", "x", 0.0, 10}), TransportError);
        EXPECT_EQ(raw->calls, 1);
    }
}

TEST(Gateway, EmbeddingDimensionIsChecked) {
    TempDir dir;
    auto b = std::make_unique<FlakyBackend>();
    b->dim = 3;
    Gateway g(config(Mode::Record, dir.path / "c.jsonl", 4), std::move(b), fixed_clock);
    EXPECT_THROW(g.embed({"a"}), DimensionMismatch);
    EXPECT_EQ(g.cache().size(), 0u);
}

TEST(Gateway, EmbedCachesPerText) {
    TempDir dir;
    const auto cache = dir.path / "c.jsonl";
    {
        Gateway g(config(Mode::Record, cache, 64), std::make_unique<brqual::testkit::FixtureModel>(64), fixed_clock);
        const auto v = g.embed({"alpha beta", "gamma"});
        ASSERT_EQ(v.size(), 2u);
        EXPECT_EQ(v[0].dimension(), 64u);
        EXPECT_EQ(g.cache().size(), 2u);
    }
    Gateway replay(config(Mode::Replay, cache, 64));
    const auto v = replay.embed({"gamma"});
    EXPECT_EQ(v[0].values, brqual::testkit::hashed_embedding("gamma", 64));
    EXPECT_THROW(replay.embed({"delta"}), CacheMiss);
}

TEST(Gateway, LexicalRerank) {
    const auto s = lexical_rerank({"red stone dust", {"red stone", "blue", "", "RED STONE DUST"}});
    EXPECT_NEAR(s[0], 2.0 / std::sqrt(6.0), 1e-15);
    EXPECT_EQ(s[1], 0.0);
    EXPECT_EQ(s[2], 0.0);
    EXPECT_NEAR(s[3], 1.0, 1e-15);
    GatewayConfig c;
    c.rerank_mode = RerankMode::Lexical;
    Gateway g(c);
    EXPECT_EQ(g.rerank({"red stone dust", {"red stone"}}), std::vector<double>{s[0]});
    EXPECT_EQ(g.call_log().front().kind, "rerank-lexical");
}

TEST(Gateway, ModesParse) {
    EXPECT_EQ(parse_mode("replay"), Mode::Replay);
    EXPECT_EQ(parse_mode("record"), Mode::Record);
    EXPECT_FALSE(parse_mode("RECORD").has_value());
    EXPECT_FALSE(parse_mode("later").has_value());
    EXPECT_EQ(parse_rerank_mode("lexical"), RerankMode::Lexical);
}

TEST(HttpBackend, SpeaksTheWireFormat) {
    httplib::Server server;
    std::string seen_auth;
    Json seen_chat;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen_auth = req.get_header_value("Authorization");
        seen_chat = Json::parse(req.body);
        res.set_content(R"({"choices":[{"message":{"content":"hi there"}}]})", "application/json");
    });
    server.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
        const auto body = Json::parse(req.body);
        Json data = Json::array();
        for (std::size_t i = body["input"].size(); i-- > 0;)  // out of order on purpose
            data.push_back({{"index", i}, {"embedding", {static_cast<double>(i), 1.0}}});
        res.set_content(Json{{"data", data}}.dump(), "application/json");
    });
    server.Post("/v1/rerank", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"results":[{"index":1,"relevance_score":0.9},{"index":0,"relevance_score":0.1}]})",
                        "application/json");
    });
    server.Post("/v1/denied/chat/completions", [](const httplib::Request&, httplib::Response& res) {
        res.status = 401;
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    const std::string base = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    HttpBackend backend(base, "secret");
    EXPECT_EQ(backend.chat({"p", "sys", "user", 0.0, 77}, "gpt-4o-mini"), "hi there");
    EXPECT_EQ(seen_auth, "Bearer secret");
    EXPECT_EQ(seen_chat["model"], "gpt-4o-mini");
    EXPECT_EQ(seen_chat["max_tokens"], 77);
    EXPECT_EQ(seen_chat["messages"][0]["role"], "system");
    const auto vectors = backend.embed({"a", "b"}, "m");
    EXPECT_EQ(vectors[1], (std::vector<double>{1.0, 1.0}));
    EXPECT_EQ(backend.rerank({"q", {"x", "y"}}, "m"), (std::vector<double>{0.1, 0.9}));
    HttpBackend denied(base + "/denied", "bad");
    EXPECT_THROW(denied.chat({"p", "", "u", 0.0, 1}, "m"), AuthError);

    server.stop();
    worker.join();
}
