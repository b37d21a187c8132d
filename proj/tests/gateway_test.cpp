#include "support.hpp"

#include "reverger/gateway.hpp"

#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <thread>

using namespace reverger;
using namespace std::chrono_literals;
using testing::error_code_of;

namespace {

class StubServer {
public:
    explicit StubServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
        server_.Post("/v1/chat", [this, handler](const httplib::Request& req, httplib::Response& res) {
            ++hits;
            {
                std::lock_guard lk(mu);
                last_body = req.body;
                last_headers = req.headers;
            }
            handler(req, res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() {
        server_.stop();
        thread_.join();
    }

    [[nodiscard]] std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat"; }

    std::atomic<int> hits{0};
    std::mutex mu;
    std::string last_body;
    httplib::Headers last_headers;

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

ProviderConfig http_config(const std::string& endpoint) {
    ProviderConfig c;
    c.kind = ProviderKind::http;
    c.endpoint = endpoint;
    c.model = "test-model";
    c.api_key_env = "REVERGER_TEST_KEY";
    c.timeout = 2000ms;
    c.max_retries = 2;
    c.backoff_initial = 1ms;
    return c;
}

void ok_openai(const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"1. Tone"}}]})", "application/json");
}

CompiledPrompt some_prompt() { return compile(PromptKind::root_directions, "story", "part", {}, 1); }

constexpr const char* kSecret = "sk-SENTINEL-0xDEADBEEF";

}  // namespace

TEST_SUITE("gateway") {

TEST_CASE("strict mock serves fixtures by ordinal and fails loudly otherwise") {
    FixtureCorpus corpus;
    const auto prompt = some_prompt();
    corpus.add({PromptKind::root_directions, prompt.digest(), 1, std::nullopt, ""}, "1. First");
    corpus.add({PromptKind::root_directions, prompt.digest(), 2, std::nullopt, ""}, "1. Second");
    MockProvider mock(corpus, 0, true);
    CHECK(mock.generate(prompt, "a").text == "1. First");
    auto second = mock.generate(prompt, "a");
    CHECK(second.text == "1. Second");
    CHECK(second.ordinal == 2);
    CHECK(mock.generate(prompt, "b").text == "1. First");  // ordinals are per session
    CHECK(error_code_of([&] { (void)mock.generate(prompt, "a"); }) == ErrorCode::FixtureMissing);
}

TEST_CASE("seed-specific fixtures win") {
    FixtureCorpus corpus;
    const auto prompt = some_prompt();
    corpus.add({PromptKind::root_directions, prompt.digest(), 1, std::nullopt, ""}, "any");
    corpus.add({PromptKind::root_directions, prompt.digest(), 1, 7, ""}, "seven");
    CHECK(MockProvider(corpus, 7, true).response_for(prompt, 1) == "seven");
    CHECK(MockProvider(corpus, 8, true).response_for(prompt, 1) == "any");
}

TEST_CASE("lenient placeholders are deterministic and well formed") {
    const auto roots = compile(PromptKind::root_directions, "story", "part", {}, 8);
    const auto synth = compile(PromptKind::synthesis, "story", "part", {"Tone"}, 0);
    CHECK(MockProvider::placeholder(roots, 1, 1) == MockProvider::placeholder(roots, 1, 1));
    CHECK(MockProvider::placeholder(roots, 1, 1) != MockProvider::placeholder(roots, 2, 1));
    CHECK(parse_directions(MockProvider::placeholder(roots, 1, 1), 8).labels.size() == 8);
    CHECK_FALSE(has_duplicates(parse_directions(MockProvider::placeholder(roots, 3, 2), 8).labels, {}));
    const auto v = parse_variation(MockProvider::placeholder(synth, 1, 1));
    CHECK(v.emphasized.size() == 2);
    MockProvider lenient(FixtureCorpus{}, 1, false);
    CHECK(lenient.generate(roots, "s").text == MockProvider::placeholder(roots, 1, 1));
}

TEST_CASE("corpus survives a save and load") {
    testing::TempDir dir;
    FixtureCorpus corpus;
    corpus.add({PromptKind::synthesis, "abc", 1, std::nullopt, ""}, "**x** y\n");
    corpus.add({PromptKind::synthesis, "abc", 1, 3, "custom.txt"}, "seeded");
    corpus.save(dir.path());
    const auto loaded = FixtureCorpus::load(dir.path());
    REQUIRE(loaded.entries().size() == 2);
    CHECK(*loaded.find(PromptKind::synthesis, "abc", 1, 0) == "**x** y\n");
    CHECK(*loaded.find(PromptKind::synthesis, "abc", 1, 3) == "seeded");
    CHECK(loaded.entries()[0].file == "synthesis-abc-1.txt");
    CHECK(error_code_of([&] { (void)FixtureCorpus::load(dir.path() / "missing"); }) == ErrorCode::IoError);
}

TEST_CASE("provider configuration") {
    ProviderConfig c;
    CHECK_NOTHROW(c.validate());
    c.kind = ProviderKind::http;
    CHECK(error_code_of([&] { c.validate(); }) == ErrorCode::InvalidConfig);
    c = http_config("http://localhost:1/x");
    CHECK_NOTHROW(c.validate());
    c.concurrency_limit = 0;
    CHECK(error_code_of([&] { c.validate(); }) == ErrorCode::InvalidConfig);
    CHECK(error_code_of([] { (void)WireProfile::named("nope"); }) == ErrorCode::InvalidConfig);
    CHECK(WireProfile::named("anthropic").auth_header == "x-api-key");
    CHECK(error_code_of([] {
              auto bad = http_config("ftp://x/y");
              (void)HttpProvider(bad);
          }) == ErrorCode::InvalidConfig);

    ::setenv("PROVIDER_KIND", "http", 1);
    ::setenv("PROVIDER_ENDPOINT", "http://example.invalid/v1", 1);
    ::setenv("PROVIDER_TIMEOUT_MS", "1500", 1);
    ProviderConfig e;
    e.apply_environment();
    CHECK(e.kind == ProviderKind::http);
    CHECK(e.endpoint == "http://example.invalid/v1");
    CHECK(e.timeout == 1500ms);
    ::setenv("PROVIDER_TIMEOUT_MS", "soon", 1);
    CHECK(error_code_of([&] { e.apply_environment(); }) == ErrorCode::InvalidConfig);
    ::unsetenv("PROVIDER_KIND");
    ::unsetenv("PROVIDER_ENDPOINT");
    ::unsetenv("PROVIDER_TIMEOUT_MS");
}

TEST_CASE("http client: success and request shape") {
    ::setenv("REVERGER_TEST_KEY", kSecret, 1);
    StubServer stub(ok_openai);
    HttpProvider p(http_config(stub.endpoint()));
    auto r = p.generate(some_prompt(), "s");
    CHECK(r.text == "1. Tone");
    CHECK(r.attempt == 1);
    const auto body = nlohmann::json::parse(stub.last_body);
    CHECK(body.at("model") == "test-model");
    CHECK(body.at("messages").size() == 1);
    CHECK(body.at("messages")[0].at("role") == "user");
    CHECK(body.at("messages")[0].at("content") == some_prompt().text);
    CHECK_FALSE(body.contains("temperature"));
    CHECK_FALSE(body.contains("top_p"));
    CHECK(stub.last_headers.find("Authorization")->second == std::string("Bearer ") + kSecret);
    CHECK(p.health_check() == HealthStatus::healthy);
}

TEST_CASE("http client: anthropic profile") {
    ::setenv("REVERGER_TEST_KEY", kSecret, 1);
    StubServer stub([](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"content":[{"type":"text","text":"hello"}]})", "application/json");
    });
    auto c = http_config(stub.endpoint());
    c.profile = WireProfile::named("anthropic");
    HttpProvider p(c);
    CHECK(p.generate(some_prompt(), "s").text == "hello");
    CHECK(stub.last_headers.find("x-api-key")->second == kSecret);
    CHECK(stub.last_headers.count("anthropic-version") == 1);
    CHECK(nlohmann::json::parse(stub.last_body).at("max_tokens") == 1024);
}

TEST_CASE("http client: retries server errors") {
    StubServer stub([n = std::make_shared<int>(0)](const httplib::Request&, httplib::Response& res) {
        if (++*n < 3) {
            res.status = 503;
            return;
        }
        ok_openai({}, res);
    });
    HttpProvider p(http_config(stub.endpoint()));
    auto r = p.generate(some_prompt(), "s");
    CHECK(r.attempt == 3);
    CHECK(stub.hits == 3);
}

TEST_CASE("http client: gives up after the retry budget") {
    StubServer stub([](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    HttpProvider p(http_config(stub.endpoint()));
    CHECK(error_code_of([&] { (void)p.generate(some_prompt(), "s"); }) == ErrorCode::ProviderUnavailable);
    CHECK(stub.hits == 3);
}

TEST_CASE("http client: client errors are not retried and never leak the key") {
    ::setenv("REVERGER_TEST_KEY", kSecret, 1);
    StubServer stub([](const httplib::Request& req, httplib::Response& res) {
        res.status = 401;
        res.set_content(R"({"error":"bad key )" + req.get_header_value("Authorization") + "\"}", "application/json");
    });
    HttpProvider p(http_config(stub.endpoint()));
    try {
        (void)p.generate(some_prompt(), "s");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ProviderRejected);
        CHECK(std::string(e.what()).find(kSecret) == std::string::npos);
    }
    CHECK(stub.hits == 1);
    CHECK(error_code_of([&] { (void)p.health_check(); }) == ErrorCode::ProviderRejected);
}

TEST_CASE("http client: rate limiting") {
    StubServer stub([](const httplib::Request&, httplib::Response& res) { res.status = 429; });
    HttpProvider p(http_config(stub.endpoint()));
    CHECK(error_code_of([&] { (void)p.generate(some_prompt(), "s"); }) == ErrorCode::ProviderRejected);
    CHECK(stub.hits == 3);
}

TEST_CASE("http client: malformed envelopes") {
    SUBCASE("not json") {
        StubServer stub([](const httplib::Request&, httplib::Response& res) { res.set_content("<html>", "text/html"); });
        HttpProvider p(http_config(stub.endpoint()));
        CHECK(error_code_of([&] { (void)p.generate(some_prompt(), "s"); }) == ErrorCode::MalformedProviderEnvelope);
    }
    SUBCASE("no text") {
        StubServer stub([](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"choices":[]})", "application/json");
        });
        HttpProvider p(http_config(stub.endpoint()));
        CHECK(error_code_of([&] { (void)p.generate(some_prompt(), "s"); }) == ErrorCode::MalformedProviderEnvelope);
    }
}

TEST_CASE("http client: timeouts") {
    StubServer stub([](const httplib::Request&, httplib::Response& res) {
        std::this_thread::sleep_for(400ms);
        ok_openai({}, res);
    });
    auto c = http_config(stub.endpoint());
    c.timeout = 50ms;
    c.max_retries = 1;
    HttpProvider p(c);
    const auto started = std::chrono::steady_clock::now();
    CHECK(error_code_of([&] { (void)p.generate(some_prompt(), "s"); }) == ErrorCode::ProviderTimeout);
    CHECK(std::chrono::steady_clock::now() - started < 2s);
}

TEST_CASE("http client: connection refused") {
    auto c = http_config("http://127.0.0.1:1/v1/chat");
    c.max_retries = 0;
    HttpProvider p(c);
    const auto code = error_code_of([&] { (void)p.generate(some_prompt(), "s"); });
    CHECK((code == ErrorCode::ProviderUnavailable || code == ErrorCode::ProviderTimeout));
}

TEST_CASE("concurrency is bounded per provider") {
    class Slow final : public Provider {
    public:
        Slow() : Provider(2) {}
        HealthStatus health_check() override { return HealthStatus::healthy; }
        [[nodiscard]] ProviderKind kind() const noexcept override { return ProviderKind::mock; }
        std::atomic<int> running{0};
        std::atomic<int> peak{0};

    protected:
        GenerationResult do_generate(const CompiledPrompt&, std::string_view) override {
            const int now = ++running;
            int seen = peak.load();
            while (now > seen && !peak.compare_exchange_weak(seen, now)) {
            }
            std::this_thread::sleep_for(20ms);
            --running;
            return {};
        }
    } slow;
    std::vector<std::thread> threads;
    for (int i = 0; i < 6; ++i) threads.emplace_back([&] { (void)slow.generate(some_prompt(), "s"); });
    for (auto& t : threads) t.join();
    CHECK(slow.peak <= 2);
    CHECK(slow.peak >= 1);
}

}  // TEST_SUITE
