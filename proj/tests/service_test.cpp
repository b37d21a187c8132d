#include "support.hpp"

#include "reverger/config.hpp"
#include "reverger/serialization.hpp"
#include "reverger/server.hpp"
#include "reverger/store.hpp"
#include "reverger/telemetry.hpp"

#include <doctest.h>
#include <httplib.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <thread>

using namespace reverger;
using namespace std::chrono_literals;
using nlohmann::json;
using testing::error_code_of;

namespace {

StoreOptions memory_options() {
    StoreOptions o;
    o.engine = testing::fixed_clock_options();
    return o;
}

// Highlights the garden passage and probes it.
std::string probed_session(SessionStore& store, const ExplorationPolicy& policy = ExplorationPolicy::full()) {
    const std::string text = testing::story("cinderella");
    const std::string id = store.create(text, policy);
    auto [a, b] = testing::find_span(text, testing::kGarden);
    store.command(id, cmd::Highlight{a, b, std::nullopt});
    store.command(id, cmd::Probe{});
    return id;
}

// Selects exactly the first k roots, then synthesizes.
void synthesize_with(SessionStore& store, const std::string& id, std::size_t k) {
    const auto s = store.get(id);
    const auto roots = s->tree.roots();
    for (std::size_t i = 0; i < roots.size(); ++i) {
        const bool want = i < k;
        if (s->tree.node(roots[i]).selected != want) store.command(id, cmd::Select{roots[i], want});
    }
    store.command(id, cmd::Synthesize{});
}

struct RunningServer {
    SessionStore& store;
    ApiServer server;
    int port;
    std::thread thread;

    RunningServer(SessionStore& s, ServerOptions o)
        : store(s), server(s, std::move(o)), port(server.bind("127.0.0.1", 0)) {
        thread = std::thread([this] { server.run(); });
        server.wait_until_ready();
    }
    ~RunningServer() {
        server.stop();
        thread.join();
    }

    [[nodiscard]] httplib::Client client() const {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(5, 0);
        return c;
    }
};

json body_of(const httplib::Result& r) {
    REQUIRE(r);
    return json::parse(r->body);
}

std::string error_of(const httplib::Result& r) { return body_of(r).at("error").at("code").get<std::string>(); }

struct CliResult {
    int status = -1;
    std::string out;
};

CliResult run_cli(const std::string& args) {
    const std::string command = std::string(REVERGER_CLI) + " " + args + " 2>/dev/null";
    CliResult r;
    FILE* pipe = ::popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    const int raw = ::pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

}  // namespace

TEST_SUITE("service") {

TEST_CASE("event log parsing") {
    SessionEvent e;
    e.ordinal = 1;
    e.payload = {{"session_id", "s"}};
    const std::string line = encode_event_line(e);
    CHECK(line.back() == '\n');

    auto loaded = parse_event_log(line + "\n" + line.substr(0, 10));
    CHECK(loaded.events.size() == 1);
    CHECK(loaded.torn_tail);
    CHECK(loaded.committed_bytes == line.size() + 1);
    CHECK(loaded.events[0] == e);

    loaded = parse_event_log(line);
    CHECK_FALSE(loaded.torn_tail);
    try {
        (void)parse_event_log(line + "{not json}\n");
        FAIL("expected CorruptLog");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::CorruptLog);
        CHECK(std::string(err.what()).find("line 2") != std::string::npos);
    }
    CHECK(error_code_of([] { (void)read_event_log("/nonexistent/events.jsonl"); }) == ErrorCode::IoError);
}

TEST_CASE("writer truncates a torn tail before appending") {
    testing::TempDir dir;
    const auto file = dir.path() / "events.jsonl";
    SessionEvent e;
    e.ordinal = 1;
    {
        EventLogWriter w(file);
        w.append(e);
    }
    {
        std::ofstream out(file, std::ios::app);
        out << "{\"v\":1,\"ord";
    }
    const auto torn = read_event_log(file);
    CHECK(torn.torn_tail);
    {
        EventLogWriter w(file, torn.committed_bytes);
        e.ordinal = 2;
        w.append(e);
    }
    const auto again = read_event_log(file);
    CHECK_FALSE(again.torn_tail);
    REQUIRE(again.events.size() == 2);
    CHECK(again.events[1].ordinal == 2);
}

TEST_CASE("store persists and reloads sessions") {
    testing::TempDir dir;
    StoreOptions o = memory_options();
    o.data_dir = dir.path();
    o.snapshot_every = 3;
    std::string id;
    std::shared_ptr<const Session> before;
    {
        SessionStore store(testing::lenient_mock(), o);
        id = probed_session(store);
        synthesize_with(store, id, 3);
        store.command(id, cmd::Accept{});
        before = store.get(id);
    }
    CHECK(std::filesystem::exists(SessionStore::snapshot_path(dir.path(), id)));
    {
        std::ofstream out(SessionStore::log_path(dir.path(), id), std::ios::app);
        out << "{\"v\":1,";  // crash mid-write
    }
    std::filesystem::create_directories(dir.path() / "sbroken");
    {
        std::ofstream out(dir.path() / "sbroken" / "events.jsonl");
        out << "garbage\n";
    }

    SessionStore reloaded(testing::lenient_mock(), o);
    const auto failures = reloaded.load();
    REQUIRE(failures.size() == 1);
    CHECK(failures[0].session_id == "sbroken");
    CHECK(reloaded.ids() == std::vector<std::string>{id});
    CHECK(*reloaded.get(id) == *before);

    // the torn tail is gone, so new events append cleanly
    reloaded.command(id, cmd::Highlight{0, 5, std::nullopt});
    const auto log = read_event_log(SessionStore::log_path(dir.path(), id));
    CHECK_FALSE(log.torn_tail);
    CHECK(replay(log.events) == *reloaded.get(id));

    const auto snap = json::parse(read_file(SessionStore::snapshot_path(dir.path(), id)));
    CHECK(snap.at("format_version") == 1);
    CHECK(snap.at("last_ordinal").get<std::uint64_t>() >= 3);
}

TEST_CASE("failed commands change nothing in the store") {
    SessionStore store(testing::strict_mock(), memory_options());
    const auto id = store.create("Once upon a time.", ExplorationPolicy::full());
    CHECK(error_code_of([&] { store.command(id, cmd::Probe{}); }) == ErrorCode::NoActiveSpan);
    CHECK(store.get(id)->event_log.size() == 1);
    CHECK(error_code_of([&] { (void)store.get("nope"); }) == ErrorCode::UnknownSession);
    CHECK(error_code_of([&] { (void)store.create("", ExplorationPolicy::full()); }) == ErrorCode::EmptyDocument);
}

TEST_CASE("concurrent commands on one session are serialized") {
    SessionStore store(testing::lenient_mock(), memory_options());
    const auto id = store.create("abcdefghijklmnopqrstuvwxyz0123", ExplorationPolicy::full());
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&, t] {
            for (std::size_t i = 0; i < 25; ++i) store.command(id, cmd::Highlight{i, i + 1 + t, std::nullopt});
        });
    }
    for (auto& t : threads) t.join();
    const auto s = store.get(id);
    CHECK(s->event_log.size() == 101);
    for (std::size_t i = 0; i < s->event_log.size(); ++i) CHECK(s->event_log[i].ordinal == i + 1);
    CHECK(replay(s->event_log) == *s);
}

TEST_CASE("long-poll wakes on a new event") {
    SessionStore store(testing::lenient_mock(), memory_options());
    const auto id = store.create("Once upon a time.", ExplorationPolicy::full());
    CHECK(store.events_since(id, 0).size() == 1);
    CHECK(store.events_since(id, 1, 10ms).empty());
    std::thread writer([&] {
        std::this_thread::sleep_for(50ms);
        store.command(id, cmd::Highlight{0, 4, std::nullopt});
    });
    const auto started = std::chrono::steady_clock::now();
    const auto events = store.events_since(id, 1, 5s);
    writer.join();
    REQUIRE(events.size() == 1);
    CHECK(events[0].kind == EventKind::highlighted);
    CHECK(std::chrono::steady_clock::now() - started < 4s);
}

TEST_CASE("telemetry counts directions by depth and converged selections") {
    SessionStore store(testing::lenient_mock(), memory_options());
    const auto id = probed_session(store);
    const auto roots = store.get(id)->tree.roots();
    store.command(id, cmd::Expand{roots[0]});
    store.command(id, cmd::Expand{roots[1]});
    store.command(id, cmd::Expand{store.get(id)->tree.node(roots[0]).children[0]});
    store.command(id, cmd::AddManual{roots[2], "slapstick"});
    synthesize_with(store, id, 3);
    synthesize_with(store, id, 3);
    synthesize_with(store, id, 4);
    synthesize_with(store, id, 5);
    store.command(id, cmd::Accept{});

    const auto t = store.telemetry(id);
    CHECK(t.directions_by_depth == std::map<std::size_t, std::size_t>{{1, 8}, {2, 8}, {3, 4}});
    CHECK(t.converged_cardinality == std::map<std::size_t, std::size_t>{{3, 2}, {4, 1}, {5, 1}});
    CHECK(t.manual_added == 1);
    CHECK(t.manual_labels == std::vector<std::string>{"slapstick"});
    CHECK(t.mutants_generated == 4);
    CHECK(t.replacements == 1);
    CHECK(t.root_directions() == 8);
    CHECK(t.child_directions() == 12);
    CHECK(format_table_row("P1", t) == "P1 | full | 8 | 8 | 4 | - | three:2, four:1, five:1 | slapstick");
    CHECK(format_table_header() == "participant | mode | L1 | L2 | L3 | L4+ | converged | added");

    const auto empty = store.create("Once.", ExplorationPolicy::baseline());
    const auto z = store.telemetry(empty);
    CHECK(z.mode == ExplorationMode::baseline);
    CHECK(format_table_row("P2", z) == "P2 | baseline | - | - | - | - | - | -");
    CHECK(error_code_of([] { (void)summarize({}); }) == ErrorCode::CorruptLog);
}

TEST_CASE("config layering") {
    testing::TempDir dir;
    const auto file = dir.path() / "config.json";
    {
        std::ofstream out(file);
        out << R"({"port": 9000, "data_dir": "data", "policy": {"mode": "baseline"},
                   "provider": {"kind": "mock", "seed": 4, "strict": false}})";
    }
    ServiceConfig c;
    c.merge_file(file);
    CHECK(c.port == 9000);
    CHECK(*c.data_dir == dir.path() / "data");
    CHECK(c.default_policy == ExplorationPolicy::baseline());
    CHECK(c.provider.seed == 4);
    CHECK_FALSE(c.provider.strict);

    ::setenv("REVERGER_PORT", "9100", 1);
    ::setenv("REVERGER_MODE", "full", 1);
    c.apply_environment();
    ::unsetenv("REVERGER_PORT");
    ::unsetenv("REVERGER_MODE");
    CHECK(c.port == 9100);
    CHECK(c.default_policy == ExplorationPolicy::full());
    CHECK_NOTHROW(c.validate());

    CHECK(error_code_of([&] { c.merge_json({{"prot", 1}}); }) == ErrorCode::InvalidConfig);
    CHECK(error_code_of([&] { c.merge_json({{"provider", {{"kind", "carrier-pigeon"}}}}); }) ==
          ErrorCode::InvalidConfig);
    CHECK(error_code_of([&] { c.merge_file(dir.path() / "missing.json"); }) != ErrorCode::CorruptLog);
    ServiceConfig bad;
    bad.port = 70000;
    CHECK(error_code_of([&] { bad.validate(); }) == ErrorCode::InvalidConfig);

    ::setenv("SECRET_FOR_TEST", "hunter2", 1);
    ServiceConfig secret;
    secret.provider.api_key_env = "SECRET_FOR_TEST";
    CHECK(secret.to_json().dump().find("hunter2") == std::string::npos);
    ::unsetenv("SECRET_FOR_TEST");
}

TEST_CASE("http api: workflow") {
    SessionStore store(testing::strict_mock(), memory_options());
    RunningServer rs(store, {});
    auto cli = rs.client();

    const std::string text = testing::story("cinderella");
    auto r = cli.Post("/sessions", json{{"text", text}}.dump(), "application/json");
    REQUIRE(r);
    CHECK(r->status == 201);
    CHECK(r->get_header_value("Access-Control-Allow-Origin") == "*");
    const std::string id = body_of(r).at("session_id");
    const std::string path = "/sessions/" + id + "/commands";

    auto [a, b] = testing::find_span(text, testing::kGarden);
    r = cli.Post(path, json{{"kind", "highlight"}, {"start", a}, {"end", b}}.dump(), "application/json");
    CHECK(r->status == 200);
    CHECK(body_of(r).at("view").at("document").at("highlight").at("text") == testing::kGarden);

    r = cli.Post(path, R"({"kind":"probe"})", "application/json");
    REQUIRE(r->status == 200);
    const auto roots = body_of(r).at("view").at("tree").at("roots");
    CHECK(roots.size() == 8);

    r = cli.Post(path, R"({"kind":"expand","node":"n4"})", "application/json");
    CHECK(r->status == 200);
    CHECK(body_of(r).at("event").at("payload").at("labels") ==
          json::array({"Location", "Era", "Landscape", "Environment"}));

    // malformed commands are rejected without an event
    const auto before = store.get(id)->last_ordinal();
    r = cli.Post(path, R"({"kind":"teleport"})", "application/json");
    CHECK(r->status == 400);
    CHECK(error_of(r) == "MALFORMED_COMMAND");
    r = cli.Post(path, "{", "application/json");
    CHECK(r->status == 400);
    r = cli.Post(path, R"({"kind":"expand","node":"n999"})", "application/json");
    CHECK(r->status == 404);
    CHECK(error_of(r) == "UNKNOWN_NODE");
    CHECK(store.get(id)->last_ordinal() == before);

    r = cli.Post("/sessions/nope/commands", "{", "application/json");
    CHECK(r->status == 404);
    CHECK(error_of(r) == "UNKNOWN_SESSION");
    r = cli.Post("/sessions", R"({"text":"   "})", "application/json");
    CHECK(r->status == 400);
    CHECK(error_of(r) == "EMPTY_DOCUMENT");

    r = cli.Get(("/sessions/" + id + "/events?since=2").c_str());
    const auto events = body_of(r);
    CHECK(events.at("events").size() == before - 2);
    CHECK(events.at("last_ordinal") == before);
    r = cli.Get(("/sessions/" + id + "/events?since=x").c_str());
    CHECK(r->status == 400);

    r = cli.Get(("/sessions/" + id + "/telemetry").c_str());
    CHECK(body_of(r).at("directions_by_depth").at("1") == 8);
    r = cli.Get("/sessions");
    CHECK(body_of(r).at("sessions") == json::array({id}));
    r = cli.Get("/nowhere");
    CHECK(r->status == 404);
    CHECK(error_of(r) == "NOT_FOUND");
    r = cli.Options(path.c_str());
    CHECK(r->status == 204);
    r = cli.Get("/healthz?deep=1");
    CHECK(r->status == 200);
    CHECK(body_of(r).at("provider") == "mock");
}

TEST_CASE("http api: baseline depth cap") {
    SessionStore store(testing::strict_mock(), memory_options());
    RunningServer rs(store, {});
    auto cli = rs.client();
    const std::string text = testing::story("cinderella");
    auto r = cli.Post("/sessions", json{{"text", text}, {"policy", {{"mode", "baseline"}}}}.dump(), "application/json");
    const std::string path = "/sessions/" + body_of(r).at("session_id").get<std::string>() + "/commands";
    auto [a, b] = testing::find_span(text, testing::kGarden);
    cli.Post(path, json{{"kind", "highlight"}, {"start", a}, {"end", b}}.dump(), "application/json");
    cli.Post(path, R"({"kind":"probe"})", "application/json");
    r = cli.Post(path, R"({"kind":"expand","node":"n1"})", "application/json");
    CHECK(r->status == 200);
    r = cli.Post(path, R"({"kind":"expand","node":"n9"})", "application/json");
    CHECK(r->status == 409);
    CHECK(error_of(r) == "DEPTH_CAP");
    r = cli.Post("/sessions", json{{"text", "x"}, {"policy", {{"mode", "sideways"}}}}.dump(), "application/json");
    CHECK(r->status == 400);
}

TEST_CASE("http api: bearer auth") {
    SessionStore store(testing::lenient_mock(), memory_options());
    ServerOptions o;
    o.auth_token = "tok-123";
    RunningServer rs(store, o);
    auto cli = rs.client();
    auto r = cli.Get("/sessions");
    CHECK(r->status == 401);
    CHECK(error_of(r) == "UNAUTHORIZED");
    CHECK(cli.Get("/healthz")->status == 200);
    cli.set_bearer_token_auth("tok-123");
    CHECK(cli.Get("/sessions")->status == 200);
    cli.set_bearer_token_auth("wrong");
    CHECK(cli.Get("/sessions")->status == 401);
}

TEST_CASE("http api: unhealthy provider") {
    class Down final : public Provider {
    public:
        Down() : Provider(1) {}
        HealthStatus health_check() override { return HealthStatus::unhealthy; }
        [[nodiscard]] ProviderKind kind() const noexcept override { return ProviderKind::http; }

    protected:
        GenerationResult do_generate(const CompiledPrompt&, std::string_view) override {
            throw Error(ErrorCode::ProviderUnavailable, "down");
        }
    };
    SessionStore store(std::make_shared<Down>(), memory_options());
    RunningServer rs(store, {});
    auto cli = rs.client();
    CHECK(cli.Get("/healthz")->status == 200);
    CHECK(cli.Get("/healthz?deep=1")->status == 503);
    auto r = cli.Post("/sessions", R"({"text":"Once upon a time."})", "application/json");
    const std::string path = "/sessions/" + body_of(r).at("session_id").get<std::string>() + "/commands";
    cli.Post(path, R"({"kind":"highlight","start":0,"end":4})", "application/json");
    r = cli.Post(path, R"({"kind":"probe"})", "application/json");
    CHECK(r->status == 502);
    CHECK(error_of(r) == "PROVIDER_UNAVAILABLE");
}

TEST_CASE("cli: replay, telemetry and fixtures") {
    testing::TempDir dir;
    StoreOptions o = memory_options();
    o.data_dir = dir.path();
    o.snapshot_every = 2;
    std::string id;
    {
        SessionStore store(testing::lenient_mock(), o);
        id = probed_session(store);
        synthesize_with(store, id, 3);
    }
    const auto log = SessionStore::log_path(dir.path(), id).string();
    const auto snap = SessionStore::snapshot_path(dir.path(), id).string();

    auto r = run_cli("replay " + log);
    CHECK(r.status == 0);
    CHECK(r.out.find("session " + id) != std::string::npos);
    r = run_cli("replay " + log + " --snapshot " + snap);
    CHECK(r.status == 0);
    r = run_cli("replay --json " + log);
    CHECK(json::parse(r.out).at("session_id") == id);

    r = run_cli("telemetry --header --participant P9 " + log);
    CHECK(r.status == 0);
    CHECK(r.out == format_table_header() + "\nP9 | full | 8 | - | - | - | three:1 | -\n");

    // a log whose payload disagrees with its own history
    auto events = read_event_log(log).events;
    events[2].payload["labels"][0] = "Tampered";
    const auto bad = (dir.path() / "bad.jsonl").string();
    {
        std::ofstream out(bad);
        for (const auto& e : events) out << encode_event_line(e);
    }
    CHECK(run_cli("replay " + bad).status == 1);
    CHECK(run_cli("replay /nonexistent.jsonl").status == 2);

    const auto corpus = (testing::source_dir() / "fixtures" / "corpus").string();
    const auto sources = (testing::source_dir() / "fixtures" / "sources.json").string();
    r = run_cli("fixtures verify --dir " + corpus + " --sources " + sources);
    CHECK(r.status == 0);
    CHECK(r.out.rfind("ok: ", 0) == 0);
}

}  // TEST_SUITE
