#include "reverger/config.hpp"
#include "reverger/error.hpp"
#include "reverger/event_log.hpp"
#include "reverger/fixtures.hpp"
#include "reverger/serialization.hpp"
#include "reverger/server.hpp"
#include "reverger/session.hpp"
#include "reverger/store.hpp"
#include "reverger/telemetry.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <thread>

#include <pthread.h>

namespace {

using namespace reverger;

constexpr int kExitCorrupt = 1;
constexpr int kExitError = 2;

struct ServeArgs {
    std::string config;
    std::optional<std::string> host;
    std::optional<int> port;
    std::optional<std::string> data_dir;
    std::optional<std::string> fixtures_dir;
    std::optional<std::string> templates_dir;
    std::optional<std::string> mode;
    std::optional<std::uint64_t> seed;
    bool lenient = false;
};

int serve(const ServeArgs& args) {
    ServiceConfig config;
    if (!args.config.empty()) config.merge_file(args.config);
    config.apply_environment();
    if (args.host) config.host = *args.host;
    if (args.port) config.port = *args.port;
    if (args.data_dir) config.data_dir = *args.data_dir;
    if (args.fixtures_dir) config.provider.fixtures_dir = *args.fixtures_dir;
    if (args.templates_dir) config.templates_dir = *args.templates_dir;
    if (args.mode) config.default_policy = policy_from_config({{"mode", *args.mode}});
    if (args.seed) config.provider.seed = *args.seed;
    if (args.lenient) config.provider.strict = false;
    config.validate();

    std::optional<std::string> token;
    if (!config.auth_token_env.empty()) {
        const char* v = std::getenv(config.auth_token_env.c_str());
        if (v == nullptr || *v == '\0') {
            throw Error(ErrorCode::InvalidConfig,
                        "auth_token_env names " + config.auth_token_env + ", which is not set");
        }
        token = v;
    }

    std::optional<TemplateSet> templates;
    if (config.templates_dir) templates = TemplateSet::load(*config.templates_dir);

    StoreOptions so;
    so.data_dir = config.data_dir;
    so.snapshot_every = config.snapshot_every;
    so.engine.max_length_ratio = config.max_length_ratio;
    if (templates) so.engine.templates = &*templates;

    // Signals are taken synchronously by a dedicated thread; block them first
    // so the server's worker threads inherit the mask.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    SessionStore store(make_provider(config.provider), so);
    for (const auto& f : store.load()) {
        std::cerr << "warning: session " << f.session_id << " not loaded: " << f.message << "\n";
    }

    ServerOptions server_options;
    server_options.auth_token = token;
    server_options.cors_origin = config.cors_origin;
    server_options.default_policy = config.default_policy;
    ApiServer server(store, server_options);
    const int port = server.bind(config.host, config.port);
    std::cerr << "reverger listening on " << config.host << ":" << port << " (provider "
              << to_string(config.provider.kind) << ", " << store.ids().size() << " sessions loaded)\n";

    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        server.stop();
    });
    server.run();
    // run() also returns when the listener fails; wake the waiter either way.
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return 0;
}

std::vector<SessionEvent> load_log(const std::string& file) {
    LoadedLog loaded = read_event_log(file);
    if (loaded.torn_tail) std::cerr << "note: ignoring an incomplete final line\n";
    return std::move(loaded.events);
}

int replay_cmd(const std::string& file, const std::string& snapshot_file, bool as_json) {
    const auto events = load_log(file);
    const Session s = replay(events);

    if (!snapshot_file.empty()) {
        const auto snap = nlohmann::json::parse(read_file(snapshot_file));
        Session expected = codec::session_from_snapshot(snap);
        const auto upto = snap.at("last_ordinal").get<std::uint64_t>();
        if (upto == 0 || upto > events.size()) {
            std::cerr << "snapshot is ahead of the log (ordinal " << upto << ")\n";
            return kExitCorrupt;
        }
        Session prefix = replay(std::span(events).first(upto));
        expected.event_log = prefix.event_log;
        if (!(prefix == expected)) {
            std::cerr << "MISMATCH: replayed state differs from the snapshot at ordinal " << upto << "\n";
            return kExitCorrupt;
        }
        std::cerr << "snapshot at ordinal " << upto << " matches the replayed state\n";
    }

    if (as_json) {
        std::cout << codec::session_view(s).dump(2) << "\n";
    } else {
        std::cout << "session " << s.session_id << ": " << s.event_log.size() << " events, "
                  << s.document.revision_count() << " revisions, " << s.tree.nodes().size()
                  << " directions, " << s.tracker.entries().size() << " variations\n";
        std::cout << s.document.text();
        if (!s.document.text().empty() && s.document.text().back() != '\n') std::cout << "\n";
    }
    return 0;
}

int telemetry_cmd(const std::string& file, bool as_json, const std::string& participant, bool header) {
    const auto events = load_log(file);
    (void)replay(events);  // a log that does not replay is not summarized
    const TelemetrySummary t = summarize(events);
    if (as_json) {
        std::cout << telemetry_to_json(t).dump(2) << "\n";
        return 0;
    }
    if (header) std::cout << format_table_header() << "\n";
    std::cout << format_table_row(participant.empty() ? events.front().payload.value("session_id", "-") : participant, t)
              << "\n";
    return 0;
}

int fixtures_verify(const std::string& dir, const std::string& sources_file) {
    std::optional<FixtureSources> sources;
    if (!sources_file.empty()) sources = FixtureSources::load(sources_file);
    const FixtureReport report = verify_fixtures(dir, sources ? &*sources : nullptr);
    for (const auto& p : report.problems) std::cout << "FAIL " << p << "\n";
    std::cout << (report.ok() ? "ok" : "failed") << ": " << report.entries << " fixtures, "
              << report.problems.size() << " problems\n";
    return report.ok() ? 0 : kExitCorrupt;
}

int fixtures_build(const std::string& sources_file, const std::string& out_dir) {
    const FixtureSources sources = FixtureSources::load(sources_file);
    const FixtureCorpus corpus = build_fixture_corpus(sources);
    std::error_code ec;
    std::filesystem::remove_all(out_dir, ec);
    corpus.save(out_dir);
    std::cout << "wrote " << corpus.entries().size() << " fixtures to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Story variation service: divergent direction trees and convergent synthesis"};
    app.require_subcommand(1);

    ServeArgs serve_args;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
    serve_cmd->add_option("--config", serve_args.config, "JSON config file");
    serve_cmd->add_option("--host", serve_args.host, "Bind address");
    serve_cmd->add_option("--port", serve_args.port, "Port (0 picks a free one)");
    serve_cmd->add_option("--data-dir", serve_args.data_dir, "Directory for event logs and snapshots");
    serve_cmd->add_option("--fixtures", serve_args.fixtures_dir, "Mock fixture corpus directory");
    serve_cmd->add_option("--templates", serve_args.templates_dir, "Prompt template directory");
    serve_cmd->add_option("--mode", serve_args.mode, "Default exploration mode")->check(CLI::IsMember({"full", "baseline"}));
    serve_cmd->add_option("--seed", serve_args.seed, "Mock provider seed");
    serve_cmd->add_flag("--lenient", serve_args.lenient, "Mock serves placeholders for missing fixtures");

    std::string log_file, snapshot_file, participant;
    bool as_json = false, header = false;
    auto* replay_sub = app.add_subcommand("replay", "Rebuild a session from its event log");
    replay_sub->add_option("logfile", log_file, "events.jsonl")->required();
    replay_sub->add_option("--snapshot", snapshot_file, "Compare against a stored snapshot");
    replay_sub->add_flag("--json", as_json, "Print the session view as JSON");

    auto* telemetry_sub = app.add_subcommand("telemetry", "Summarize an event log as a table row");
    telemetry_sub->add_option("logfile", log_file, "events.jsonl")->required();
    telemetry_sub->add_option("--participant", participant, "Row label (defaults to the session id)");
    telemetry_sub->add_flag("--header", header, "Print the column header first");
    telemetry_sub->add_flag("--json", as_json, "Print the summary as JSON");

    std::string corpus_dir = "fixtures/corpus";
    std::string sources_file;
    auto* fixtures_sub = app.add_subcommand("fixtures", "Mock fixture corpus tools");
    fixtures_sub->require_subcommand(1);
    auto* verify_sub = fixtures_sub->add_subcommand("verify", "Check the corpus");
    verify_sub->add_option("--dir", corpus_dir, "Corpus directory");
    verify_sub->add_option("--sources", sources_file, "Source file the corpus is built from");
    auto* build_sub = fixtures_sub->add_subcommand("build", "Build the corpus from its sources");
    std::string build_sources = "fixtures/sources.json";
    build_sub->add_option("--sources", build_sources, "Source file");
    build_sub->add_option("--out", corpus_dir, "Output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*serve_cmd) return serve(serve_args);
        if (*replay_sub) return replay_cmd(log_file, snapshot_file, as_json);
        if (*telemetry_sub) return telemetry_cmd(log_file, as_json, participant, header);
        if (*verify_sub) return fixtures_verify(corpus_dir, sources_file);
        if (*build_sub) return fixtures_build(build_sources, corpus_dir);
    } catch (const Error& e) {
        std::cerr << code_string(e.code()) << ": " << e.what() << "\n";
        return e.code() == ErrorCode::CorruptLog ? kExitCorrupt : kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
