#pragma once

#include "reverger/event_log.hpp"
#include "reverger/gateway.hpp"
#include "reverger/session.hpp"
#include "reverger/telemetry.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace reverger {

struct StoreOptions {
    std::optional<std::filesystem::path> data_dir;  // absent: in memory only
    std::size_t snapshot_every = 20;                // events between snapshots, 0 disables
    EngineOptions engine;
};

struct CommandResult {
    std::shared_ptr<const Session> session;
    SessionEvent event;
    bool span_invalidated = false;
};

struct LoadFailure {
    std::string session_id;
    std::string message;
};

// Owns all live sessions. Commands on one session run strictly in arrival
// order; readers get immutable snapshots and never wait for a writer. An event
// reaches disk before the state it produces becomes visible.
class SessionStore {
public:
    SessionStore(ProviderHandle provider, StoreOptions options);

    // Replays every session found under data_dir. Sessions whose log fails
    // to replay are skipped and reported.
    std::vector<LoadFailure> load();

    std::string create(std::string_view story_text, const ExplorationPolicy& policy);

    [[nodiscard]] std::shared_ptr<const Session> get(std::string_view id) const;  // UnknownSession
    [[nodiscard]] std::vector<std::string> ids() const;

    CommandResult command(std::string_view id, const Command& command);

    // Events with ordinal > since. When none exist yet, waits up to `wait`
    // for one to arrive.
    std::vector<SessionEvent> events_since(std::string_view id, std::uint64_t since,
                                           std::chrono::milliseconds wait = std::chrono::milliseconds{0});

    TelemetrySummary telemetry(std::string_view id) const;

    [[nodiscard]] Provider& provider() noexcept { return *provider_; }
    [[nodiscard]] const StoreOptions& options() const noexcept { return options_; }

    static std::filesystem::path log_path(const std::filesystem::path& dir, std::string_view id);
    static std::filesystem::path snapshot_path(const std::filesystem::path& dir, std::string_view id);

private:
    struct Entry {
        mutable std::mutex state_mu;
        std::condition_variable state_cv;
        std::shared_ptr<const Session> state;

        std::mutex queue_mu;
        std::condition_variable queue_cv;
        std::uint64_t next_ticket = 0;
        std::uint64_t serving = 0;

        std::unique_ptr<EventLogWriter> writer;
        std::size_t since_snapshot = 0;
    };

    std::shared_ptr<Entry> entry(std::string_view id) const;
    void persist(Entry& e, const Session& next, const SessionEvent& event);
    std::string fresh_id();

    ProviderHandle provider_;
    StoreOptions options_;
    mutable std::shared_mutex map_mu_;
    std::map<std::string, std::shared_ptr<Entry>, std::less<>> sessions_;
    std::mutex rng_mu_;
    std::uint64_t rng_state_;
};

}  // namespace reverger
