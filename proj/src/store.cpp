#include "reverger/store.hpp"

#include "reverger/error.hpp"
#include "reverger/serialization.hpp"

#include <cstdio>
#include <random>

namespace reverger {

namespace {

constexpr const char* kLogFile = "events.jsonl";
constexpr const char* kSnapshotFile = "snapshot.json";

// FIFO admission: tickets are served in the order they were drawn.
class TicketGuard {
public:
    TicketGuard(std::mutex& mu, std::condition_variable& cv, std::uint64_t& next, std::uint64_t& serving)
        : mu_(mu), cv_(cv), serving_(serving) {
        std::unique_lock lk(mu_);
        const std::uint64_t mine = next++;
        cv_.wait(lk, [&] { return serving_ == mine; });
    }
    ~TicketGuard() {
        {
            std::lock_guard lk(mu_);
            ++serving_;
        }
        cv_.notify_all();
    }
    TicketGuard(const TicketGuard&) = delete;
    TicketGuard& operator=(const TicketGuard&) = delete;

private:
    std::mutex& mu_;
    std::condition_variable& cv_;
    std::uint64_t& serving_;
};

bool valid_id(std::string_view id) {
    if (id.empty() || id.size() > 64) return false;
    for (char c : id) {
        const bool ok = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        c == '-' || c == '_';
        if (!ok) return false;
    }
    return true;
}

}  // namespace

SessionStore::SessionStore(ProviderHandle provider, StoreOptions options)
    : provider_(std::move(provider)), options_(std::move(options)), rng_state_(std::random_device{}()) {
    if (!provider_) throw Error(ErrorCode::InvalidConfig, "session store needs a provider");
    rng_state_ = (rng_state_ << 32) ^ std::random_device{}();
    if (options_.data_dir) {
        std::error_code ec;
        std::filesystem::create_directories(*options_.data_dir, ec);
        if (ec) throw Error(ErrorCode::IoError, "cannot create " + options_.data_dir->string() + ": " + ec.message());
    }
}

std::filesystem::path SessionStore::log_path(const std::filesystem::path& dir, std::string_view id) {
    return dir / std::string(id) / kLogFile;
}

std::filesystem::path SessionStore::snapshot_path(const std::filesystem::path& dir, std::string_view id) {
    return dir / std::string(id) / kSnapshotFile;
}

std::vector<LoadFailure> SessionStore::load() {
    std::vector<LoadFailure> failures;
    if (!options_.data_dir) return failures;
    for (const auto& dirent : std::filesystem::directory_iterator(*options_.data_dir)) {
        if (!dirent.is_directory()) continue;
        const std::string id = dirent.path().filename().string();
        const auto log_file = log_path(*options_.data_dir, id);
        if (!valid_id(id) || !std::filesystem::exists(log_file)) continue;
        try {
            LoadedLog loaded = read_event_log(log_file);
            Session s = replay(loaded.events);
            if (s.session_id != id) throw Error(ErrorCode::CorruptLog, "log belongs to another session");
            auto e = std::make_shared<Entry>();
            e->writer = std::make_unique<EventLogWriter>(
                log_file, loaded.torn_tail ? std::optional(loaded.committed_bytes) : std::nullopt);
            e->state = std::make_shared<const Session>(std::move(s));
            std::unique_lock lk(map_mu_);
            sessions_[id] = std::move(e);
        } catch (const Error& err) {
            failures.push_back({id, err.what()});
        }
    }
    return failures;
}

std::string SessionStore::fresh_id() {
    std::lock_guard lk(rng_mu_);
    std::mt19937_64 rng(rng_state_);
    for (;;) {
        const std::uint64_t v = rng();
        rng_state_ = rng();
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
        std::string id = std::string("s") + buf;
        std::shared_lock mlk(map_mu_);
        if (!sessions_.count(id)) return id;
    }
}

std::string SessionStore::create(std::string_view story_text, const ExplorationPolicy& policy) {
    const EngineOptions& eo = options_.engine;
    const std::string id = fresh_id();
    Session s = create_session(id, story_text, policy, eo.clock ? eo.clock() : now_ms());
    auto e = std::make_shared<Entry>();
    if (options_.data_dir) {
        std::error_code ec;
        std::filesystem::create_directories(*options_.data_dir / id, ec);
        if (ec) throw Error(ErrorCode::IoError, "cannot create session directory: " + ec.message());
        e->writer = std::make_unique<EventLogWriter>(log_path(*options_.data_dir, id));
        e->writer->append(s.event_log.front());
    }
    e->state = std::make_shared<const Session>(std::move(s));
    std::unique_lock lk(map_mu_);
    sessions_[id] = std::move(e);
    return id;
}

std::shared_ptr<SessionStore::Entry> SessionStore::entry(std::string_view id) const {
    std::shared_lock lk(map_mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "no session '" + std::string(id) + "'");
    return it->second;
}

std::shared_ptr<const Session> SessionStore::get(std::string_view id) const {
    auto e = entry(id);
    std::lock_guard lk(e->state_mu);
    return e->state;
}

std::vector<std::string> SessionStore::ids() const {
    std::shared_lock lk(map_mu_);
    std::vector<std::string> out;
    for (const auto& [id, e] : sessions_) out.push_back(id);
    return out;
}

void SessionStore::persist(Entry& e, const Session& next, const SessionEvent& event) {
    if (!e.writer) return;
    e.writer->append(event);
    if (options_.snapshot_every > 0 && ++e.since_snapshot >= options_.snapshot_every) {
        write_file_atomically(snapshot_path(*options_.data_dir, next.session_id),
                              codec::session_snapshot(next).dump(2) + "\n");
        e.since_snapshot = 0;
    }
}

CommandResult SessionStore::command(std::string_view id, const Command& command) {
    auto e = entry(id);
    TicketGuard turn(e->queue_mu, e->queue_cv, e->next_ticket, e->serving);
    std::shared_ptr<const Session> current;
    {
        std::lock_guard lk(e->state_mu);
        current = e->state;
    }
    CommandOutcome out = execute(*current, command, *provider_, options_.engine);
    persist(*e, out.session, out.event);
    auto next = std::make_shared<const Session>(std::move(out.session));
    {
        std::lock_guard lk(e->state_mu);
        e->state = next;
    }
    e->state_cv.notify_all();
    return {std::move(next), std::move(out.event), out.span_invalidated};
}

std::vector<SessionEvent> SessionStore::events_since(std::string_view id, std::uint64_t since,
                                                     std::chrono::milliseconds wait) {
    auto e = entry(id);
    std::shared_ptr<const Session> s;
    {
        std::unique_lock lk(e->state_mu);
        if (wait.count() > 0) {
            e->state_cv.wait_for(lk, wait, [&] { return e->state->last_ordinal() > since; });
        }
        s = e->state;
    }
    std::vector<SessionEvent> out;
    for (const auto& ev : s->event_log) {
        if (ev.ordinal > since) out.push_back(ev);
    }
    return out;
}

TelemetrySummary SessionStore::telemetry(std::string_view id) const {
    return summarize(get(id)->event_log);
}

}  // namespace reverger
