#pragma once

#include "reverger/cart.hpp"
#include "reverger/store.hpp"

#include <chrono>
#include <memory>
#include <optional>
#include <string>

namespace reverger {

struct ServerOptions {
    std::optional<std::string> auth_token;  // the token value; absent disables auth
    std::string cors_origin = "*";
    ExplorationPolicy default_policy = ExplorationPolicy::full();
    std::chrono::milliseconds max_wait{30'000};  // cap on long-poll waits
};

// HTTP front end over a SessionStore.
//   POST /sessions                    {text, policy?}       -> 201 {session_id, view}
//   GET  /sessions                                          -> {sessions}
//   GET  /sessions/{id}                                     -> view
//   POST /sessions/{id}/commands      {kind, ...}           -> {event, view, notices}
//   GET  /sessions/{id}/telemetry                           -> summary
//   GET  /sessions/{id}/events?since=&wait_ms=              -> {events, last_ordinal}
//   GET  /healthz[?deep=1]
// Errors: {"error": {"code": "...", "message": "..."}}.
class ApiServer {
public:
    ApiServer(SessionStore& store, ServerOptions options);
    ~ApiServer();

    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    // Binds; port 0 picks a free one. Returns the bound port. Throws IoError.
    int bind(const std::string& host, int port);
    // Serves until stop(). Blocks.
    void run();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace reverger
