#include "reverger/server.hpp"

#include "reverger/config.hpp"
#include "reverger/error.hpp"
#include "reverger/serialization.hpp"

#include <httplib.h>

#include <algorithm>
#include <charconv>

namespace reverger {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
    send_json(res, http_status(code), {{"error", {{"code", code_string(code)}, {"message", message}}}});
}

json parse_body(const httplib::Request& req) {
    try {
        return json::parse(req.body);
    } catch (const json::exception&) {
        throw Error(ErrorCode::MalformedCommand, "request body is not valid JSON");
    }
}

std::uint64_t query_uint(const httplib::Request& req, const char* name, std::uint64_t fallback) {
    if (!req.has_param(name)) return fallback;
    const std::string v = req.get_param_value(name);
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        throw Error(ErrorCode::MalformedCommand, std::string("query parameter '") + name + "' must be a non-negative integer");
    }
    return out;
}

json notices_for(const CommandResult& r) {
    json out = json::array();
    if (r.span_invalidated) out.push_back({{"code", "SPAN_INVALIDATED"}, {"message", "the edit overlapped the highlight, which was cleared"}});
    const auto& p = r.event.payload;
    if (r.event.kind == EventKind::synthesized) {
        const auto& v = p.at("variation");
        if (v.at("validation").at("too_long").get<bool>()) {
            out.push_back({{"code", "VARIATION_TOO_LONG"}, {"message", "variation is more than the allowed multiple of the passage length"}});
        }
        if (v.at("validation").at("no_emphasis").get<bool>()) {
            out.push_back({{"code", "NO_EMPHASIS"}, {"message", "variation marks no changed phrase"}});
        }
        if (v.at("lenient_parse").get<bool>()) {
            out.push_back({{"code", "LENIENT_PARSE"}, {"message", "an unpaired emphasis delimiter was dropped"}});
        }
    }
    if (p.contains("generation") && p.at("generation").value("suffixed", false)) {
        out.push_back({{"code", "LABELS_SUFFIXED"}, {"message", "duplicate direction labels were disambiguated"}});
    }
    return out;
}

}  // namespace

struct ApiServer::Impl {
    SessionStore& store;
    ServerOptions options;
    httplib::Server http;

    Impl(SessionStore& s, ServerOptions o) : store(s), options(std::move(o)) {}

    bool authorized(const httplib::Request& req) const {
        if (!options.auth_token) return true;
        return req.get_header_value("Authorization") == "Bearer " + *options.auth_token;
    }

    template <typename F>
    httplib::Server::Handler wrap(F f, bool needs_auth = true) {
        return [this, f, needs_auth](const httplib::Request& req, httplib::Response& res) {
            try {
                if (needs_auth && !authorized(req)) {
                    throw Error(ErrorCode::Unauthorized, "missing or wrong bearer token");
                }
                f(req, res);
            } catch (const Error& e) {
                send_error(res, e.code(), e.what());
            } catch (const json::exception& e) {
                send_error(res, ErrorCode::MalformedCommand, e.what());
            } catch (const std::exception& e) {
                send_error(res, ErrorCode::IoError, e.what());
            }
        };
    }

    void routes() {
        http.set_default_headers({{"Access-Control-Allow-Origin", options.cors_origin},
                                  {"Access-Control-Allow-Headers", "Authorization, Content-Type"},
                                  {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
        http.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

        http.Get("/healthz", wrap([this](const httplib::Request& req, httplib::Response& res) {
                     json body{{"status", "ok"}, {"provider", to_string(store.provider().kind())}};
                     if (req.has_param("deep") && req.get_param_value("deep") != "0") {
                         const bool ok = store.provider().health_check() == HealthStatus::healthy;
                         body["provider_health"] = ok ? "healthy" : "unhealthy";
                         if (!ok) {
                             body["status"] = "degraded";
                             send_json(res, 503, body);
                             return;
                         }
                     }
                     send_json(res, 200, body);
                 }, false));

        http.Post("/sessions", wrap([this](const httplib::Request& req, httplib::Response& res) {
                      const json body = parse_body(req);
                      if (!body.is_object() || !body.contains("text") || !body.at("text").is_string()) {
                          throw Error(ErrorCode::MalformedCommand, "body needs a string field 'text'");
                      }
                      ExplorationPolicy policy = options.default_policy;
                      if (body.contains("policy") && !body.at("policy").is_null()) {
                          try {
                              policy = policy_from_config(body.at("policy"), options.default_policy);
                          } catch (const Error& e) {
                              throw Error(ErrorCode::MalformedCommand, e.what());
                          }
                      }
                      const std::string id = store.create(body.at("text").get<std::string>(), policy);
                      send_json(res, 201, {{"session_id", id}, {"view", codec::session_view(*store.get(id))}});
                  }));

        http.Get("/sessions", wrap([this](const httplib::Request&, httplib::Response& res) {
                     send_json(res, 200, {{"sessions", store.ids()}});
                 }));

        http.Get(R"(/sessions/([^/]+))", wrap([this](const httplib::Request& req, httplib::Response& res) {
                     send_json(res, 200, codec::session_view(*store.get(req.matches[1].str())));
                 }));

        http.Post(R"(/sessions/([^/]+)/commands)",
                  wrap([this](const httplib::Request& req, httplib::Response& res) {
                      const std::string id = req.matches[1].str();
                      (void)store.get(id);  // unknown session wins over a bad body
                      const Command command = parse_command(parse_body(req));
                      CommandResult r = store.command(id, command);
                      send_json(res, 200,
                                {{"event", codec::event_to_json(r.event)},
                                 {"view", codec::session_view(*r.session)},
                                 {"notices", notices_for(r)}});
                  }));

        http.Get(R"(/sessions/([^/]+)/telemetry)",
                 wrap([this](const httplib::Request& req, httplib::Response& res) {
                     send_json(res, 200, telemetry_to_json(store.telemetry(req.matches[1].str())));
                 }));

        http.Get(R"(/sessions/([^/]+)/events)",
                 wrap([this](const httplib::Request& req, httplib::Response& res) {
                     const std::string id = req.matches[1].str();
                     const auto since = query_uint(req, "since", 0);
                     const auto wait = std::min<std::uint64_t>(query_uint(req, "wait_ms", 0),
                                                               static_cast<std::uint64_t>(options.max_wait.count()));
                     const auto events = store.events_since(id, since, std::chrono::milliseconds(wait));
                     json list = json::array();
                     for (const auto& e : events) list.push_back(codec::event_to_json(e));
                     send_json(res, 200, {{"events", list}, {"last_ordinal", store.get(id)->last_ordinal()}});
                 }));

        http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.status == 404 && res.body.empty()) {
                send_json(res, 404, {{"error", {{"code", "NOT_FOUND"}, {"message", "no such endpoint"}}}});
            }
        });
    }
};

ApiServer::ApiServer(SessionStore& store, ServerOptions options)
    : impl_(std::make_unique<Impl>(store, std::move(options))) {
    impl_->routes();
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = impl_->http.bind_to_any_port(host);
        if (bound < 0) throw Error(ErrorCode::IoError, "cannot bind " + host);
        return bound;
    }
    if (!impl_->http.bind_to_port(host, port)) {
        throw Error(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

void ApiServer::run() { impl_->http.listen_after_bind(); }

void ApiServer::stop() {
    if (impl_ && impl_->http.is_running()) impl_->http.stop();
}

void ApiServer::wait_until_ready() const { impl_->http.wait_until_ready(); }

}  // namespace reverger
