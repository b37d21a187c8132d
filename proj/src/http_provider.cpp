#include "reverger/error.hpp"
#include "reverger/gateway.hpp"

#include <httplib.h>

#include <cstdlib>
#include <thread>

namespace reverger {

namespace {

struct SplitUrl {
    std::string base;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorCode::InvalidConfig, "endpoint must be an absolute http(s) URL");
    }
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw Error(ErrorCode::InvalidConfig, "endpoint scheme must be http or https");
    }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (scheme == "https") {
        throw Error(ErrorCode::InvalidConfig, "this build has no TLS support for https endpoints");
    }
#endif
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

bool is_timeout(httplib::Error e) {
    return e == httplib::Error::Read || e == httplib::Error::Write ||
           e == httplib::Error::ConnectionTimeout;
}

}  // namespace

HttpProvider::HttpProvider(ProviderConfig config)
    : Provider(config.concurrency_limit), config_(std::move(config)) {
    config_.validate();
    auto split = split_endpoint(config_.endpoint);
    base_url_ = std::move(split.base);
    path_ = std::move(split.path);
}

GenerationResult HttpProvider::do_generate(const CompiledPrompt& prompt, std::string_view) {
    return send(prompt.text, config_.max_retries);
}

HealthStatus HttpProvider::health_check() {
    send("Reply with the single word: ok", 0);
    return HealthStatus::healthy;
}

GenerationResult HttpProvider::send(std::string_view prompt_text, int max_retries) {
    const WireProfile& profile = config_.profile;

    nlohmann::json body = profile.extra_body.is_object() ? profile.extra_body
                                                         : nlohmann::json::object();
    body[profile.model_field] = config_.model;
    body[profile.messages_field] =
        nlohmann::json::array({{{"role", "user"}, {"content", std::string(prompt_text)}}});
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key) {
        headers.emplace(profile.auth_header, profile.auth_prefix + key);
    }
    for (const auto& [k, v] : profile.extra_headers) headers.emplace(k, v);

    httplib::Client client(base_url_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);

    const auto started = std::chrono::steady_clock::now();
    auto backoff = config_.backoff_initial;
    bool timed_out = false;
    std::string last_problem;

    for (int attempt = 1; attempt <= max_retries + 1; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        auto res = client.Post(path_, headers, payload, "application/json");
        if (!res) {
            timed_out = is_timeout(res.error());
            last_problem = "request failed: " + httplib::to_string(res.error());
            continue;
        }
        const int status = res->status;
        if (status >= 500 || status == 429) {
            timed_out = false;
            last_problem = "provider answered HTTP " + std::to_string(status);
            if (status == 429 && attempt == max_retries + 1) {
                throw Error(ErrorCode::ProviderRejected, last_problem);
            }
            continue;
        }
        if (status >= 400) {
            throw Error(ErrorCode::ProviderRejected, "provider answered HTTP " + std::to_string(status));
        }
        if (status < 200 || status >= 300) {
            throw Error(ErrorCode::MalformedProviderEnvelope,
                        "unexpected HTTP status " + std::to_string(status));
        }

        nlohmann::json envelope = nlohmann::json::parse(res->body, nullptr, false);
        if (envelope.is_discarded()) {
            throw Error(ErrorCode::MalformedProviderEnvelope, "provider response is not JSON");
        }
        const nlohmann::json::json_pointer pointer(profile.response_text_pointer);
        if (!envelope.contains(pointer) || !envelope.at(pointer).is_string()) {
            throw Error(ErrorCode::MalformedProviderEnvelope,
                        "provider response has no text at " + profile.response_text_pointer);
        }
        GenerationResult result;
        result.text = envelope.at(pointer).get<std::string>();
        result.attempt = attempt;
        result.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - started);
        return result;
    }
    throw Error(timed_out ? ErrorCode::ProviderTimeout : ErrorCode::ProviderUnavailable,
                last_problem + " after " + std::to_string(max_retries + 1) + " attempt(s)");
}

}  // namespace reverger
