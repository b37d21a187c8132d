#include "reverger/config.hpp"

#include "reverger/error.hpp"
#include "reverger/event_log.hpp"
#include "reverger/serialization.hpp"

#include <cstdlib>
#include <set>

namespace reverger {

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); }

void only_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) bad(where + " must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items()) {
        if (!ok.count(key)) bad("unknown key '" + key + "' in " + where);
    }
}

template <typename T>
T get(const nlohmann::json& j, const char* key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        bad(where + "." + key + " has the wrong type");
    }
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
    return p.is_relative() && !base.empty() ? base / p : p;
}

std::optional<std::string> env(const char* name) {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
}

long long env_int(const char* name, const std::string& value) {
    char* end = nullptr;
    const long long n = std::strtoll(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0') bad(std::string(name) + " must be an integer");
    return n;
}

}  // namespace

ExplorationPolicy policy_from_config(const nlohmann::json& j, const ExplorationPolicy& fallback) {
    only_keys(j, {"mode", "root_count", "sub_count", "max_depth"}, "policy");
    ExplorationPolicy p = fallback;
    if (j.contains("mode")) {
        const auto mode = exploration_mode_from_string(get<std::string>(j, "mode", "policy"));
        if (!mode) bad("policy.mode must be 'full' or 'baseline'");
        p = *mode == ExplorationMode::baseline ? ExplorationPolicy::baseline() : ExplorationPolicy::full();
    }
    if (j.contains("root_count")) p.root_count = get<std::size_t>(j, "root_count", "policy");
    if (j.contains("sub_count")) p.sub_count = get<std::size_t>(j, "sub_count", "policy");
    if (j.contains("max_depth")) {
        if (j.at("max_depth").is_null()) {
            p.max_depth.reset();
        } else {
            p.max_depth = get<std::size_t>(j, "max_depth", "policy");
        }
    }
    p.validate();
    return p;
}

void ServiceConfig::merge_json(const nlohmann::json& doc, const std::filesystem::path& base) {
    only_keys(doc,
              {"host", "port", "data_dir", "templates_dir", "provider", "policy", "max_length_ratio",
               "auth_token_env", "snapshot_every", "cors_origin"},
              "config");
    const std::string w = "config";
    if (doc.contains("host")) host = get<std::string>(doc, "host", w);
    if (doc.contains("port")) port = get<int>(doc, "port", w);
    if (doc.contains("data_dir")) data_dir = resolve(get<std::string>(doc, "data_dir", w), base);
    if (doc.contains("templates_dir")) templates_dir = resolve(get<std::string>(doc, "templates_dir", w), base);
    if (doc.contains("policy")) default_policy = policy_from_config(doc.at("policy"), default_policy);
    if (doc.contains("max_length_ratio")) max_length_ratio = get<double>(doc, "max_length_ratio", w);
    if (doc.contains("auth_token_env")) auth_token_env = get<std::string>(doc, "auth_token_env", w);
    if (doc.contains("snapshot_every")) snapshot_every = get<std::size_t>(doc, "snapshot_every", w);
    if (doc.contains("cors_origin")) cors_origin = get<std::string>(doc, "cors_origin", w);

    if (doc.contains("provider")) {
        const auto& p = doc.at("provider");
        const std::string pw = "provider";
        only_keys(p,
                  {"kind", "endpoint", "model", "api_key_env", "profile", "timeout_ms", "max_retries",
                   "backoff_ms", "seed", "fixtures_dir", "strict", "concurrency_limit"},
                  pw);
        if (p.contains("kind")) {
            const auto k = get<std::string>(p, "kind", pw);
            if (k == "mock") {
                provider.kind = ProviderKind::mock;
            } else if (k == "http") {
                provider.kind = ProviderKind::http;
            } else {
                bad("provider.kind must be 'mock' or 'http'");
            }
        }
        if (p.contains("endpoint")) provider.endpoint = get<std::string>(p, "endpoint", pw);
        if (p.contains("model")) provider.model = get<std::string>(p, "model", pw);
        if (p.contains("api_key_env")) provider.api_key_env = get<std::string>(p, "api_key_env", pw);
        if (p.contains("profile")) provider.profile = WireProfile::named(get<std::string>(p, "profile", pw));
        if (p.contains("timeout_ms")) provider.timeout = std::chrono::milliseconds(get<std::int64_t>(p, "timeout_ms", pw));
        if (p.contains("max_retries")) provider.max_retries = get<int>(p, "max_retries", pw);
        if (p.contains("backoff_ms")) {
            provider.backoff_initial = std::chrono::milliseconds(get<std::int64_t>(p, "backoff_ms", pw));
        }
        if (p.contains("seed")) provider.seed = get<std::uint64_t>(p, "seed", pw);
        if (p.contains("fixtures_dir")) provider.fixtures_dir = resolve(get<std::string>(p, "fixtures_dir", pw), base);
        if (p.contains("strict")) provider.strict = get<bool>(p, "strict", pw);
        if (p.contains("concurrency_limit")) provider.concurrency_limit = get<std::size_t>(p, "concurrency_limit", pw);
    }
}

void ServiceConfig::merge_file(const std::filesystem::path& file) {
    std::string text;
    try {
        text = read_file(file);
    } catch (const Error& e) {
        bad(e.what());
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        bad("config file " + file.string() + " is not valid JSON: " + e.what());
    }
    merge_json(doc, file.parent_path());
}

void ServiceConfig::apply_environment() {
    if (auto v = env("REVERGER_HOST")) host = *v;
    if (auto v = env("REVERGER_PORT")) port = static_cast<int>(env_int("REVERGER_PORT", *v));
    if (auto v = env("REVERGER_DATA_DIR")) data_dir = *v;
    if (auto v = env("REVERGER_TEMPLATES_DIR")) templates_dir = *v;
    if (auto v = env("REVERGER_FIXTURES_DIR")) provider.fixtures_dir = *v;
    if (auto v = env("REVERGER_AUTH_TOKEN_ENV")) auth_token_env = *v;
    if (auto v = env("REVERGER_MODE")) default_policy = policy_from_config({{"mode", *v}});
    if (auto v = env("REVERGER_SEED")) provider.seed = static_cast<std::uint64_t>(env_int("REVERGER_SEED", *v));
    provider.apply_environment();
}

void ServiceConfig::validate() const {
    if (port < 0 || port > 65535) bad("port must be in [0, 65535]");
    if (!(max_length_ratio > 0.0)) bad("max_length_ratio must be positive");
    default_policy.validate();
    provider.validate();
}

nlohmann::json ServiceConfig::to_json() const {
    nlohmann::json p{{"kind", to_string(provider.kind)},
                     {"endpoint", provider.endpoint},
                     {"model", provider.model},
                     {"api_key_env", provider.api_key_env},
                     {"profile", provider.profile.name},
                     {"timeout_ms", provider.timeout.count()},
                     {"max_retries", provider.max_retries},
                     {"backoff_ms", provider.backoff_initial.count()},
                     {"seed", provider.seed},
                     {"fixtures_dir", provider.fixtures_dir.string()},
                     {"strict", provider.strict},
                     {"concurrency_limit", provider.concurrency_limit}};
    nlohmann::json out{{"host", host},
                       {"port", port},
                       {"provider", p},
                       {"policy", codec::policy_to_json(default_policy)},
                       {"max_length_ratio", max_length_ratio},
                       {"auth_token_env", auth_token_env},
                       {"snapshot_every", snapshot_every},
                       {"cors_origin", cors_origin}};
    out["data_dir"] = data_dir ? nlohmann::json(data_dir->string()) : nlohmann::json(nullptr);
    out["templates_dir"] = templates_dir ? nlohmann::json(templates_dir->string()) : nlohmann::json(nullptr);
    return out;
}

}  // namespace reverger
