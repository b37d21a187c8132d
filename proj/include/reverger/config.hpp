#pragma once

#include "reverger/cart.hpp"
#include "reverger/gateway.hpp"
#include "reverger/prompts.hpp"

#include <json.hpp>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

namespace reverger {

// Service settings. Sources are layered: built-in defaults, then a JSON file,
// then REVERGER_* / PROVIDER_* environment variables, then CLI flags.
struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::optional<std::filesystem::path> data_dir;
    std::optional<std::filesystem::path> templates_dir;
    ProviderConfig provider;
    ExplorationPolicy default_policy = ExplorationPolicy::full();
    double max_length_ratio = kDefaultLengthRatio;
    std::string auth_token_env;  // name of the variable holding the bearer token
    std::size_t snapshot_every = 20;
    std::string cors_origin = "*";

    // Overlays a parsed config document. Relative paths resolve against
    // base_dir. Unknown keys are rejected. Throws InvalidConfig.
    void merge_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
    void merge_file(const std::filesystem::path& file);
    void apply_environment();
    void validate() const;

    [[nodiscard]] nlohmann::json to_json() const;  // never includes secrets
};

// Parses {"mode", "root_count", "sub_count", "max_depth"}; a mode alone selects
// that mode's preset. Throws InvalidConfig.
ExplorationPolicy policy_from_config(const nlohmann::json& j,
                                     const ExplorationPolicy& fallback = ExplorationPolicy::full());

}  // namespace reverger
