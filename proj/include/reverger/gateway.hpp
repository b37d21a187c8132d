#pragma once

#include "reverger/prompts.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace reverger {

enum class ProviderKind { mock, http };

std::string_view to_string(ProviderKind kind) noexcept;

enum class HealthStatus { healthy, unhealthy };

// Field layout of a chat-completion style endpoint. Sampling parameters are
// never sent; the vendor defaults apply.
struct WireProfile {
    std::string name = "openai";
    std::string model_field = "model";
    std::string messages_field = "messages";
    std::string response_text_pointer = "/choices/0/message/content";
    std::string auth_header = "Authorization";
    std::string auth_prefix = "Bearer ";
    std::map<std::string, std::string> extra_headers;
    nlohmann::json extra_body = nlohmann::json::object();

    static WireProfile named(std::string_view name);
};

struct ProviderConfig {
    ProviderKind kind = ProviderKind::mock;

    // http
    std::string endpoint;
    std::string model;
    std::string api_key_env;  // name of the variable holding the key, never the key
    WireProfile profile;
    std::chrono::milliseconds timeout{60'000};
    int max_retries = 2;
    std::chrono::milliseconds backoff_initial{250};

    // mock
    std::uint64_t seed = 0;
    std::filesystem::path fixtures_dir;
    bool strict = true;

    std::size_t concurrency_limit = 4;

    // Throws InvalidConfig.
    void validate() const;

    // Overlays PROVIDER_KIND, PROVIDER_ENDPOINT, PROVIDER_MODEL,
    // PROVIDER_API_KEY_ENV and PROVIDER_TIMEOUT_MS when set.
    void apply_environment();
};

struct GenerationResult {
    std::string text;
    std::chrono::milliseconds latency{0};
    int attempt = 1;
    std::size_t ordinal = 0;  // mock only: per-session call ordinal for this prompt
};

// A text-generation backend. generate() is thread-safe; at most
// concurrency_limit calls run at once per provider.
class Provider {
public:
    explicit Provider(std::size_t concurrency_limit);
    virtual ~Provider() = default;

    Provider(const Provider&) = delete;
    Provider& operator=(const Provider&) = delete;

    GenerationResult generate(const CompiledPrompt& prompt, std::string_view session_id);

    virtual HealthStatus health_check() = 0;
    [[nodiscard]] virtual ProviderKind kind() const noexcept = 0;

protected:
    virtual GenerationResult do_generate(const CompiledPrompt& prompt,
                                         std::string_view session_id) = 0;

private:
    static constexpr std::ptrdiff_t kMaxConcurrency = 256;
    std::counting_semaphore<kMaxConcurrency> slots_;
};

using ProviderHandle = std::shared_ptr<Provider>;

ProviderHandle make_provider(const ProviderConfig& config);

// ---------------------------------------------------------------------------
// Mock provider and its fixture corpus.

struct FixtureEntry {
    PromptKind kind = PromptKind::root_directions;
    std::string digest;
    std::size_t ordinal = 1;
    std::optional<std::uint64_t> seed;  // absent: serves every seed
    std::string file;

    // Canonical file name: <kind>-<digest>-<ordinal>.txt
    [[nodiscard]] std::string canonical_file() const;
};

inline constexpr std::string_view kFixtureIndexFile = "index.json";
inline constexpr int kFixtureFormatVersion = 1;

class FixtureCorpus {
public:
    FixtureCorpus() = default;

    // Reads <dir>/index.json and every file it lists. Throws IoError.
    static FixtureCorpus load(const std::filesystem::path& dir);

    void add(FixtureEntry entry, std::string text);

    // Seed-specific entries win over seed-agnostic ones.
    [[nodiscard]] const std::string* find(PromptKind kind, std::string_view digest,
                                          std::size_t ordinal, std::uint64_t seed) const;

    [[nodiscard]] const std::vector<FixtureEntry>& entries() const noexcept { return entries_; }
    [[nodiscard]] const std::string& text_of(std::size_t entry) const { return texts_.at(entry); }

    // Writes index.json and one file per entry.
    void save(const std::filesystem::path& dir) const;

private:
    std::vector<FixtureEntry> entries_;
    std::vector<std::string> texts_;
    std::map<std::tuple<PromptKind, std::string, std::size_t, std::optional<std::uint64_t>>,
             std::size_t>
        index_;
};

class MockProvider final : public Provider {
public:
    MockProvider(FixtureCorpus corpus, std::uint64_t seed, bool strict,
                 std::size_t concurrency_limit = 4);

    HealthStatus health_check() override { return HealthStatus::healthy; }
    [[nodiscard]] ProviderKind kind() const noexcept override { return ProviderKind::mock; }

    // The text served for a given key without advancing any counter.
    [[nodiscard]] std::string response_for(const CompiledPrompt& prompt, std::size_t ordinal) const;

    // Deterministic stand-in used in lenient mode when no fixture matches.
    [[nodiscard]] static std::string placeholder(const CompiledPrompt& prompt, std::uint64_t seed,
                                                 std::size_t ordinal);

    [[nodiscard]] const FixtureCorpus& corpus() const noexcept { return corpus_; }

protected:
    GenerationResult do_generate(const CompiledPrompt& prompt, std::string_view session_id) override;

private:
    FixtureCorpus corpus_;
    std::uint64_t seed_;
    bool strict_;
    std::mutex mutex_;
    // session -> (kind, digest) -> calls made so far
    std::map<std::string, std::map<std::pair<PromptKind, std::string>, std::size_t>, std::less<>>
        ordinals_;
};

// ---------------------------------------------------------------------------
// Live chat-completion client.

class HttpProvider final : public Provider {
public:
    explicit HttpProvider(ProviderConfig config);

    HealthStatus health_check() override;
    [[nodiscard]] ProviderKind kind() const noexcept override { return ProviderKind::http; }

protected:
    GenerationResult do_generate(const CompiledPrompt& prompt, std::string_view session_id) override;

private:
    GenerationResult send(std::string_view prompt_text, int max_retries);

    ProviderConfig config_;
    std::string base_url_;
    std::string path_;
};

}  // namespace reverger
