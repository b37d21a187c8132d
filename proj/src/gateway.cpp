#include "reverger/gateway.hpp"

#include "reverger/error.hpp"
#include "reverger/text.hpp"

#include <array>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

namespace reverger {

std::string_view to_string(ProviderKind kind) noexcept {
    return kind == ProviderKind::http ? "http" : "mock";
}

WireProfile WireProfile::named(std::string_view name) {
    WireProfile p;
    if (name == "openai") return p;
    if (name == "anthropic") {
        p.name = "anthropic";
        p.response_text_pointer = "/content/0/text";
        p.auth_header = "x-api-key";
        p.auth_prefix = "";
        p.extra_headers = {{"anthropic-version", "2023-06-01"}};
        // The messages API rejects requests without an output bound.
        p.extra_body = {{"max_tokens", 1024}};
        return p;
    }
    throw Error(ErrorCode::InvalidConfig, "unknown wire profile '" + std::string(name) + "'");
}

void ProviderConfig::validate() const {
    if (timeout.count() <= 0) throw Error(ErrorCode::InvalidConfig, "timeout must be positive");
    if (max_retries < 0) throw Error(ErrorCode::InvalidConfig, "max_retries must be >= 0");
    if (concurrency_limit == 0 || concurrency_limit > 256) {
        throw Error(ErrorCode::InvalidConfig, "concurrency_limit must be in [1, 256]");
    }
    if (kind == ProviderKind::http) {
        if (endpoint.empty()) throw Error(ErrorCode::InvalidConfig, "http provider needs an endpoint");
        if (model.empty()) throw Error(ErrorCode::InvalidConfig, "http provider needs a model");
        if (api_key_env.empty()) {
            throw Error(ErrorCode::InvalidConfig,
                        "http provider needs the name of the environment variable holding the key");
        }
    }
}

void ProviderConfig::apply_environment() {
    auto env = [](const char* name) -> std::optional<std::string> {
        const char* v = std::getenv(name);
        if (v == nullptr || *v == '\0') return std::nullopt;
        return std::string(v);
    };
    if (auto v = env("PROVIDER_KIND")) {
        if (*v == "mock") {
            kind = ProviderKind::mock;
        } else if (*v == "http") {
            kind = ProviderKind::http;
        } else {
            throw Error(ErrorCode::InvalidConfig, "PROVIDER_KIND must be 'mock' or 'http'");
        }
    }
    if (auto v = env("PROVIDER_ENDPOINT")) endpoint = *v;
    if (auto v = env("PROVIDER_MODEL")) model = *v;
    if (auto v = env("PROVIDER_API_KEY_ENV")) api_key_env = *v;
    if (auto v = env("PROVIDER_TIMEOUT_MS")) {
        char* end = nullptr;
        const long long ms = std::strtoll(v->c_str(), &end, 10);
        if (end == v->c_str() || *end != '\0' || ms <= 0) {
            throw Error(ErrorCode::InvalidConfig, "PROVIDER_TIMEOUT_MS must be a positive integer");
        }
        timeout = std::chrono::milliseconds(ms);
    }
}

namespace {

std::ptrdiff_t checked_limit(std::size_t limit, std::ptrdiff_t max) {
    if (limit == 0 || limit > static_cast<std::size_t>(max)) {
        throw Error(ErrorCode::InvalidConfig, "concurrency_limit must be in [1, 256]");
    }
    return static_cast<std::ptrdiff_t>(limit);
}

}  // namespace

Provider::Provider(std::size_t concurrency_limit)
    : slots_(checked_limit(concurrency_limit, kMaxConcurrency)) {}

GenerationResult Provider::generate(const CompiledPrompt& prompt, std::string_view session_id) {
    slots_.acquire();
    struct Release {
        std::counting_semaphore<kMaxConcurrency>& s;
        ~Release() { s.release(); }
    } release{slots_};
    return do_generate(prompt, session_id);
}

ProviderHandle make_provider(const ProviderConfig& config) {
    config.validate();
    if (config.kind == ProviderKind::http) return std::make_shared<HttpProvider>(config);
    FixtureCorpus corpus;
    if (!config.fixtures_dir.empty()) corpus = FixtureCorpus::load(config.fixtures_dir);
    return std::make_shared<MockProvider>(std::move(corpus), config.seed, config.strict,
                                          config.concurrency_limit);
}

// ---------------------------------------------------------------------------

std::string FixtureEntry::canonical_file() const {
    return std::string(to_string(kind)) + "-" + digest + "-" + std::to_string(ordinal) + ".txt";
}

FixtureCorpus FixtureCorpus::load(const std::filesystem::path& dir) {
    const auto index_path = dir / kFixtureIndexFile;
    std::ifstream in(index_path);
    if (!in) throw Error(ErrorCode::IoError, "cannot read fixture index " + index_path.string());

    nlohmann::json index;
    try {
        index = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::IoError, "fixture index is not valid JSON: " + std::string(e.what()));
    }
    if (index.value("format_version", 0) != kFixtureFormatVersion) {
        throw Error(ErrorCode::IoError, "unsupported fixture index format_version");
    }

    FixtureCorpus corpus;
    for (const auto& e : index.at("entries")) {
        FixtureEntry entry;
        const auto kind = prompt_kind_from_string(e.at("kind").get<std::string>());
        if (!kind) throw Error(ErrorCode::IoError, "fixture index has an unknown prompt kind");
        entry.kind = *kind;
        entry.digest = e.at("digest").get<std::string>();
        entry.ordinal = e.at("ordinal").get<std::size_t>();
        if (e.contains("seed")) entry.seed = e.at("seed").get<std::uint64_t>();
        entry.file = e.value("file", entry.canonical_file());

        std::ifstream f(dir / entry.file, std::ios::binary);
        if (!f) throw Error(ErrorCode::IoError, "missing fixture file " + entry.file);
        std::ostringstream buf;
        buf << f.rdbuf();
        corpus.add(std::move(entry), buf.str());
    }
    return corpus;
}

void FixtureCorpus::add(FixtureEntry entry, std::string text) {
    if (entry.file.empty()) entry.file = entry.canonical_file();
    auto key = std::tuple{entry.kind, entry.digest, entry.ordinal, entry.seed};
    if (auto it = index_.find(key); it != index_.end()) {
        entries_[it->second] = std::move(entry);
        texts_[it->second] = std::move(text);
        return;
    }
    index_.emplace(std::move(key), entries_.size());
    entries_.push_back(std::move(entry));
    texts_.push_back(std::move(text));
}

const std::string* FixtureCorpus::find(PromptKind kind, std::string_view digest,
                                       std::size_t ordinal, std::uint64_t seed) const {
    const std::string d(digest);
    if (auto it = index_.find({kind, d, ordinal, seed}); it != index_.end()) {
        return &texts_[it->second];
    }
    if (auto it = index_.find({kind, d, ordinal, std::nullopt}); it != index_.end()) {
        return &texts_[it->second];
    }
    return nullptr;
}

void FixtureCorpus::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    nlohmann::json index;
    index["format_version"] = kFixtureFormatVersion;
    index["entries"] = nlohmann::json::array();
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        nlohmann::json j{{"kind", to_string(e.kind)},
                         {"digest", e.digest},
                         {"ordinal", e.ordinal},
                         {"file", e.file}};
        if (e.seed) j["seed"] = *e.seed;
        index["entries"].push_back(std::move(j));
        std::ofstream out(dir / e.file, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write fixture " + e.file);
        out << texts_[i];
    }
    std::ofstream out(dir / kFixtureIndexFile, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write fixture index");
    out << index.dump(2) << '\n';
}

// ---------------------------------------------------------------------------

MockProvider::MockProvider(FixtureCorpus corpus, std::uint64_t seed, bool strict,
                           std::size_t concurrency_limit)
    : Provider(concurrency_limit), corpus_(std::move(corpus)), seed_(seed), strict_(strict) {}

std::string MockProvider::response_for(const CompiledPrompt& prompt, std::size_t ordinal) const {
    const std::string digest = prompt.digest();
    if (const std::string* text = corpus_.find(prompt.kind, digest, ordinal, seed_)) return *text;
    if (strict_) {
        throw Error(ErrorCode::FixtureMissing, "no fixture " + std::string(to_string(prompt.kind)) +
                                                   "-" + digest + "-" + std::to_string(ordinal));
    }
    return placeholder(prompt, seed_, ordinal);
}

GenerationResult MockProvider::do_generate(const CompiledPrompt& prompt,
                                           std::string_view session_id) {
    std::size_t ordinal = 0;
    {
        std::lock_guard lock(mutex_);
        auto it = ordinals_.find(session_id);
        if (it == ordinals_.end()) {
            it = ordinals_.emplace(std::string(session_id), decltype(it->second){}).first;
        }
        ordinal = ++it->second[{prompt.kind, prompt.digest()}];
    }
    GenerationResult result;
    result.text = response_for(prompt, ordinal);
    result.ordinal = ordinal;
    return result;
}

std::string MockProvider::placeholder(const CompiledPrompt& prompt, std::uint64_t seed,
                                      std::size_t ordinal) {
    static constexpr std::array<std::string_view, 40> kPool{
        "Tone",       "Setting",    "Characters", "Conflict",   "Humor",      "Mystery",
        "Pacing",     "Dialogue",   "Perspective", "Emotion",   "Symbolism",  "Atmosphere",
        "Backstory",  "Motivation", "Stakes",     "Irony",      "Suspense",   "Voice",
        "Imagery",    "Rhythm",     "Foreshadowing", "Era",     "Magic",      "Rivalry",
        "Friendship", "Loss",       "Hope",       "Betrayal",   "Courage",    "Secrets",
        "Weather",    "Sound",      "Color",      "Ritual",     "Journey",    "Memory",
        "Fate",       "Power",      "Kindness",   "Chaos"};

    const std::string digest = prompt.digest();
    std::mt19937_64 rng(text::fnv1a64(digest + "#" + std::to_string(seed) + "#" +
                                      std::to_string(ordinal)));

    if (prompt.kind == PromptKind::synthesis) {
        const auto& a = kPool[rng() % kPool.size()];
        const auto& b = kPool[rng() % kPool.size()];
        return "[mock variation " + digest.substr(0, 8) + " #" + std::to_string(ordinal) +
               "] A retelling shaped by **" + std::string(a) + "** and **" + std::string(b) +
               "**.";
    }

    std::array<std::size_t, kPool.size()> order{};
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size() - 1; i > 0; --i) {
        std::swap(order[i], order[rng() % (i + 1)]);
    }
    std::string out;
    for (std::size_t i = 0; i < prompt.count; ++i) {
        std::string label(kPool[order[i % order.size()]]);
        if (i >= order.size()) label += " " + std::to_string(i / order.size() + 1);
        out += std::to_string(i + 1) + ". " + label + "\n";
    }
    return out;
}

}  // namespace reverger
