#pragma once

#include "reverger/error.hpp"
#include "reverger/event_log.hpp"
#include "reverger/gateway.hpp"
#include "reverger/session.hpp"
#include "reverger/text.hpp"

#include <filesystem>
#include <memory>
#include <string>

namespace testing {

inline std::filesystem::path source_dir() { return REVERGER_SOURCE_DIR; }

inline std::string story(const std::string& name) {
    return reverger::read_file(source_dir() / "fixtures" / "stories" / (name + ".txt"));
}

inline const reverger::FixtureCorpus& corpus() {
    static const auto c = reverger::FixtureCorpus::load(source_dir() / "fixtures" / "corpus");
    return c;
}

inline std::shared_ptr<reverger::MockProvider> strict_mock(std::uint64_t seed = 0) {
    return std::make_shared<reverger::MockProvider>(corpus(), seed, true);
}

inline std::shared_ptr<reverger::MockProvider> lenient_mock(std::uint64_t seed = 0) {
    return std::make_shared<reverger::MockProvider>(corpus(), seed, false);
}

// Scalar offsets of `needle` in `haystack`.
inline std::pair<std::size_t, std::size_t> find_span(const std::string& haystack, const std::string& needle) {
    const auto byte = haystack.find(needle);
    if (byte == std::string::npos) throw std::runtime_error("passage not found: " + needle);
    const auto start = reverger::text::scalar_length(std::string_view(haystack).substr(0, byte));
    return {start, start + reverger::text::scalar_length(needle)};
}

// Deterministic engine clock.
inline reverger::EngineOptions fixed_clock_options() {
    reverger::EngineOptions o;
    auto t = std::make_shared<std::int64_t>(1'700'000'000'000);
    o.clock = [t] { return (*t)++; };
    return o;
}

template <typename F>
reverger::ErrorCode error_code_of(F&& f) {
    try {
        f();
    } catch (const reverger::Error& e) {
        return e.code();
    }
    throw std::runtime_error("expected an Error");
}

inline constexpr const char* kGarden =
    "Alone in the garden, Cinderella weeps until her fairy godmother appears and turns a pumpkin into a coach, "
    "mice into horses, and her rags into a shining gown with glass slippers.";

}  // namespace testing

namespace testing {

// Serves canned answers in order, then fails.
class ScriptedProvider final : public reverger::Provider {
public:
    explicit ScriptedProvider(std::vector<std::string> answers)
        : Provider(1), answers_(std::move(answers)) {}

    reverger::HealthStatus health_check() override { return reverger::HealthStatus::healthy; }
    [[nodiscard]] reverger::ProviderKind kind() const noexcept override { return reverger::ProviderKind::mock; }

    std::size_t calls = 0;
    std::vector<reverger::CompiledPrompt> prompts;

protected:
    reverger::GenerationResult do_generate(const reverger::CompiledPrompt& prompt, std::string_view) override {
        prompts.push_back(prompt);
        if (calls >= answers_.size()) {
            throw reverger::Error(reverger::ErrorCode::ProviderUnavailable, "script exhausted");
        }
        reverger::GenerationResult r;
        r.text = answers_[calls++];
        r.ordinal = calls;
        return r;
    }

private:
    std::vector<std::string> answers_;
};

inline std::string numbered(const std::vector<std::string>& labels) {
    std::string out;
    for (std::size_t i = 0; i < labels.size(); ++i) out += std::to_string(i + 1) + ". " + labels[i] + "\n";
    return out;
}

}  // namespace testing

#include <cstdlib>

namespace testing {

class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "reverger-test-XXXXXX").string();
        if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace testing
