#pragma once

#include "reverger/gateway.hpp"
#include "reverger/prompts.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace reverger {

// A fixture source file names stories, passages within them and the canned
// answers for prompts built from those passages. Building it computes each
// prompt's digest so the mock provider can serve the answer.
struct FixtureSources {
    std::filesystem::path base_dir;
    std::map<std::string, std::string> stories;  // name -> full text
    struct Passage {
        std::string story;
        std::string text;
    };
    std::map<std::string, Passage> passages;
    struct Spec {
        PromptKind kind = PromptKind::root_directions;
        std::string passage;
        std::vector<std::string> directions;
        std::size_t count = 0;
        std::size_t ordinal = 1;
        std::string response;
    };
    std::vector<Spec> fixtures;

    // Throws InvalidConfig or IoError.
    static FixtureSources load(const std::filesystem::path& file);

    [[nodiscard]] const std::string& story_of(const std::string& passage) const;
    [[nodiscard]] CompiledPrompt compile(const Spec& spec, const TemplateSet& templates) const;
};

FixtureCorpus build_fixture_corpus(const FixtureSources& sources,
                                   const TemplateSet& templates = TemplateSet::builtin());

struct FixtureReport {
    std::size_t entries = 0;
    std::vector<std::string> problems;
    [[nodiscard]] bool ok() const noexcept { return problems.empty(); }
};

// Checks that the corpus loads, that every answer parses for its prompt kind,
// and, when sources are given, that the corpus matches a fresh build exactly.
FixtureReport verify_fixtures(const std::filesystem::path& corpus_dir, const FixtureSources* sources,
                              const TemplateSet& templates = TemplateSet::builtin());

}  // namespace reverger
