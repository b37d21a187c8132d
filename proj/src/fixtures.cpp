#include "reverger/fixtures.hpp"

#include "reverger/error.hpp"
#include "reverger/event_log.hpp"

#include <json.hpp>

namespace reverger {

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::InvalidConfig, "fixture sources: " + msg); }

std::string response_text(const nlohmann::json& r) {
    if (r.is_string()) return r.get<std::string>();
    if (r.is_array()) {
        std::string out;
        for (const auto& line : r) out += line.get<std::string>() + "\n";
        return out;
    }
    bad("response must be a string or a list of lines");
}

}  // namespace

FixtureSources FixtureSources::load(const std::filesystem::path& file) {
    FixtureSources out;
    out.base_dir = file.parent_path();
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(file));
    } catch (const nlohmann::json::exception& e) {
        bad(std::string("not valid JSON: ") + e.what());
    }
    try {
        if (doc.at("format_version").get<int>() != 1) bad("unsupported format_version");
        for (const auto& [name, path] : doc.at("stories").items()) {
            out.stories[name] = read_file(out.base_dir / path.get<std::string>());
        }
        for (const auto& [name, p] : doc.at("passages").items()) {
            Passage passage{p.at("story").get<std::string>(), p.at("text").get<std::string>()};
            auto it = out.stories.find(passage.story);
            if (it == out.stories.end()) bad("passage '" + name + "' names an unknown story");
            if (it->second.find(passage.text) == std::string::npos) {
                bad("passage '" + name + "' does not occur in its story");
            }
            out.passages[name] = std::move(passage);
        }
        for (const auto& f : doc.at("fixtures")) {
            Spec spec;
            const auto kind = prompt_kind_from_string(f.at("kind").get<std::string>());
            if (!kind) bad("unknown prompt kind");
            spec.kind = *kind;
            spec.passage = f.at("passage").get<std::string>();
            if (!out.passages.count(spec.passage)) bad("fixture names unknown passage '" + spec.passage + "'");
            if (f.contains("direction")) spec.directions.push_back(f.at("direction").get<std::string>());
            if (f.contains("directions")) {
                for (const auto& d : f.at("directions")) spec.directions.push_back(d.get<std::string>());
            }
            const std::size_t default_count = spec.kind == PromptKind::root_directions ? 8
                                              : spec.kind == PromptKind::sub_directions ? 4
                                                                                         : 0;
            spec.count = f.value("count", default_count);
            spec.ordinal = f.value("ordinal", std::size_t{1});
            if (spec.ordinal == 0) bad("ordinals start at 1");
            spec.response = response_text(f.at("response"));
            out.fixtures.push_back(std::move(spec));
        }
    } catch (const nlohmann::json::exception& e) {
        bad(e.what());
    }
    return out;
}

const std::string& FixtureSources::story_of(const std::string& passage) const {
    return stories.at(passages.at(passage).story);
}

CompiledPrompt FixtureSources::compile(const Spec& spec, const TemplateSet& templates) const {
    return templates.compile(spec.kind, story_of(spec.passage), passages.at(spec.passage).text,
                             spec.directions, spec.count);
}

FixtureCorpus build_fixture_corpus(const FixtureSources& sources, const TemplateSet& templates) {
    FixtureCorpus corpus;
    for (const auto& spec : sources.fixtures) {
        const CompiledPrompt prompt = sources.compile(spec, templates);
        FixtureEntry entry;
        entry.kind = spec.kind;
        entry.digest = prompt.digest();
        entry.ordinal = spec.ordinal;
        corpus.add(std::move(entry), spec.response);
    }
    return corpus;
}

FixtureReport verify_fixtures(const std::filesystem::path& corpus_dir, const FixtureSources* sources,
                              const TemplateSet& templates) {
    FixtureReport report;
    FixtureCorpus corpus;
    try {
        corpus = FixtureCorpus::load(corpus_dir);
    } catch (const Error& e) {
        report.problems.push_back(e.what());
        return report;
    }
    report.entries = corpus.entries().size();

    for (std::size_t i = 0; i < corpus.entries().size(); ++i) {
        const FixtureEntry& e = corpus.entries()[i];
        const std::string& text = corpus.text_of(i);
        const std::string key = e.canonical_file();
        try {
            // Direction answers are checked against their count below, when
            // the sources say what the count is.
            if (e.kind == PromptKind::synthesis) (void)parse_variation(text);
        } catch (const Error& err) {
            report.problems.push_back(key + ": " + err.what());
        }
    }

    if (sources != nullptr) {
        std::map<std::tuple<PromptKind, std::string, std::size_t>, std::size_t> expected;
        for (const auto& spec : sources->fixtures) {
            CompiledPrompt prompt;
            try {
                prompt = sources->compile(spec, templates);
            } catch (const Error& err) {
                report.problems.push_back(std::string("source fixture for passage '") + spec.passage + "': " + err.what());
                continue;
            }
            if (spec.kind != PromptKind::synthesis) {
                try {
                    (void)parse_directions(spec.response, spec.count);
                } catch (const Error& err) {
                    report.problems.push_back("answer for '" + spec.passage + "' " +
                                              std::string(to_string(spec.kind)) + ": " + err.what());
                }
            }
            const auto* text = corpus.find(spec.kind, prompt.digest(), spec.ordinal, 0);
            const std::string key = std::string(to_string(spec.kind)) + "-" + prompt.digest() + "-" +
                                    std::to_string(spec.ordinal);
            expected[{spec.kind, prompt.digest(), spec.ordinal}]++;
            if (text == nullptr) {
                report.problems.push_back(key + ": missing from the corpus (rebuild it)");
            } else if (*text != spec.response) {
                report.problems.push_back(key + ": corpus text differs from the source");
            }
        }
        for (const auto& e : corpus.entries()) {
            if (!expected.count({e.kind, e.digest, e.ordinal})) {
                report.problems.push_back(e.canonical_file() + ": not produced by any source fixture");
            }
        }
    }
    return report;
}

}  // namespace reverger
