#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace reverger {

enum class PromptKind { root_directions, sub_directions, synthesis };

std::string_view to_string(PromptKind kind) noexcept;
std::optional<PromptKind> prompt_kind_from_string(std::string_view s) noexcept;

inline constexpr std::string_view kEntireStory = "entire story";
inline constexpr std::string_view kSelectedPart = "selected part";
inline constexpr std::string_view kDirection = "direction";
inline constexpr std::string_view kCount = "count";

struct PromptTemplate {
    PromptKind kind = PromptKind::root_directions;
    std::string body;
    std::vector<std::string> requirement_clauses;

    // Parses a template resource file: leading '#' header lines, the body,
    // then optional "--- requirements" followed by one clause per line.
    // Throws InvalidTemplate for unknown placeholders or missing context.
    static PromptTemplate parse(PromptKind kind, std::string_view file_text);
};

struct CompiledPrompt {
    PromptKind kind = PromptKind::root_directions;
    std::string text;
    // placeholder name -> digest of the value substituted for it
    std::map<std::string, std::string> variable_digest;
    std::size_t count = 0;

    // Combined digest of all variables; keys the mock fixture corpus.
    [[nodiscard]] std::string digest() const;
};

class TemplateSet {
public:
    // Templates compiled into the binary from resources/templates.
    static const TemplateSet& builtin();
    // Loads <dir>/<kind>.txt for every kind.
    static TemplateSet load(const std::filesystem::path& dir);

    [[nodiscard]] const PromptTemplate& get(PromptKind kind) const;

    // root_directions takes no directions, sub_directions exactly one path,
    // synthesis at least one. count must be positive except for synthesis.
    [[nodiscard]] CompiledPrompt compile(PromptKind kind, std::string_view entire_story,
                                         std::string_view selected_part,
                                         const std::vector<std::string>& directions,
                                         std::size_t count) const;

private:
    std::map<PromptKind, PromptTemplate> templates_;
};

inline CompiledPrompt compile(PromptKind kind, std::string_view entire_story,
                              std::string_view selected_part,
                              const std::vector<std::string>& directions, std::size_t count) {
    return TemplateSet::builtin().compile(kind, entire_story, selected_part, directions, count);
}

struct ParsedDirections {
    std::vector<std::string> labels;
};

// Extracts the first maximal run of lines numbered "1. ", "2. ", ... and
// requires exactly expected_count of them. Throws MalformedDirections.
ParsedDirections parse_directions(std::string_view raw, std::size_t expected_count);

// [start, end) in scalar values of the variation text.
struct TextRange {
    std::size_t start = 0;
    std::size_t end = 0;
    bool operator==(const TextRange&) const = default;
};

struct ParsedVariation {
    std::string text;
    std::vector<TextRange> emphasized;
    bool lenient = false;  // an unpaired "**" was dropped

    bool operator==(const ParsedVariation&) const = default;
};

inline constexpr std::string_view kEmphasisDelimiter = "**";

// Strips "**" emphasis pairs, recording them as ranges. Throws
// EmptyVariation when nothing visible remains, InvalidEncoding on bad UTF-8.
ParsedVariation parse_variation(std::string_view raw);

// Reinserts the delimiters at the emphasized ranges.
std::string render_markup(const ParsedVariation& v);

// Drops leading/trailing whitespace, clipping emphasis ranges to match.
ParsedVariation trimmed(const ParsedVariation& v);

struct ValidationReport {
    bool too_long = false;
    bool no_emphasis = false;
    std::size_t word_count = 0;
    std::size_t source_word_count = 0;

    [[nodiscard]] bool clean() const noexcept { return !too_long && !no_emphasis; }
    bool operator==(const ValidationReport&) const = default;
};

inline constexpr double kDefaultLengthRatio = 2.0;

ValidationReport validate_variation(const ParsedVariation& v, std::string_view selected_part,
                                    double max_length_ratio = kDefaultLengthRatio);

}  // namespace reverger
