#pragma once

#include "reverger/cart.hpp"
#include "reverger/document.hpp"
#include "reverger/gateway.hpp"
#include "reverger/prompts.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace reverger {

// One synthesized example ("mutant"). Immutable once created.
struct Variation {
    std::string variation_id;  // "v<n>"
    std::string label;         // "M<n>", shown in the tracker
    std::vector<std::string> direction_paths;
    std::string text;  // plain text, emphasis delimiters removed
    std::vector<TextRange> emphasized;
    Span source_span;
    RevisionIndex source_revision = 0;
    ValidationReport validation;
    bool lenient_parse = false;
    std::int64_t created_at = 0;  // ms since epoch

    bool operator==(const Variation&) const = default;
};

class MutantTracker {
public:
    [[nodiscard]] const std::vector<Variation>& entries() const noexcept { return entries_; }
    [[nodiscard]] const std::optional<std::string>& active() const noexcept { return active_; }
    [[nodiscard]] const Variation* find(std::string_view variation_id) const noexcept;
    [[nodiscard]] const Variation& get(std::string_view variation_id) const;  // UnknownVariation

    // Identity the next synthesized variation will receive.
    [[nodiscard]] std::string next_id() const { return "v" + std::to_string(entries_.size() + 1); }
    [[nodiscard]] std::string next_label() const { return "M" + std::to_string(entries_.size() + 1); }

    // Appends and activates. The id and label must be next_id()/next_label().
    [[nodiscard]] MutantTracker with_variation(Variation v) const;
    [[nodiscard]] MutantTracker with_active(std::string_view variation_id) const;
    [[nodiscard]] MutantTracker without_active() const;

    static MutantTracker restore(std::vector<Variation> entries, std::optional<std::string> active);

    bool operator==(const MutantTracker&) const = default;

private:
    std::vector<Variation> entries_;
    std::optional<std::string> active_;
};

struct SynthesisDraft {
    std::vector<std::string> direction_paths;
    ParsedVariation parsed;  // trimmed
    ValidationReport validation;
    CompiledPrompt prompt;
    GenerationResult call;
};

// Compiles the synthesis prompt from the cart's selection and the highlighted
// passage, calls the provider and parses the answer. Throws NoSelection,
// NoActiveSpan, EmptyVariation or provider errors.
SynthesisDraft synthesize_draft(const StoryDocument& doc, const DirectionTree& tree,
                                Provider& provider, std::string_view session_id,
                                double max_length_ratio = kDefaultLengthRatio,
                                const TemplateSet& templates = TemplateSet::builtin());

// Turns a draft into the tracker's next variation.
Variation make_variation(const MutantTracker& tracker, const SynthesisDraft& draft,
                         const StoryDocument& doc, std::int64_t created_at);

// Replaces the highlight with the active variation and clears the active
// pointer. Throws NoActiveVariation or StaleVariation when the document has
// moved since synthesis.
std::pair<StoryDocument, MutantTracker> accept_active(const StoryDocument& doc,
                                                      const MutantTracker& tracker);

}  // namespace reverger
