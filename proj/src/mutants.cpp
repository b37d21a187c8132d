#include "reverger/mutants.hpp"

#include "reverger/error.hpp"

#include <algorithm>

namespace reverger {

const Variation* MutantTracker::find(std::string_view variation_id) const noexcept {
    auto it = std::find_if(entries_.begin(), entries_.end(),
                           [&](const Variation& v) { return v.variation_id == variation_id; });
    return it == entries_.end() ? nullptr : &*it;
}

const Variation& MutantTracker::get(std::string_view variation_id) const {
    if (const auto* v = find(variation_id)) return *v;
    throw Error(ErrorCode::UnknownVariation, "no variation '" + std::string(variation_id) + "'");
}

MutantTracker MutantTracker::with_variation(Variation v) const {
    if (v.variation_id != next_id() || v.label != next_label()) {
        throw Error(ErrorCode::CorruptLog, "variation " + v.label + " is out of sequence");
    }
    if (v.direction_paths.empty()) {
        throw Error(ErrorCode::NoSelection, "a variation needs at least one direction");
    }
    MutantTracker next = *this;
    next.active_ = v.variation_id;
    next.entries_.push_back(std::move(v));
    return next;
}

MutantTracker MutantTracker::with_active(std::string_view variation_id) const {
    (void)get(variation_id);
    MutantTracker next = *this;
    next.active_ = std::string(variation_id);
    return next;
}

MutantTracker MutantTracker::without_active() const {
    MutantTracker next = *this;
    next.active_.reset();
    return next;
}

MutantTracker MutantTracker::restore(std::vector<Variation> entries,
                                     std::optional<std::string> active) {
    MutantTracker t;
    for (auto& v : entries) t = t.with_variation(std::move(v));
    t.active_.reset();
    if (active) t = t.with_active(*active);
    return t;
}

SynthesisDraft synthesize_draft(const StoryDocument& doc, const DirectionTree& tree,
                                Provider& provider, std::string_view session_id,
                                double max_length_ratio, const TemplateSet& templates) {
    SynthesisDraft draft;
    draft.direction_paths = tree.qualified_paths();
    if (draft.direction_paths.empty()) {
        throw Error(ErrorCode::NoSelection, "select at least one direction first");
    }
    const std::string selected = doc.selected_part();
    draft.prompt =
        templates.compile(PromptKind::synthesis, doc.text(), selected, draft.direction_paths, 0);
    draft.call = provider.generate(draft.prompt, session_id);
    draft.parsed = trimmed(parse_variation(draft.call.text));
    draft.validation = validate_variation(draft.parsed, selected, max_length_ratio);
    return draft;
}

Variation make_variation(const MutantTracker& tracker, const SynthesisDraft& draft,
                         const StoryDocument& doc, std::int64_t created_at) {
    if (!doc.highlight()) throw Error(ErrorCode::NoActiveSpan, "no passage is highlighted");
    Variation v;
    v.variation_id = tracker.next_id();
    v.label = tracker.next_label();
    v.direction_paths = draft.direction_paths;
    v.text = draft.parsed.text;
    v.emphasized = draft.parsed.emphasized;
    v.lenient_parse = draft.parsed.lenient;
    v.source_span = *doc.highlight();
    v.source_revision = doc.current();
    v.validation = draft.validation;
    v.created_at = created_at;
    return v;
}

std::pair<StoryDocument, MutantTracker> accept_active(const StoryDocument& doc,
                                                      const MutantTracker& tracker) {
    if (!tracker.active()) {
        throw Error(ErrorCode::NoActiveVariation, "no variation is active");
    }
    const Variation& v = tracker.get(*tracker.active());
    if (doc.current() != v.source_revision || doc.highlight() != v.source_span) {
        throw Error(ErrorCode::StaleVariation,
                    v.label + " was generated for an earlier state of the story");
    }
    return {doc.replace_highlight(v.text, v.variation_id), tracker.without_active()};
}

}  // namespace reverger
