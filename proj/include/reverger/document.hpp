#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace reverger {

using RevisionIndex = std::size_t;

enum class RevisionCause { initial, manual_edit, replacement };

std::string_view to_string(RevisionCause cause) noexcept;
RevisionCause revision_cause_from_string(std::string_view s);

struct Revision {
    std::string text;
    std::optional<RevisionIndex> parent;
    RevisionCause cause = RevisionCause::initial;
    std::string variation_id;  // set only for cause == replacement
    std::size_t length = 0;    // scalar values in text

    bool operator==(const Revision&) const = default;
};

// Half-open range [start, end) in Unicode scalar values, bound to a revision.
struct Span {
    RevisionIndex revision = 0;
    std::size_t start = 0;
    std::size_t end = 0;

    [[nodiscard]] std::size_t length() const noexcept { return end - start; }
    bool operator==(const Span&) const = default;
};

class StoryDocument;

struct EditResult;

// The story board: an append-only list of revisions plus at most one active
// highlight. Values are immutable; every operation returns a new snapshot and
// revision texts are shared between snapshots.
class StoryDocument {
public:
    // Throws EmptyDocument when text is empty or whitespace only.
    static StoryDocument create(std::string_view text, std::string doc_id = "doc");

    // Rebuilds a document from persisted parts, checking every invariant.
    static StoryDocument restore(std::string doc_id, std::vector<Revision> revisions,
                                 RevisionIndex current, std::optional<Span> highlight);

    [[nodiscard]] const std::string& doc_id() const noexcept { return doc_id_; }
    [[nodiscard]] std::size_t revision_count() const noexcept { return revisions_.size(); }
    [[nodiscard]] const Revision& revision(RevisionIndex index) const;
    [[nodiscard]] RevisionIndex current() const noexcept { return current_; }
    [[nodiscard]] const std::string& text() const noexcept { return revisions_[current_]->text; }
    [[nodiscard]] std::size_t length() const noexcept { return revisions_[current_]->length; }
    [[nodiscard]] const std::optional<Span>& highlight() const noexcept { return highlight_; }

    // Text under the active highlight. Throws NoActiveSpan.
    [[nodiscard]] std::string selected_part() const;

    [[nodiscard]] StoryDocument with_highlight(const Span& span) const;
    [[nodiscard]] StoryDocument without_highlight() const;

    // Replaces delete_len scalars at `at` by `insert`, producing a manual_edit
    // revision. The highlight shifts when the edit lies wholly before it, is
    // kept when the edit lies wholly after it, and is cleared otherwise.
    [[nodiscard]] EditResult edit(std::size_t at, std::size_t delete_len,
                                  std::string_view insert) const;

    // Splices replacement_text over the highlight; the new highlight covers
    // the inserted text in the new revision.
    [[nodiscard]] StoryDocument replace_highlight(std::string_view replacement_text,
                                                  std::string_view variation_id) const;

    bool operator==(const StoryDocument& other) const;

private:
    StoryDocument() = default;

    [[nodiscard]] StoryDocument append(Revision rev) const;

    std::string doc_id_;
    std::vector<std::shared_ptr<const Revision>> revisions_;
    RevisionIndex current_ = 0;
    std::optional<Span> highlight_;
};

struct EditResult {
    StoryDocument document;
    bool span_invalidated = false;
};

}  // namespace reverger
