#include "reverger/document.hpp"

#include "reverger/error.hpp"
#include "reverger/text.hpp"

#include <algorithm>

namespace reverger {

std::string_view to_string(RevisionCause cause) noexcept {
    switch (cause) {
        case RevisionCause::initial: return "initial";
        case RevisionCause::manual_edit: return "manual_edit";
        case RevisionCause::replacement: return "replacement";
    }
    return "initial";
}

RevisionCause revision_cause_from_string(std::string_view s) {
    if (s == "initial") return RevisionCause::initial;
    if (s == "manual_edit") return RevisionCause::manual_edit;
    if (s == "replacement") return RevisionCause::replacement;
    throw Error(ErrorCode::CorruptLog, "unknown revision cause '" + std::string(s) + "'");
}

StoryDocument StoryDocument::create(std::string_view text, std::string doc_id) {
    if (text::trim(text).empty()) {
        throw Error(ErrorCode::EmptyDocument, "story text is empty");
    }
    StoryDocument doc;
    doc.doc_id_ = std::move(doc_id);
    Revision rev;
    rev.text = std::string(text);
    rev.length = text::scalar_length(text);
    rev.cause = RevisionCause::initial;
    doc.revisions_.push_back(std::make_shared<const Revision>(std::move(rev)));
    return doc;
}

StoryDocument StoryDocument::restore(std::string doc_id, std::vector<Revision> revisions,
                                     RevisionIndex current, std::optional<Span> highlight) {
    if (revisions.empty() || current >= revisions.size()) {
        throw Error(ErrorCode::CorruptLog, "document has no revision at current index");
    }
    StoryDocument doc;
    doc.doc_id_ = std::move(doc_id);
    for (std::size_t i = 0; i < revisions.size(); ++i) {
        Revision& rev = revisions[i];
        if ((rev.cause == RevisionCause::initial) != (i == 0)) {
            throw Error(ErrorCode::CorruptLog, "initial revision must appear exactly once, first");
        }
        if (rev.parent && *rev.parent >= i) {
            throw Error(ErrorCode::CorruptLog, "revision parent must precede it");
        }
        rev.length = text::scalar_length(rev.text);
        doc.revisions_.push_back(std::make_shared<const Revision>(std::move(rev)));
    }
    doc.current_ = current;
    if (highlight) {
        if (highlight->revision != current || highlight->start >= highlight->end ||
            highlight->end > doc.length()) {
            throw Error(ErrorCode::CorruptLog, "persisted highlight is invalid");
        }
        doc.highlight_ = highlight;
    }
    return doc;
}

const Revision& StoryDocument::revision(RevisionIndex index) const {
    if (index >= revisions_.size()) {
        throw Error(ErrorCode::SpanNotOnCurrentRevision, "no such revision");
    }
    return *revisions_[index];
}

std::string StoryDocument::selected_part() const {
    if (!highlight_) throw Error(ErrorCode::NoActiveSpan, "no passage is highlighted");
    return text::slice(text(), highlight_->start, highlight_->end);
}

StoryDocument StoryDocument::with_highlight(const Span& span) const {
    if (span.revision != current_) {
        throw Error(ErrorCode::SpanNotOnCurrentRevision,
                    "span refers to revision " + std::to_string(span.revision) +
                        " but the current revision is " + std::to_string(current_));
    }
    if (span.start > span.end || span.end > length()) {
        throw Error(ErrorCode::SpanOutOfBounds, "span [" + std::to_string(span.start) + "," +
                                                    std::to_string(span.end) + ") is out of bounds");
    }
    if (span.start == span.end) throw Error(ErrorCode::EmptySpan, "highlight is empty");
    StoryDocument next = *this;
    next.highlight_ = span;
    return next;
}

StoryDocument StoryDocument::without_highlight() const {
    StoryDocument next = *this;
    next.highlight_.reset();
    return next;
}

StoryDocument StoryDocument::append(Revision rev) const {
    StoryDocument next = *this;
    rev.parent = current_;
    rev.length = text::scalar_length(rev.text);
    next.revisions_.push_back(std::make_shared<const Revision>(std::move(rev)));
    next.current_ = next.revisions_.size() - 1;
    return next;
}

EditResult StoryDocument::edit(std::size_t at, std::size_t delete_len,
                               std::string_view insert) const {
    const std::size_t len = length();
    if (at > len || delete_len > len - at) {
        throw Error(ErrorCode::EditOutOfBounds, "edit range exceeds the current text");
    }
    if (!text::is_valid_utf8(insert)) {
        throw Error(ErrorCode::InvalidEncoding, "inserted text is not valid UTF-8");
    }
    const std::string& old = text();
    const std::size_t b0 = text::byte_offset(old, at);
    const std::size_t b1 = b0 + text::byte_offset(std::string_view(old).substr(b0), delete_len);

    Revision rev;
    rev.text.reserve(old.size() - (b1 - b0) + insert.size());
    rev.text.append(old, 0, b0).append(insert).append(old, b1);
    rev.cause = RevisionCause::manual_edit;

    EditResult result{append(std::move(rev)), false};
    StoryDocument& next = result.document;
    if (highlight_) {
        const Span& h = *highlight_;
        const std::size_t edit_end = at + delete_len;
        if (edit_end <= h.start) {
            const std::size_t inserted = text::scalar_length(insert);
            next.highlight_ = Span{next.current_, h.start + inserted - delete_len,
                                   h.end + inserted - delete_len};
        } else if (at >= h.end) {
            next.highlight_ = Span{next.current_, h.start, h.end};
        } else {
            next.highlight_.reset();
            result.span_invalidated = true;
        }
    }
    return result;
}

StoryDocument StoryDocument::replace_highlight(std::string_view replacement_text,
                                               std::string_view variation_id) const {
    if (!highlight_) throw Error(ErrorCode::NoActiveSpan, "no passage is highlighted");
    if (replacement_text.empty()) {
        throw Error(ErrorCode::EmptyReplacement, "replacement text is empty");
    }
    if (!text::is_valid_utf8(replacement_text)) {
        throw Error(ErrorCode::InvalidEncoding, "replacement text is not valid UTF-8");
    }
    const Span h = *highlight_;
    const std::string& old = text();
    const std::size_t b0 = text::byte_offset(old, h.start);
    const std::size_t b1 = b0 + text::byte_offset(std::string_view(old).substr(b0), h.length());

    Revision rev;
    rev.text.append(old, 0, b0).append(replacement_text).append(old, b1);
    rev.cause = RevisionCause::replacement;
    rev.variation_id = std::string(variation_id);

    StoryDocument next = append(std::move(rev));
    next.highlight_ =
        Span{next.current_, h.start, h.start + text::scalar_length(replacement_text)};
    return next;
}

bool StoryDocument::operator==(const StoryDocument& other) const {
    return doc_id_ == other.doc_id_ && current_ == other.current_ &&
           highlight_ == other.highlight_ &&
           std::equal(revisions_.begin(), revisions_.end(), other.revisions_.begin(),
                      other.revisions_.end(),
                      [](const auto& a, const auto& b) { return a == b || *a == *b; });
}

}  // namespace reverger
