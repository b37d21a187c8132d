#pragma once

#include "reverger/cart.hpp"
#include "reverger/document.hpp"
#include "reverger/gateway.hpp"
#include "reverger/mutants.hpp"
#include "reverger/prompts.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace reverger {

enum class EventKind {
    created,
    highlighted,
    probed,
    expanded,
    added_manual,
    selected,
    deselected,
    synthesized,
    activated,
    accepted,
    edited,
    reprobed,
};

std::string_view to_string(EventKind kind) noexcept;
std::optional<EventKind> event_kind_from_string(std::string_view s) noexcept;

inline constexpr int kEventFormatVersion = 1;

// One line of the append-only session log. The payload records outcomes
// (generated labels, variation text), so applying it never calls a provider.
struct SessionEvent {
    std::uint64_t ordinal = 0;  // dense from 1
    EventKind kind = EventKind::created;
    nlohmann::json payload = nlohmann::json::object();
    std::int64_t at = 0;  // ms since epoch

    bool operator==(const SessionEvent&) const = default;
};

struct Session {
    std::string session_id;
    StoryDocument document;
    DirectionTree tree;
    MutantTracker tracker;
    ExplorationPolicy policy;
    std::vector<SessionEvent> event_log;

    [[nodiscard]] std::uint64_t last_ordinal() const noexcept {
        return event_log.empty() ? 0 : event_log.back().ordinal;
    }

    bool operator==(const Session&) const = default;
};

// ---------------------------------------------------------------------------
// Commands accepted by a session, one per user action.

namespace cmd {
struct Highlight {
    std::size_t start = 0;
    std::size_t end = 0;
    std::optional<RevisionIndex> revision;  // defaults to the current one
};
struct Probe {
    bool reprobe = false;
};
struct Expand {
    NodeId node;
};
struct AddManual {
    std::optional<NodeId> parent;
    std::string label;
};
struct Select {
    NodeId node;
    bool on = true;
};
struct Synthesize {};
struct Activate {
    std::string variation_id;
};
struct Accept {};
struct Edit {
    std::size_t at = 0;
    std::size_t delete_len = 0;
    std::string insert;
};
}  // namespace cmd

using Command = std::variant<cmd::Highlight, cmd::Probe, cmd::Expand, cmd::AddManual, cmd::Select,
                             cmd::Synthesize, cmd::Activate, cmd::Accept, cmd::Edit>;

// Parses the kind-tagged JSON command body. Throws MalformedCommand.
Command parse_command(const nlohmann::json& body);
nlohmann::json command_to_json(const Command& command);

struct EngineOptions {
    double max_length_ratio = kDefaultLengthRatio;
    const TemplateSet* templates = &TemplateSet::builtin();
    std::function<std::int64_t()> clock;  // defaults to the system clock
};

std::int64_t now_ms();

Session create_session(std::string session_id, std::string_view story_text,
                       const ExplorationPolicy& policy, std::int64_t at);

struct CommandOutcome {
    Session session;
    SessionEvent event;
    bool span_invalidated = false;
};

// Runs a command: provider calls first (no session state is touched), then
// the resulting event is applied. On error nothing is produced.
CommandOutcome execute(const Session& session, const Command& command, Provider& provider,
                       const EngineOptions& options = {});

// Pure state transition; the same code path serves live commands and replay.
Session apply_event(const Session& session, const SessionEvent& event);

// Rebuilds a session from its log. Throws CorruptLog on ordinal gaps,
// unknown kinds, or any invariant violation.
Session replay(std::span<const SessionEvent> log);

}  // namespace reverger
