#pragma once

#include "reverger/cart.hpp"
#include "reverger/document.hpp"
#include "reverger/mutants.hpp"
#include "reverger/session.hpp"

#include <json.hpp>

#include <vector>

// JSON forms used by the event log, snapshots and the HTTP API. The *_from_json
// functions throw CorruptLog on malformed input.
namespace reverger::codec {

using nlohmann::json;

inline constexpr int kSnapshotFormatVersion = 1;

json span_to_json(const Span& span);
Span span_from_json(const json& j);

json document_to_json(const StoryDocument& doc);
StoryDocument document_from_json(const json& j);

json policy_to_json(const ExplorationPolicy& policy);
ExplorationPolicy policy_from_json(const json& j);

json node_to_json(const DirectionNode& node);
json tree_to_json(const DirectionTree& tree);
DirectionTree tree_from_json(const json& j);

json variation_to_json(const Variation& v);
Variation variation_from_json(const json& j);

json tracker_to_json(const MutantTracker& tracker);
MutantTracker tracker_from_json(const json& j);

json event_to_json(const SessionEvent& event);
SessionEvent event_from_json(const json& j);

// Full state minus the event log, tagged with the last applied ordinal.
json session_snapshot(const Session& session);
// Restores state from a snapshot; event_log is left for the caller to fill.
Session session_from_snapshot(const json& j);

// Client-facing view: current text, highlight, forest with paths, tracker.
json session_view(const Session& session);
json document_view(const StoryDocument& doc);
json tree_view(const DirectionTree& tree);
json variation_view(const Variation& v);
json tracker_view(const MutantTracker& tracker);

}  // namespace reverger::codec
