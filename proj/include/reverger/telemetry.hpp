#pragma once

#include "reverger/cart.hpp"
#include "reverger/session.hpp"

#include <json.hpp>

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace reverger {

// Aggregates over one session's log. Computed from events only, never from
// live state.
struct TelemetrySummary {
    ExplorationMode mode = ExplorationMode::full;
    // depth -> generated directions revealed at that depth (re-probes count again)
    std::map<std::size_t, std::size_t> directions_by_depth;
    // k -> synthesize calls made with k selected directions
    std::map<std::size_t, std::size_t> converged_cardinality;
    std::size_t manual_added = 0;
    std::vector<std::string> manual_labels;
    std::size_t mutants_generated = 0;
    std::size_t replacements = 0;

    [[nodiscard]] std::size_t root_directions() const;
    [[nodiscard]] std::size_t child_directions() const;

    bool operator==(const TelemetrySummary&) const = default;
};

// Throws CorruptLog when the log does not start with a created event.
TelemetrySummary summarize(std::span<const SessionEvent> log);

nlohmann::json telemetry_to_json(const TelemetrySummary& summary);

// One per-participant row:
//   <participant> | <mode> | L1 | L2 | L3 | L4+ | converged | added
// Zero cells print as "-".
std::string format_table_row(const std::string& participant, const TelemetrySummary& summary);
std::string format_table_header();

}  // namespace reverger
