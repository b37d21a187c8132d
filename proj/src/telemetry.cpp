#include "reverger/telemetry.hpp"

#include "reverger/error.hpp"

#include <sstream>

namespace reverger {

namespace {

const char* number_word(std::size_t k) {
    static const char* const words[] = {"zero", "one", "two",   "three", "four", "five",
                                        "six",  "seven", "eight", "nine",  "ten"};
    return k < std::size(words) ? words[k] : nullptr;
}

std::string cell(std::size_t n) { return n == 0 ? "-" : std::to_string(n); }

}  // namespace

std::size_t TelemetrySummary::root_directions() const {
    auto it = directions_by_depth.find(1);
    return it == directions_by_depth.end() ? 0 : it->second;
}

std::size_t TelemetrySummary::child_directions() const {
    std::size_t n = 0;
    for (const auto& [depth, count] : directions_by_depth) {
        if (depth > 1) n += count;
    }
    return n;
}

TelemetrySummary summarize(std::span<const SessionEvent> log) {
    if (log.empty() || log.front().kind != EventKind::created) {
        throw Error(ErrorCode::CorruptLog, "telemetry needs a log starting with a created event");
    }
    TelemetrySummary s;
    try {
        const auto mode = exploration_mode_from_string(
            log.front().payload.at("policy").at("mode").get<std::string>());
        if (!mode) throw Error(ErrorCode::CorruptLog, "unknown exploration mode");
        s.mode = *mode;

        for (const SessionEvent& e : log.subspan(1)) {
            const auto& p = e.payload;
            switch (e.kind) {
                case EventKind::probed:
                case EventKind::reprobed:
                    s.directions_by_depth[1] += p.at("labels").size();
                    break;
                case EventKind::expanded:
                    s.directions_by_depth[p.at("depth").get<std::size_t>()] += p.at("labels").size();
                    break;
                case EventKind::added_manual:
                    ++s.manual_added;
                    s.manual_labels.push_back(p.at("label").get<std::string>());
                    break;
                case EventKind::synthesized:
                    ++s.mutants_generated;
                    ++s.converged_cardinality[p.at("variation").at("direction_paths").size()];
                    break;
                case EventKind::accepted:
                    ++s.replacements;
                    break;
                default:
                    break;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::CorruptLog, std::string("telemetry: ") + e.what());
    }
    return s;
}

nlohmann::json telemetry_to_json(const TelemetrySummary& s) {
    nlohmann::json by_depth = nlohmann::json::object();
    for (const auto& [d, n] : s.directions_by_depth) by_depth[std::to_string(d)] = n;
    nlohmann::json converged = nlohmann::json::object();
    for (const auto& [k, n] : s.converged_cardinality) converged[std::to_string(k)] = n;
    return {{"mode", to_string(s.mode)},
            {"directions_by_depth", by_depth},
            {"root_directions", s.root_directions()},
            {"child_directions", s.child_directions()},
            {"converged_cardinality", converged},
            {"manual_added", {{"count", s.manual_added}, {"labels", s.manual_labels}}},
            {"mutants_generated", s.mutants_generated},
            {"replacements", s.replacements}};
}

std::string format_table_header() {
    return "participant | mode | L1 | L2 | L3 | L4+ | converged | added";
}

std::string format_table_row(const std::string& participant, const TelemetrySummary& s) {
    auto at_depth = [&](std::size_t d) {
        auto it = s.directions_by_depth.find(d);
        return it == s.directions_by_depth.end() ? std::size_t{0} : it->second;
    };
    std::size_t deeper = 0;
    for (const auto& [d, n] : s.directions_by_depth) {
        if (d >= 4) deeper += n;
    }

    std::string converged;
    for (const auto& [k, n] : s.converged_cardinality) {
        if (!converged.empty()) converged += ", ";
        const char* word = number_word(k);
        converged += (word ? std::string(word) : std::to_string(k)) + ":" + std::to_string(n);
    }
    std::string added;
    for (const auto& label : s.manual_labels) {
        if (!added.empty()) added += ", ";
        added += label;
    }

    std::ostringstream out;
    out << participant << " | " << to_string(s.mode) << " | " << cell(at_depth(1)) << " | "
        << cell(at_depth(2)) << " | " << cell(at_depth(3)) << " | " << cell(deeper) << " | "
        << (converged.empty() ? "-" : converged) << " | " << (added.empty() ? "-" : added);
    return out.str();
}

}  // namespace reverger
