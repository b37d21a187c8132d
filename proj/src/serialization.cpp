#include "reverger/serialization.hpp"

#include "reverger/error.hpp"
#include "reverger/text.hpp"

namespace reverger::codec {

namespace {

template <typename T>
T field(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::CorruptLog, std::string("field '") + key + "': " + e.what());
    }
}

NodeId node_id_from(const json& j) {
    if (!j.is_string()) throw Error(ErrorCode::CorruptLog, "node id must be a string");
    auto id = NodeId::parse(j.get<std::string>());
    if (!id) throw Error(ErrorCode::CorruptLog, "malformed node id");
    return *id;
}

json ids_to_json(const std::vector<NodeId>& ids) {
    json out = json::array();
    for (NodeId id : ids) out.push_back(id.str());
    return out;
}

std::vector<NodeId> ids_from_json(const json& j) {
    if (!j.is_array()) throw Error(ErrorCode::CorruptLog, "expected a list of node ids");
    std::vector<NodeId> out;
    for (const auto& e : j) out.push_back(node_id_from(e));
    return out;
}

json ranges_to_json(const std::vector<TextRange>& ranges) {
    json out = json::array();
    for (const auto& r : ranges) out.push_back({{"start", r.start}, {"end", r.end}});
    return out;
}

}  // namespace

json span_to_json(const Span& span) {
    return {{"revision", span.revision}, {"start", span.start}, {"end", span.end}};
}

Span span_from_json(const json& j) {
    return {field<RevisionIndex>(j, "revision"), field<std::size_t>(j, "start"),
            field<std::size_t>(j, "end")};
}

json document_to_json(const StoryDocument& doc) {
    json revisions = json::array();
    for (std::size_t i = 0; i < doc.revision_count(); ++i) {
        const Revision& r = doc.revision(i);
        json rj{{"text", r.text}, {"cause", to_string(r.cause)}};
        rj["parent"] = r.parent ? json(*r.parent) : json(nullptr);
        if (r.cause == RevisionCause::replacement) rj["variation_id"] = r.variation_id;
        revisions.push_back(std::move(rj));
    }
    json out{{"doc_id", doc.doc_id()}, {"current", doc.current()}, {"revisions", revisions}};
    out["highlight"] = doc.highlight() ? span_to_json(*doc.highlight()) : json(nullptr);
    return out;
}

StoryDocument document_from_json(const json& j) {
    std::vector<Revision> revisions;
    const json& rs = j.at("revisions");
    if (!rs.is_array()) throw Error(ErrorCode::CorruptLog, "revisions must be a list");
    for (const auto& rj : rs) {
        Revision r;
        r.text = field<std::string>(rj, "text");
        r.cause = revision_cause_from_string(field<std::string>(rj, "cause"));
        if (rj.contains("parent") && !rj.at("parent").is_null()) {
            r.parent = field<RevisionIndex>(rj, "parent");
        }
        if (rj.contains("variation_id")) r.variation_id = field<std::string>(rj, "variation_id");
        revisions.push_back(std::move(r));
    }
    std::optional<Span> highlight;
    if (j.contains("highlight") && !j.at("highlight").is_null()) {
        highlight = span_from_json(j.at("highlight"));
    }
    return StoryDocument::restore(field<std::string>(j, "doc_id"), std::move(revisions),
                                  field<RevisionIndex>(j, "current"), highlight);
}

json policy_to_json(const ExplorationPolicy& policy) {
    json out{{"mode", to_string(policy.mode)},
             {"root_count", policy.root_count},
             {"sub_count", policy.sub_count}};
    out["max_depth"] = policy.max_depth ? json(*policy.max_depth) : json(nullptr);
    return out;
}

ExplorationPolicy policy_from_json(const json& j) {
    const auto mode = exploration_mode_from_string(field<std::string>(j, "mode"));
    if (!mode) throw Error(ErrorCode::CorruptLog, "unknown exploration mode");
    ExplorationPolicy p;
    p.mode = *mode;
    p.root_count = field<std::size_t>(j, "root_count");
    p.sub_count = field<std::size_t>(j, "sub_count");
    if (j.contains("max_depth") && !j.at("max_depth").is_null()) {
        p.max_depth = field<std::size_t>(j, "max_depth");
    }
    try {
        p.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::CorruptLog, e.what());
    }
    return p;
}

json node_to_json(const DirectionNode& n) {
    json out{{"id", n.id.str()},
             {"label", n.label},
             {"origin", to_string(n.origin)},
             {"children", ids_to_json(n.children)},
             {"depth", n.depth},
             {"selected", n.selected}};
    out["parent"] = n.parent ? json(n.parent->str()) : json(nullptr);
    return out;
}

json tree_to_json(const DirectionTree& tree) {
    json nodes = json::array();
    for (const auto& [id, n] : tree.nodes()) nodes.push_back(node_to_json(n));
    json out{{"policy", policy_to_json(tree.policy())},
             {"roots", ids_to_json(tree.roots())},
             {"nodes", nodes},
             {"selection", ids_to_json(tree.selection())},
             {"probe_text", tree.probe_text()},
             {"next_id", tree.next_id()}};
    out["probe_span"] = tree.probe_span() ? span_to_json(*tree.probe_span()) : json(nullptr);
    return out;
}

DirectionTree tree_from_json(const json& j) {
    std::vector<DirectionNode> nodes;
    for (const auto& nj : j.at("nodes")) {
        DirectionNode n;
        n.id = node_id_from(nj.at("id"));
        n.label = field<std::string>(nj, "label");
        const auto origin = field<std::string>(nj, "origin");
        if (origin != "generated" && origin != "manual") {
            throw Error(ErrorCode::CorruptLog, "unknown node origin");
        }
        n.origin = origin == "manual" ? Origin::manual : Origin::generated;
        if (nj.contains("parent") && !nj.at("parent").is_null()) n.parent = node_id_from(nj.at("parent"));
        n.children = ids_from_json(nj.at("children"));
        n.depth = field<std::size_t>(nj, "depth");
        n.selected = field<bool>(nj, "selected");
        nodes.push_back(std::move(n));
    }
    std::optional<Span> probe_span;
    if (j.contains("probe_span") && !j.at("probe_span").is_null()) {
        probe_span = span_from_json(j.at("probe_span"));
    }
    return DirectionTree::restore(policy_from_json(j.at("policy")), ids_from_json(j.at("roots")),
                                  std::move(nodes), ids_from_json(j.at("selection")), probe_span,
                                  field<std::string>(j, "probe_text"),
                                  field<std::uint64_t>(j, "next_id"));
}

json variation_to_json(const Variation& v) {
    return {{"variation_id", v.variation_id},
            {"label", v.label},
            {"direction_paths", v.direction_paths},
            {"text", v.text},
            {"emphasized", ranges_to_json(v.emphasized)},
            {"source_span", span_to_json(v.source_span)},
            {"source_revision", v.source_revision},
            {"validation",
             {{"too_long", v.validation.too_long},
              {"no_emphasis", v.validation.no_emphasis},
              {"word_count", v.validation.word_count},
              {"source_word_count", v.validation.source_word_count}}},
            {"lenient_parse", v.lenient_parse},
            {"created_at", v.created_at}};
}

Variation variation_from_json(const json& j) {
    Variation v;
    v.variation_id = field<std::string>(j, "variation_id");
    v.label = field<std::string>(j, "label");
    v.direction_paths = field<std::vector<std::string>>(j, "direction_paths");
    v.text = field<std::string>(j, "text");
    if (!text::is_valid_utf8(v.text)) throw Error(ErrorCode::CorruptLog, "variation text is not UTF-8");
    const std::size_t len = text::scalar_length(v.text);
    std::size_t prev = 0;
    for (const auto& rj : j.at("emphasized")) {
        TextRange r{field<std::size_t>(rj, "start"), field<std::size_t>(rj, "end")};
        if (r.start < prev || r.start >= r.end || r.end > len) {
            throw Error(ErrorCode::CorruptLog, "emphasis ranges must be sorted and in bounds");
        }
        prev = r.end;
        v.emphasized.push_back(r);
    }
    v.source_span = span_from_json(j.at("source_span"));
    v.source_revision = field<RevisionIndex>(j, "source_revision");
    const json& vj = j.at("validation");
    v.validation.too_long = field<bool>(vj, "too_long");
    v.validation.no_emphasis = field<bool>(vj, "no_emphasis");
    v.validation.word_count = field<std::size_t>(vj, "word_count");
    v.validation.source_word_count = field<std::size_t>(vj, "source_word_count");
    v.lenient_parse = field<bool>(j, "lenient_parse");
    v.created_at = field<std::int64_t>(j, "created_at");
    return v;
}

json tracker_to_json(const MutantTracker& tracker) {
    json entries = json::array();
    for (const auto& v : tracker.entries()) entries.push_back(variation_to_json(v));
    json out{{"entries", entries}};
    out["active"] = tracker.active() ? json(*tracker.active()) : json(nullptr);
    return out;
}

MutantTracker tracker_from_json(const json& j) {
    std::vector<Variation> entries;
    for (const auto& vj : j.at("entries")) entries.push_back(variation_from_json(vj));
    std::optional<std::string> active;
    if (j.contains("active") && !j.at("active").is_null()) active = field<std::string>(j, "active");
    try {
        return MutantTracker::restore(std::move(entries), std::move(active));
    } catch (const Error& e) {
        throw Error(ErrorCode::CorruptLog, e.what());
    }
}

json event_to_json(const SessionEvent& event) {
    return {{"v", kEventFormatVersion},
            {"ordinal", event.ordinal},
            {"kind", to_string(event.kind)},
            {"at", event.at},
            {"payload", event.payload}};
}

SessionEvent event_from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::CorruptLog, "event must be an object");
    if (field<int>(j, "v") != kEventFormatVersion) {
        throw Error(ErrorCode::CorruptLog, "unsupported event format version");
    }
    SessionEvent e;
    e.ordinal = field<std::uint64_t>(j, "ordinal");
    const auto kind = event_kind_from_string(field<std::string>(j, "kind"));
    if (!kind) throw Error(ErrorCode::CorruptLog, "unknown event kind");
    e.kind = *kind;
    e.at = field<std::int64_t>(j, "at");
    e.payload = j.at("payload");
    if (!e.payload.is_object()) throw Error(ErrorCode::CorruptLog, "event payload must be an object");
    return e;
}

json session_snapshot(const Session& s) {
    return {{"format_version", kSnapshotFormatVersion},
            {"session_id", s.session_id},
            {"last_ordinal", s.last_ordinal()},
            {"policy", policy_to_json(s.policy)},
            {"document", document_to_json(s.document)},
            {"tree", tree_to_json(s.tree)},
            {"tracker", tracker_to_json(s.tracker)}};
}

Session session_from_snapshot(const json& j) {
    if (field<int>(j, "format_version") != kSnapshotFormatVersion) {
        throw Error(ErrorCode::CorruptLog, "unsupported snapshot format version");
    }
    return Session{field<std::string>(j, "session_id"), document_from_json(j.at("document")),
                   tree_from_json(j.at("tree")),        tracker_from_json(j.at("tracker")),
                   policy_from_json(j.at("policy")),    {}};
}

json document_view(const StoryDocument& doc) {
    json revisions = json::array();
    for (std::size_t i = 0; i < doc.revision_count(); ++i) {
        const Revision& r = doc.revision(i);
        json rj{{"index", i}, {"cause", to_string(r.cause)}};
        if (r.cause == RevisionCause::replacement) rj["variation_id"] = r.variation_id;
        revisions.push_back(std::move(rj));
    }
    json out{{"doc_id", doc.doc_id()},
             {"text", doc.text()},
             {"current", doc.current()},
             {"length", doc.length()},
             {"revisions", revisions}};
    if (doc.highlight()) {
        json h = span_to_json(*doc.highlight());
        h["text"] = doc.selected_part();
        out["highlight"] = std::move(h);
    } else {
        out["highlight"] = nullptr;
    }
    return out;
}

json tree_view(const DirectionTree& tree) {
    json nodes = json::array();
    for (const auto& [id, n] : tree.nodes()) {
        json nj = node_to_json(n);
        nj["path"] = tree.qualified_path(id);
        nodes.push_back(std::move(nj));
    }
    json out{{"policy", policy_to_json(tree.policy())},
             {"roots", ids_to_json(tree.roots())},
             {"nodes", nodes},
             {"selection", ids_to_json(tree.selection())},
             {"qualified_paths", tree.qualified_paths()}};
    out["probe_span"] = tree.probe_span() ? span_to_json(*tree.probe_span()) : json(nullptr);
    return out;
}

json variation_view(const Variation& v) {
    json out = variation_to_json(v);
    out["markup"] = render_markup(ParsedVariation{v.text, v.emphasized, v.lenient_parse});
    return out;
}

json tracker_view(const MutantTracker& tracker) {
    json entries = json::array();
    for (const auto& v : tracker.entries()) entries.push_back(variation_view(v));
    json out{{"entries", entries}};
    out["active"] = tracker.active() ? json(*tracker.active()) : json(nullptr);
    return out;
}

json session_view(const Session& s) {
    return {{"session_id", s.session_id},
            {"policy", policy_to_json(s.policy)},
            {"document", document_view(s.document)},
            {"tree", tree_view(s.tree)},
            {"tracker", tracker_view(s.tracker)},
            {"last_ordinal", s.last_ordinal()}};
}

}  // namespace reverger::codec
