#include "reverger/session.hpp"

#include "reverger/error.hpp"
#include "reverger/serialization.hpp"

#include <array>
#include <chrono>
#include <utility>

namespace reverger {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 12> kEventNames{{
    {EventKind::created, "created"},
    {EventKind::highlighted, "highlighted"},
    {EventKind::probed, "probed"},
    {EventKind::expanded, "expanded"},
    {EventKind::added_manual, "added_manual"},
    {EventKind::selected, "selected"},
    {EventKind::deselected, "deselected"},
    {EventKind::synthesized, "synthesized"},
    {EventKind::activated, "activated"},
    {EventKind::accepted, "accepted"},
    {EventKind::edited, "edited"},
    {EventKind::reprobed, "reprobed"},
}};

[[noreturn]] void corrupt(const std::string& msg) { throw Error(ErrorCode::CorruptLog, msg); }

[[noreturn]] void malformed(const std::string& msg) {
    throw Error(ErrorCode::MalformedCommand, msg);
}

json ids_json(const std::vector<NodeId>& ids) {
    json out = json::array();
    for (NodeId id : ids) out.push_back(id.str());
    return out;
}

std::vector<NodeId> ids_from(const json& j) {
    std::vector<NodeId> out;
    for (const auto& e : j) {
        auto id = NodeId::parse(e.get<std::string>());
        if (!id) corrupt("malformed node id in payload");
        out.push_back(*id);
    }
    return out;
}

NodeId node_from(const json& j) {
    auto id = NodeId::parse(j.get<std::string>());
    if (!id) corrupt("malformed node id in payload");
    return *id;
}

json generation_json(const DirectionGeneration& gen) {
    json calls = json::array();
    for (const auto& c : gen.calls) {
        calls.push_back({{"ordinal", c.ordinal},
                         {"attempt", c.attempt},
                         {"latency_ms", c.latency.count()}});
    }
    return {{"kind", to_string(gen.prompt.kind)},
            {"digest", gen.prompt.digest()},
            {"calls", calls},
            {"suffixed", gen.suffixed}};
}

std::vector<NodeId> expected_ids(std::uint64_t first, std::size_t n) {
    std::vector<NodeId> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(NodeId{first + i});
    return out;
}

// Fields of a command body, with MalformedCommand on type errors.
template <typename T>
T arg(const json& body, const char* key) {
    if (!body.contains(key)) malformed(std::string("missing field '") + key + "'");
    try {
        return body.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        malformed(std::string("field '") + key + "' has the wrong type");
    }
}

NodeId node_arg(const json& body, const char* key) {
    auto id = NodeId::parse(arg<std::string>(body, key));
    if (!id) malformed(std::string("field '") + key + "' is not a node id");
    return *id;
}

std::size_t count_arg(const json& body, const char* key) {
    if (!body.contains(key) || !body.at(key).is_number_unsigned()) {
        malformed(std::string("field '") + key + "' must be a non-negative integer");
    }
    return body.at(key).get<std::size_t>();
}

}  // namespace

std::string_view to_string(EventKind kind) noexcept {
    for (const auto& [k, name] : kEventNames) {
        if (k == kind) return name;
    }
    return "unknown";
}

std::optional<EventKind> event_kind_from_string(std::string_view s) noexcept {
    for (const auto& [k, name] : kEventNames) {
        if (name == s) return k;
    }
    return std::nullopt;
}

Command parse_command(const json& body) {
    if (!body.is_object()) malformed("command must be a JSON object");
    const auto kind = arg<std::string>(body, "kind");
    if (kind == "highlight") {
        cmd::Highlight c{count_arg(body, "start"), count_arg(body, "end"), std::nullopt};
        if (body.contains("revision") && !body.at("revision").is_null()) {
            c.revision = count_arg(body, "revision");
        }
        return c;
    }
    if (kind == "probe") {
        bool reprobe = body.contains("reprobe") ? arg<bool>(body, "reprobe") : false;
        return cmd::Probe{reprobe};
    }
    if (kind == "reprobe") return cmd::Probe{true};
    if (kind == "expand") return cmd::Expand{node_arg(body, "node")};
    if (kind == "add_manual") {
        cmd::AddManual c;
        if (body.contains("parent") && !body.at("parent").is_null()) c.parent = node_arg(body, "parent");
        c.label = arg<std::string>(body, "label");
        return c;
    }
    if (kind == "select") return cmd::Select{node_arg(body, "node"), true};
    if (kind == "deselect") return cmd::Select{node_arg(body, "node"), false};
    if (kind == "synthesize") return cmd::Synthesize{};
    if (kind == "activate") return cmd::Activate{arg<std::string>(body, "variation_id")};
    if (kind == "accept") return cmd::Accept{};
    if (kind == "edit") {
        return cmd::Edit{count_arg(body, "at"), count_arg(body, "delete_len"),
                         arg<std::string>(body, "insert")};
    }
    malformed("unknown command kind '" + kind + "'");
}

json command_to_json(const Command& command) {
    struct Visitor {
        json operator()(const cmd::Highlight& c) const {
            json j{{"kind", "highlight"}, {"start", c.start}, {"end", c.end}};
            if (c.revision) j["revision"] = *c.revision;
            return j;
        }
        json operator()(const cmd::Probe& c) const { return {{"kind", "probe"}, {"reprobe", c.reprobe}}; }
        json operator()(const cmd::Expand& c) const { return {{"kind", "expand"}, {"node", c.node.str()}}; }
        json operator()(const cmd::AddManual& c) const {
            json j{{"kind", "add_manual"}, {"label", c.label}};
            j["parent"] = c.parent ? json(c.parent->str()) : json(nullptr);
            return j;
        }
        json operator()(const cmd::Select& c) const {
            return {{"kind", c.on ? "select" : "deselect"}, {"node", c.node.str()}};
        }
        json operator()(const cmd::Synthesize&) const { return {{"kind", "synthesize"}}; }
        json operator()(const cmd::Activate& c) const {
            return {{"kind", "activate"}, {"variation_id", c.variation_id}};
        }
        json operator()(const cmd::Accept&) const { return {{"kind", "accept"}}; }
        json operator()(const cmd::Edit& c) const {
            return {{"kind", "edit"}, {"at", c.at}, {"delete_len", c.delete_len}, {"insert", c.insert}};
        }
    };
    return std::visit(Visitor{}, command);
}

std::int64_t now_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

Session create_session(std::string session_id, std::string_view story_text,
                       const ExplorationPolicy& policy, std::int64_t at) {
    policy.validate();
    auto doc = StoryDocument::create(story_text);
    SessionEvent event;
    event.ordinal = 1;
    event.kind = EventKind::created;
    event.at = at;
    event.payload = {{"session_id", session_id},
                     {"doc_id", doc.doc_id()},
                     {"text", std::string(story_text)},
                     {"policy", codec::policy_to_json(policy)}};
    return Session{std::move(session_id), std::move(doc), DirectionTree(policy), MutantTracker{},
                   policy, {std::move(event)}};
}

CommandOutcome execute(const Session& session, const Command& command, Provider& provider,
                       const EngineOptions& options) {
    const TemplateSet& templates = options.templates ? *options.templates : TemplateSet::builtin();
    const std::int64_t at = options.clock ? options.clock() : now_ms();
    const StoryDocument& doc = session.document;
    const DirectionTree& tree = session.tree;

    SessionEvent event;
    event.ordinal = session.last_ordinal() + 1;
    event.at = at;

    struct Visitor {
        const Session& session;
        const StoryDocument& doc;
        const DirectionTree& tree;
        Provider& provider;
        const TemplateSet& templates;
        const EngineOptions& options;
        std::int64_t at;
        SessionEvent& event;

        void operator()(const cmd::Highlight& c) const {
            const Span span{c.revision.value_or(doc.current()), c.start, c.end};
            (void)doc.with_highlight(span);  // validates
            event.kind = EventKind::highlighted;
            event.payload = {{"span", codec::span_to_json(span)}};
        }
        void operator()(const cmd::Probe& c) const {
            if (!doc.highlight()) throw Error(ErrorCode::NoActiveSpan, "no passage is highlighted");
            const bool reprobe = c.reprobe && tree.probe_span().has_value();
            const std::string part = doc.selected_part();
            auto result = probe(tree, *doc.highlight(), part, doc.text(), provider,
                                session.session_id, c.reprobe, templates);
            event.kind = reprobe ? EventKind::reprobed : EventKind::probed;
            std::vector<std::string> labels;
            for (NodeId id : result.tree.roots()) labels.push_back(result.tree.node(id).label);
            event.payload = {{"span", codec::span_to_json(*doc.highlight())},
                             {"selected_part", part},
                             {"labels", labels},
                             {"node_ids", ids_json(result.tree.roots())},
                             {"discarded", ids_json(result.discarded)},
                             {"generation", generation_json(result.generation)}};
        }
        void operator()(const cmd::Expand& c) const {
            auto result = expand(tree, c.node, doc.text(), provider, session.session_id, templates);
            const DirectionNode& n = result.tree.node(c.node);
            std::vector<NodeId> fresh(n.children.end() - static_cast<std::ptrdiff_t>(result.generation.labels.size()),
                                      n.children.end());
            event.kind = EventKind::expanded;
            event.payload = {{"node", c.node.str()},
                             {"path", tree.qualified_path(c.node)},
                             {"depth", n.depth + 1},
                             {"labels", result.generation.labels},
                             {"node_ids", ids_json(fresh)},
                             {"generation", generation_json(result.generation)}};
        }
        void operator()(const cmd::AddManual& c) const {
            auto next = tree.with_manual(c.parent, c.label);
            const NodeId id{tree.next_id()};
            const DirectionNode& n = next.node(id);
            event.kind = EventKind::added_manual;
            event.payload = {{"label", n.label}, {"node_id", id.str()}, {"depth", n.depth}};
            event.payload["parent"] = c.parent ? json(c.parent->str()) : json(nullptr);
        }
        void operator()(const cmd::Select& c) const {
            (void)tree.with_selected(c.node, c.on);
            event.kind = c.on ? EventKind::selected : EventKind::deselected;
            event.payload = {{"node", c.node.str()}, {"path", tree.qualified_path(c.node)}};
        }
        void operator()(const cmd::Synthesize&) const {
            auto draft = synthesize_draft(doc, tree, provider, session.session_id,
                                          options.max_length_ratio, templates);
            auto v = make_variation(session.tracker, draft, doc, at);
            event.kind = EventKind::synthesized;
            event.payload = {{"variation", codec::variation_to_json(v)},
                             {"generation",
                              {{"kind", to_string(draft.prompt.kind)},
                               {"digest", draft.prompt.digest()},
                               {"ordinal", draft.call.ordinal},
                               {"attempt", draft.call.attempt},
                               {"latency_ms", draft.call.latency.count()}}}};
        }
        void operator()(const cmd::Activate& c) const {
            (void)session.tracker.get(c.variation_id);
            event.kind = EventKind::activated;
            event.payload = {{"variation_id", c.variation_id}};
        }
        void operator()(const cmd::Accept&) const {
            auto [next_doc, next_tracker] = accept_active(doc, session.tracker);
            event.kind = EventKind::accepted;
            event.payload = {{"variation_id", *session.tracker.active()},
                             {"replaced", codec::span_to_json(*doc.highlight())},
                             {"revision", next_doc.current()},
                             {"span", codec::span_to_json(*next_doc.highlight())}};
        }
        void operator()(const cmd::Edit& c) const {
            auto result = doc.edit(c.at, c.delete_len, c.insert);
            event.kind = EventKind::edited;
            event.payload = {{"at", c.at},
                             {"delete_len", c.delete_len},
                             {"insert", c.insert},
                             {"span_invalidated", result.span_invalidated}};
        }
    };

    std::visit(Visitor{session, doc, tree, provider, templates, options, at, event}, command);
    bool invalidated = event.kind == EventKind::edited && event.payload.at("span_invalidated").get<bool>();
    Session next = apply_event(session, event);
    return {std::move(next), std::move(event), invalidated};
}

namespace {

Session apply_unchecked(const Session& session, const SessionEvent& event) {
    if (event.ordinal != session.last_ordinal() + 1) {
        corrupt("event ordinal " + std::to_string(event.ordinal) + " does not follow " +
                std::to_string(session.last_ordinal()));
    }
    const json& p = event.payload;
    Session next = session;

    switch (event.kind) {
        case EventKind::created:
            corrupt("a session can only be created once");

        case EventKind::highlighted:
            next.document = session.document.with_highlight(codec::span_from_json(p.at("span")));
            break;

        case EventKind::probed:
        case EventKind::reprobed: {
            const Span span = codec::span_from_json(p.at("span"));
            if (session.document.highlight() != span) corrupt("probe span is not the active highlight");
            const auto part = p.at("selected_part").get<std::string>();
            if (part != session.document.selected_part()) corrupt("probe passage does not match");
            const auto labels = p.at("labels").get<std::vector<std::string>>();
            const bool reprobe = event.kind == EventKind::reprobed;
            if (reprobe != session.tree.probe_span().has_value()) corrupt("probe kind does not match the tree");
            std::vector<NodeId> discarded;
            next.tree = session.tree.with_roots(labels, span, part, reprobe, &discarded);
            if (ids_from(p.at("node_ids")) != next.tree.roots()) corrupt("probe node ids do not match");
            if (ids_from(p.at("discarded")) != discarded) corrupt("discarded node ids do not match");
            break;
        }

        case EventKind::expanded: {
            const NodeId node = node_from(p.at("node"));
            session.tree.check_expand(node);
            if (p.at("path").get<std::string>() != session.tree.qualified_path(node)) {
                corrupt("expanded path does not match");
            }
            const auto labels = p.at("labels").get<std::vector<std::string>>();
            next.tree = session.tree.with_children(node, labels);
            if (ids_from(p.at("node_ids")) != expected_ids(session.tree.next_id(), labels.size())) {
                corrupt("expanded node ids do not match");
            }
            if (p.at("depth").get<std::size_t>() != session.tree.node(node).depth + 1) {
                corrupt("expanded depth does not match");
            }
            break;
        }

        case EventKind::added_manual: {
            std::optional<NodeId> parent;
            if (!p.at("parent").is_null()) parent = node_from(p.at("parent"));
            next.tree = session.tree.with_manual(parent, p.at("label").get<std::string>());
            const NodeId id{session.tree.next_id()};
            if (node_from(p.at("node_id")) != id) corrupt("manual node id does not match");
            if (next.tree.node(id).label != p.at("label").get<std::string>() ||
                next.tree.node(id).depth != p.at("depth").get<std::size_t>()) {
                corrupt("manual node does not match");
            }
            break;
        }

        case EventKind::selected:
        case EventKind::deselected: {
            const NodeId node = node_from(p.at("node"));
            if (p.at("path").get<std::string>() != session.tree.qualified_path(node)) {
                corrupt("selected path does not match");
            }
            next.tree = session.tree.with_selected(node, event.kind == EventKind::selected);
            break;
        }

        case EventKind::synthesized: {
            Variation v = codec::variation_from_json(p.at("variation"));
            if (session.tree.qualified_paths() != v.direction_paths) {
                corrupt("variation directions do not match the selection");
            }
            if (session.document.highlight() != v.source_span ||
                session.document.current() != v.source_revision) {
                corrupt("variation source does not match the highlight");
            }
            next.tracker = session.tracker.with_variation(std::move(v));
            break;
        }

        case EventKind::activated:
            next.tracker = session.tracker.with_active(p.at("variation_id").get<std::string>());
            break;

        case EventKind::accepted: {
            if (session.tracker.active() != p.at("variation_id").get<std::string>()) {
                corrupt("accepted variation is not the active one");
            }
            auto [doc, tracker] = accept_active(session.document, session.tracker);
            if (doc.current() != p.at("revision").get<RevisionIndex>() ||
                doc.highlight() != codec::span_from_json(p.at("span"))) {
                corrupt("accepted revision does not match");
            }
            next.document = std::move(doc);
            next.tracker = std::move(tracker);
            break;
        }

        case EventKind::edited: {
            auto result = session.document.edit(p.at("at").get<std::size_t>(),
                                                p.at("delete_len").get<std::size_t>(),
                                                p.at("insert").get<std::string>());
            if (result.span_invalidated != p.at("span_invalidated").get<bool>()) {
                corrupt("edit span invalidation does not match");
            }
            next.document = std::move(result.document);
            break;
        }
    }

    next.event_log.push_back(event);
    return next;
}

}  // namespace

Session apply_event(const Session& session, const SessionEvent& event) {
    try {
        return apply_unchecked(session, event);
    } catch (const nlohmann::json::exception& e) {
        corrupt("event " + std::to_string(event.ordinal) + " payload: " + e.what());
    }
}

Session replay(std::span<const SessionEvent> log) {
    if (log.empty()) corrupt("event log is empty");
    const SessionEvent& first = log.front();
    if (first.kind != EventKind::created || first.ordinal != 1) {
        corrupt("event log must start with a created event at ordinal 1");
    }
    std::uint64_t ordinal = 1;
    try {
        const json& p = first.payload;
        Session s = create_session(p.at("session_id").get<std::string>(),
                                   p.at("text").get<std::string>(),
                                   codec::policy_from_json(p.at("policy")), first.at);
        if (s.document.doc_id() != p.at("doc_id").get<std::string>()) corrupt("doc id does not match");
        s.event_log.front() = first;
        for (const SessionEvent& e : log.subspan(1)) {
            ordinal = e.ordinal;
            s = apply_event(s, e);
        }
        return s;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::CorruptLog) throw;
        corrupt("event " + std::to_string(ordinal) + ": " + std::string(code_string(e.code())) + ": " +
                e.what());
    } catch (const nlohmann::json::exception& e) {
        corrupt("event " + std::to_string(ordinal) + ": " + e.what());
    }
}

}  // namespace reverger
