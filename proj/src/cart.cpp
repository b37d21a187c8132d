#include "reverger/cart.hpp"

#include "reverger/error.hpp"
#include "reverger/label.hpp"
#include "reverger/text.hpp"

#include <algorithm>
#include <charconv>
#include <set>

namespace reverger {

std::optional<NodeId> NodeId::parse(std::string_view s) {
    if (s.size() < 2 || s.front() != 'n') return std::nullopt;
    std::uint64_t v = 0;
    const auto* first = s.data() + 1;
    const auto* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || v == 0) return std::nullopt;
    return NodeId{v};
}

std::string_view to_string(Origin origin) noexcept {
    return origin == Origin::manual ? "manual" : "generated";
}

std::string_view to_string(ExplorationMode mode) noexcept {
    return mode == ExplorationMode::baseline ? "baseline" : "full";
}

std::optional<ExplorationMode> exploration_mode_from_string(std::string_view s) noexcept {
    if (s == "full") return ExplorationMode::full;
    if (s == "baseline") return ExplorationMode::baseline;
    return std::nullopt;
}

void ExplorationPolicy::validate() const {
    if (root_count == 0 || sub_count == 0) {
        throw Error(ErrorCode::InvalidConfig, "root_count and sub_count must be positive");
    }
    if (max_depth && *max_depth == 0) {
        throw Error(ErrorCode::InvalidConfig, "max_depth must be at least 1");
    }
}

DirectionTree::DirectionTree(ExplorationPolicy policy) : policy_(policy) {
    policy_.validate();
}

DirectionTree DirectionTree::restore(ExplorationPolicy policy, std::vector<NodeId> roots,
                                     std::vector<DirectionNode> nodes,
                                     std::vector<NodeId> selection, std::optional<Span> probe_span,
                                     std::string probe_text, std::uint64_t next_id) {
    auto corrupt = [](const std::string& what) {
        return Error(ErrorCode::CorruptLog, "persisted direction tree: " + what);
    };
    DirectionTree t(policy);
    for (auto& n : nodes) {
        if (n.id.value == 0 || n.id.value >= next_id) throw corrupt("node id out of range");
        if (!t.nodes_.emplace(n.id, std::move(n)).second) throw corrupt("duplicate node id");
    }
    // Walk from the roots; every node must be reached exactly once with the
    // depth its position implies.
    std::set<NodeId> reached;
    std::vector<std::pair<NodeId, std::size_t>> stack;
    for (NodeId r : roots) stack.emplace_back(r, 1);
    while (!stack.empty()) {
        auto [id, depth] = stack.back();
        stack.pop_back();
        const DirectionNode* n = t.find(id);
        if (n == nullptr) throw corrupt("dangling node reference");
        if (!reached.insert(id).second) throw corrupt("node reachable twice");
        if (n->depth != depth) throw corrupt("depth bookkeeping mismatch");
        if (depth == 1 ? n->parent.has_value() : !n->parent.has_value()) {
            throw corrupt("parent link mismatch");
        }
        if (policy.max_depth && depth > *policy.max_depth) throw corrupt("node exceeds depth cap");
        if (label_problem(n->label)) throw corrupt("invalid label");
        for (NodeId c : n->children) {
            const DirectionNode* child = t.find(c);
            if (child == nullptr || child->parent != id) throw corrupt("child link mismatch");
            stack.emplace_back(c, depth + 1);
        }
    }
    if (reached.size() != t.nodes_.size()) throw corrupt("unreachable node");
    std::size_t selected = 0;
    for (const auto& [id, n] : t.nodes_) selected += n.selected ? 1 : 0;
    if (selected != selection.size()) throw corrupt("selection list mismatch");
    for (NodeId id : selection) {
        const DirectionNode* n = t.find(id);
        if (n == nullptr || !n->selected) throw corrupt("selection list mismatch");
    }
    if (policy.selection_cap() != 0 && selection.size() > policy.selection_cap()) {
        throw corrupt("selection exceeds cap");
    }
    t.roots_ = std::move(roots);
    t.selection_ = std::move(selection);
    t.probe_span_ = probe_span;
    t.probe_text_ = std::move(probe_text);
    t.next_id_ = next_id;
    return t;
}

const DirectionNode& DirectionTree::node(NodeId id) const {
    if (const auto* n = find(id)) return *n;
    throw Error(ErrorCode::UnknownNode, "no direction " + id.str());
}

const DirectionNode* DirectionTree::find(NodeId id) const noexcept {
    auto it = nodes_.find(id);
    return it == nodes_.end() ? nullptr : &it->second;
}

std::vector<std::string> DirectionTree::sibling_labels(std::optional<NodeId> parent) const {
    const auto& ids = parent ? node(*parent).children : roots_;
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (NodeId id : ids) out.push_back(nodes_.at(id).label);
    return out;
}

std::string DirectionTree::qualified_path(NodeId id) const {
    std::vector<const std::string*> parts;
    for (const DirectionNode* n = &node(id); n != nullptr;
         n = n->parent ? &nodes_.at(*n->parent) : nullptr) {
        parts.push_back(&n->label);
    }
    std::string path;
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
        if (!path.empty()) path += " > ";
        path += **it;
    }
    return path;
}

std::vector<std::string> DirectionTree::qualified_paths() const {
    std::vector<std::string> out;
    out.reserve(selection_.size());
    for (NodeId id : selection_) out.push_back(qualified_path(id));
    return out;
}

void DirectionTree::check_probe(bool allow_reprobe) const {
    if (probe_span_ && !allow_reprobe) {
        throw Error(ErrorCode::AlreadyProbed, "directions were already generated; reprobe to replace");
    }
}

void DirectionTree::check_expand(NodeId id) const {
    const DirectionNode& n = node(id);
    if (!probe_span_) throw Error(ErrorCode::NoActiveSpan, "probe a passage before expanding");
    if (policy_.max_depth && n.depth + 1 > *policy_.max_depth) {
        throw Error(ErrorCode::DepthCapExceeded,
                    "exploration is limited to depth " + std::to_string(*policy_.max_depth));
    }
    const bool expanded = std::any_of(n.children.begin(), n.children.end(), [&](NodeId c) {
        return nodes_.at(c).origin == Origin::generated;
    });
    if (expanded) throw Error(ErrorCode::AlreadyExpanded, "'" + n.label + "' was already expanded");
}

NodeId DirectionTree::add_node(std::optional<NodeId> parent, std::string label, Origin origin) {
    DirectionNode n;
    n.id = NodeId{next_id_++};
    n.label = std::move(label);
    n.origin = origin;
    n.parent = parent;
    if (parent) {
        DirectionNode& p = nodes_.at(*parent);
        n.depth = p.depth + 1;
        p.children.push_back(n.id);
    } else {
        roots_.push_back(n.id);
    }
    const NodeId id = n.id;
    nodes_.emplace(id, std::move(n));
    return id;
}

void DirectionTree::require_unique(std::optional<NodeId> parent,
                                   const std::vector<std::string>& labels) const {
    for (const auto& l : labels) {
        if (auto problem = label_problem(l)) throw Error(ErrorCode::InvalidLabel, *problem);
    }
    if (has_duplicates(labels, sibling_labels(parent))) {
        throw Error(ErrorCode::DuplicateSibling, "a sibling direction already has this label");
    }
}

DirectionTree DirectionTree::with_roots(const std::vector<std::string>& labels, const Span& span,
                                        std::string probe_text, bool allow_reprobe,
                                        std::vector<NodeId>* discarded) const {
    check_probe(allow_reprobe);
    if (labels.size() != policy_.root_count) {
        throw Error(ErrorCode::MalformedDirections,
                    "expected " + std::to_string(policy_.root_count) + " root directions");
    }
    DirectionTree next = *this;
    if (discarded != nullptr) {
        for (const auto& [id, n] : nodes_) discarded->push_back(id);
    }
    next.roots_.clear();
    next.nodes_.clear();
    next.selection_.clear();
    next.require_unique(std::nullopt, labels);
    for (const auto& l : labels) next.add_node(std::nullopt, l, Origin::generated);
    next.probe_span_ = span;
    next.probe_text_ = std::move(probe_text);
    return next;
}

DirectionTree DirectionTree::with_children(NodeId parent,
                                           const std::vector<std::string>& labels) const {
    check_expand(parent);
    if (labels.size() != policy_.sub_count) {
        throw Error(ErrorCode::MalformedDirections,
                    "expected " + std::to_string(policy_.sub_count) + " sub-directions");
    }
    require_unique(parent, labels);
    DirectionTree next = *this;
    for (const auto& l : labels) next.add_node(parent, l, Origin::generated);
    return next;
}

DirectionTree DirectionTree::with_manual(std::optional<NodeId> parent,
                                         std::string_view label) const {
    const std::string trimmed(text::trim(label));
    if (auto problem = label_problem(label)) throw Error(ErrorCode::InvalidLabel, *problem);
    if (parent) {
        const DirectionNode& p = node(*parent);
        if (policy_.max_depth && p.depth + 1 > *policy_.max_depth) {
            throw Error(ErrorCode::DepthCapExceeded,
                        "exploration is limited to depth " + std::to_string(*policy_.max_depth));
        }
    }
    require_unique(parent, {trimmed});
    DirectionTree next = *this;
    next.add_node(parent, trimmed, Origin::manual);
    return next;
}

DirectionTree DirectionTree::with_selected(NodeId id, bool on) const {
    const DirectionNode& n = node(id);
    if (n.selected == on) return *this;
    DirectionTree next = *this;
    if (on) {
        const std::size_t cap = policy_.selection_cap();
        if (cap != 0 && selection_.size() >= cap) {
            throw Error(ErrorCode::SelectionCapExceeded,
                        "only " + std::to_string(cap) + " direction may be selected in this mode");
        }
        next.selection_.push_back(id);
    } else {
        std::erase(next.selection_, id);
    }
    next.nodes_.at(id).selected = on;
    return next;
}

// ---------------------------------------------------------------------------

bool has_duplicates(const std::vector<std::string>& labels,
                    const std::vector<std::string>& existing) {
    std::set<std::string> seen;
    for (const auto& e : existing) seen.insert(text::fold_case(e));
    for (const auto& l : labels) {
        if (!seen.insert(text::fold_case(l)).second) return true;
    }
    return false;
}

std::vector<std::string> disambiguate(const std::vector<std::string>& labels,
                                      const std::vector<std::string>& existing) {
    std::set<std::string> seen;
    for (const auto& e : existing) seen.insert(text::fold_case(e));
    std::vector<std::string> out;
    out.reserve(labels.size());
    for (const auto& l : labels) {
        std::string candidate = l;
        for (std::size_t k = 2; seen.contains(text::fold_case(candidate)); ++k) {
            const std::string suffix = " (" + std::to_string(k) + ")";
            const std::size_t room = kMaxLabelLength - suffix.size();
            std::string base = l;
            if (text::scalar_length(base) > room) base = text::slice(base, 0, room);
            candidate = base + suffix;
        }
        seen.insert(text::fold_case(candidate));
        out.push_back(std::move(candidate));
    }
    return out;
}

DirectionGeneration generate_directions(Provider& provider, const CompiledPrompt& prompt,
                                        std::size_t count,
                                        const std::vector<std::string>& existing_siblings,
                                        std::string_view session_id) {
    DirectionGeneration gen;
    gen.prompt = prompt;

    gen.calls.push_back(provider.generate(prompt, session_id));
    try {
        auto parsed = parse_directions(gen.calls.back().text, count);
        if (!has_duplicates(parsed.labels, existing_siblings)) {
            gen.labels = std::move(parsed.labels);
            return gen;
        }
    } catch (const Error& e) {
        if (e.code() != ErrorCode::MalformedDirections) throw;
    }

    gen.calls.push_back(provider.generate(prompt, session_id));
    auto parsed = parse_directions(gen.calls.back().text, count);
    if (has_duplicates(parsed.labels, existing_siblings)) {
        gen.labels = disambiguate(parsed.labels, existing_siblings);
        gen.suffixed = true;
    } else {
        gen.labels = std::move(parsed.labels);
    }
    return gen;
}

ProbeResult probe(const DirectionTree& tree, const Span& span, std::string_view selected_part,
                  std::string_view entire_story, Provider& provider, std::string_view session_id,
                  bool allow_reprobe, const TemplateSet& templates) {
    tree.check_probe(allow_reprobe);
    const std::size_t count = tree.policy().root_count;
    const auto prompt =
        templates.compile(PromptKind::root_directions, entire_story, selected_part, {}, count);
    auto gen = generate_directions(provider, prompt, count, {}, session_id);
    std::vector<NodeId> discarded;
    auto next = tree.with_roots(gen.labels, span, std::string(selected_part), allow_reprobe,
                                &discarded);
    return {std::move(next), std::move(gen), std::move(discarded)};
}

ExpandResult expand(const DirectionTree& tree, NodeId node, std::string_view entire_story,
                    Provider& provider, std::string_view session_id, const TemplateSet& templates) {
    tree.check_expand(node);
    const std::size_t count = tree.policy().sub_count;
    const auto prompt = templates.compile(PromptKind::sub_directions, entire_story,
                                          tree.probe_text(), {tree.qualified_path(node)}, count);
    auto gen = generate_directions(provider, prompt, count, tree.sibling_labels(node), session_id);
    auto next = tree.with_children(node, gen.labels);
    return {std::move(next), std::move(gen)};
}

}  // namespace reverger
