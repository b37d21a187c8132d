#pragma once

#include "reverger/document.hpp"
#include "reverger/gateway.hpp"
#include "reverger/prompts.hpp"

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace reverger {

struct NodeId {
    std::uint64_t value = 0;

    [[nodiscard]] std::string str() const { return "n" + std::to_string(value); }
    static std::optional<NodeId> parse(std::string_view s);

    auto operator<=>(const NodeId&) const = default;
};

enum class Origin { generated, manual };

std::string_view to_string(Origin origin) noexcept;

struct DirectionNode {
    NodeId id;
    std::string label;
    Origin origin = Origin::generated;
    std::optional<NodeId> parent;
    std::vector<NodeId> children;
    std::size_t depth = 1;  // roots are depth 1
    bool selected = false;

    bool operator==(const DirectionNode&) const = default;
};

enum class ExplorationMode { full, baseline };

std::string_view to_string(ExplorationMode mode) noexcept;
std::optional<ExplorationMode> exploration_mode_from_string(std::string_view s) noexcept;

struct ExplorationPolicy {
    ExplorationMode mode = ExplorationMode::full;
    std::size_t root_count = 8;
    std::size_t sub_count = 4;
    std::optional<std::size_t> max_depth;  // absent: unlimited

    static ExplorationPolicy full() { return {}; }
    // One expansion layer below the roots, one selected direction.
    static ExplorationPolicy baseline() { return {ExplorationMode::baseline, 8, 4, 2}; }

    // 0 means unlimited.
    [[nodiscard]] std::size_t selection_cap() const noexcept {
        return mode == ExplorationMode::baseline ? 1 : 0;
    }

    // Throws InvalidConfig.
    void validate() const;

    bool operator==(const ExplorationPolicy&) const = default;
};

// The shopping cart: a forest of direction labels rooted at one probe of the
// highlighted passage. Values are immutable; mutators return new trees.
class DirectionTree {
public:
    explicit DirectionTree(ExplorationPolicy policy = ExplorationPolicy::full());

    // Rebuilds a persisted tree; throws CorruptLog when the parts violate
    // reachability, depth bookkeeping or the policy.
    static DirectionTree restore(ExplorationPolicy policy, std::vector<NodeId> roots,
                                 std::vector<DirectionNode> nodes, std::vector<NodeId> selection,
                                 std::optional<Span> probe_span, std::string probe_text,
                                 std::uint64_t next_id);

    [[nodiscard]] const ExplorationPolicy& policy() const noexcept { return policy_; }
    [[nodiscard]] const std::vector<NodeId>& roots() const noexcept { return roots_; }
    [[nodiscard]] const std::map<NodeId, DirectionNode>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] const std::vector<NodeId>& selection() const noexcept { return selection_; }
    [[nodiscard]] const std::optional<Span>& probe_span() const noexcept { return probe_span_; }
    [[nodiscard]] const std::string& probe_text() const noexcept { return probe_text_; }
    [[nodiscard]] std::uint64_t next_id() const noexcept { return next_id_; }

    [[nodiscard]] const DirectionNode& node(NodeId id) const;  // throws UnknownNode
    [[nodiscard]] const DirectionNode* find(NodeId id) const noexcept;

    // Labels of the children of `parent`, or of the roots when absent.
    [[nodiscard]] std::vector<std::string> sibling_labels(std::optional<NodeId> parent) const;

    // "root > ... > node"
    [[nodiscard]] std::string qualified_path(NodeId id) const;
    // One path per selected node, in selection order.
    [[nodiscard]] std::vector<std::string> qualified_paths() const;

    // Throws AlreadyProbed after an earlier probe unless reprobe is allowed.
    void check_probe(bool allow_reprobe) const;
    // Throws UnknownNode, NoActiveSpan (nothing probed yet), DepthCapExceeded
    // or AlreadyExpanded.
    void check_expand(NodeId id) const;

    // Installs generated roots, discarding any previous forest. The ids of
    // discarded nodes are appended to *discarded when given.
    [[nodiscard]] DirectionTree with_roots(const std::vector<std::string>& labels, const Span& span,
                                           std::string probe_text, bool allow_reprobe,
                                           std::vector<NodeId>* discarded = nullptr) const;
    [[nodiscard]] DirectionTree with_children(NodeId parent,
                                              const std::vector<std::string>& labels) const;
    [[nodiscard]] DirectionTree with_manual(std::optional<NodeId> parent,
                                            std::string_view label) const;
    [[nodiscard]] DirectionTree with_selected(NodeId id, bool on) const;

    bool operator==(const DirectionTree&) const = default;

private:
    NodeId add_node(std::optional<NodeId> parent, std::string label, Origin origin);
    void require_unique(std::optional<NodeId> parent, const std::vector<std::string>& labels) const;

    ExplorationPolicy policy_;
    std::vector<NodeId> roots_;
    std::map<NodeId, DirectionNode> nodes_;
    std::vector<NodeId> selection_;
    std::optional<Span> probe_span_;
    std::string probe_text_;
    std::uint64_t next_id_ = 1;
};

// Makes labels unique case-insensitively against each other and `existing`
// by suffixing later duplicates: "theme" -> "theme (2)".
std::vector<std::string> disambiguate(const std::vector<std::string>& labels,
                                      const std::vector<std::string>& existing);

// True when labels repeat among themselves or against `existing`, ignoring case.
bool has_duplicates(const std::vector<std::string>& labels,
                    const std::vector<std::string>& existing);

struct DirectionGeneration {
    std::vector<std::string> labels;
    CompiledPrompt prompt;
    std::vector<GenerationResult> calls;  // one per provider call, retry included
    bool suffixed = false;
};

// Calls the provider for `count` labels. A malformed or duplicated answer is
// retried once; duplicates surviving the retry are suffix-disambiguated.
DirectionGeneration generate_directions(Provider& provider, const CompiledPrompt& prompt,
                                        std::size_t count,
                                        const std::vector<std::string>& existing_siblings,
                                        std::string_view session_id);

struct ProbeResult {
    DirectionTree tree;
    DirectionGeneration generation;
    std::vector<NodeId> discarded;
};

ProbeResult probe(const DirectionTree& tree, const Span& span, std::string_view selected_part,
                  std::string_view entire_story, Provider& provider, std::string_view session_id,
                  bool allow_reprobe = false,
                  const TemplateSet& templates = TemplateSet::builtin());

struct ExpandResult {
    DirectionTree tree;
    DirectionGeneration generation;
};

// Context for the sub-direction prompt is the node's qualified path plus the
// passage that was probed.
ExpandResult expand(const DirectionTree& tree, NodeId node, std::string_view entire_story,
                    Provider& provider, std::string_view session_id,
                    const TemplateSet& templates = TemplateSet::builtin());

}  // namespace reverger
