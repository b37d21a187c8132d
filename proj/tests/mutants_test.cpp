#include "support.hpp"

#include "reverger/mutants.hpp"

#include <doctest.h>

using namespace reverger;
using testing::error_code_of;
using testing::ScriptedProvider;

namespace {

struct Setup {
    StoryDocument doc = StoryDocument::create("Before. You're just a servant. After.").with_highlight({0, 8, 29});
    DirectionTree tree;

    Setup() {
        tree = DirectionTree()
                   .with_roots({"a", "b", "c", "d", "e", "f", "g", "Tone"}, *doc.highlight(), doc.selected_part(), false)
                   .with_manual(NodeId{8}, "mocking");
        tree = tree.with_selected(NodeId{9}, true);
    }
};

}  // namespace

TEST_SUITE("mutants") {

TEST_CASE("a draft becomes the next tracked variation") {
    Setup s;
    ScriptedProvider p({"  **Look at the little maid**.\n"});
    auto draft = synthesize_draft(s.doc, s.tree, p, "s");
    CHECK(draft.direction_paths == std::vector<std::string>{"Tone > mocking"});
    CHECK(draft.parsed.text == "Look at the little maid.");
    CHECK(draft.parsed.emphasized == std::vector<TextRange>{{0, 23}});
    CHECK(draft.validation.clean());
    CHECK(p.prompts.at(0).text.find("- Tone > mocking") != std::string::npos);

    MutantTracker tracker;
    auto v = make_variation(tracker, draft, s.doc, 77);
    CHECK(v.variation_id == "v1");
    CHECK(v.label == "M1");
    CHECK(v.source_span == *s.doc.highlight());
    CHECK(v.created_at == 77);
    tracker = tracker.with_variation(v);
    CHECK(tracker.active() == "v1");
    CHECK(tracker.next_label() == "M2");
}

TEST_CASE("synthesis preconditions") {
    Setup s;
    ScriptedProvider p({"x"});
    CHECK(error_code_of([&] { (void)synthesize_draft(s.doc, s.tree.with_selected(NodeId{9}, false), p, "s"); }) ==
          ErrorCode::NoSelection);
    CHECK(error_code_of([&] { (void)synthesize_draft(s.doc.without_highlight(), s.tree, p, "s"); }) ==
          ErrorCode::NoActiveSpan);
    ScriptedProvider blank({" ** ** "});
    CHECK(error_code_of([&] { (void)synthesize_draft(s.doc, s.tree, blank, "s"); }) == ErrorCode::EmptyVariation);
}

TEST_CASE("accepting splices the active variation") {
    Setup s;
    ScriptedProvider p({"**Look at the little maid**", "**Back to the cinders**"});
    MutantTracker tracker;
    tracker = tracker.with_variation(make_variation(tracker, synthesize_draft(s.doc, s.tree, p, "s"), s.doc, 1));
    tracker = tracker.with_variation(make_variation(tracker, synthesize_draft(s.doc, s.tree, p, "s"), s.doc, 2));
    tracker = tracker.with_active("v1");
    auto [doc, after] = accept_active(s.doc, tracker);
    CHECK(doc.text() == "Before. Look at the little maid. After.");
    CHECK_FALSE(after.active());
    CHECK(after.entries().size() == 2);
    CHECK(error_code_of([&] { (void)accept_active(doc, after); }) == ErrorCode::NoActiveVariation);
    // the second variation was made for the old revision
    CHECK(error_code_of([&] { (void)accept_active(doc, after.with_active("v2")); }) == ErrorCode::StaleVariation);
    CHECK(error_code_of([&] { (void)accept_active(s.doc.with_highlight({0, 0, 6}), tracker); }) ==
          ErrorCode::StaleVariation);
}

TEST_CASE("tracker sequence is enforced") {
    MutantTracker t;
    Variation v;
    v.variation_id = "v2";
    v.label = "M2";
    v.direction_paths = {"x"};
    CHECK(error_code_of([&] { (void)t.with_variation(v); }) == ErrorCode::CorruptLog);
    v.variation_id = "v1";
    v.label = "M1";
    v.direction_paths.clear();
    CHECK(error_code_of([&] { (void)t.with_variation(v); }) == ErrorCode::NoSelection);
    CHECK(error_code_of([&] { (void)t.with_active("v1"); }) == ErrorCode::UnknownVariation);
}

}  // TEST_SUITE
