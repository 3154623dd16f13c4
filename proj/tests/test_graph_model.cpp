#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "ravu/errors.hpp"
#include "ravu/graph_model.hpp"

using namespace ravu;

namespace {

Attributes attrs(const std::string& appearance, const std::string& action) {
    return {{"appearance", appearance}, {"action", action}, {"body_pose", "upright"}};
}

// Two entities over four frames; entity 2 skips frame 2.
SpatioTemporalGraph small_graph() {
    SpatioTemporalGraph g;
    for (FrameIndex f = 0; f < 4; ++f) {
        g.frames.push_back({f, static_cast<double>(f), "frame " + std::to_string(f), ""});
        g.nodes.push_back({1, f, attrs("brown dog", f < 2 ? "sitting" : "walking"),
                           {0, 0, 10, 10}, "dog"});
        if (f != 2) g.nodes.push_back({2, f, attrs("red cat", "sleeping"), {20, 0, 30, 10}, "cat"});
    }
    g.edges.push_back({0, 1, "near", 2});
    g.events[1] = {{1, 0, 1, "brown dog sitting"}, {1, 2, 3, "brown dog walking"}};
    g.events[2] = {{2, 0, 1, "red cat sleeping"}, {2, 3, 3, "red cat sleeping"}};
    return g;
}

bool has_rule(const ValidationReport& r, const std::string& rule) {
    return std::any_of(r.begin(), r.end(), [&](const Violation& v) { return v.rule == rule; });
}

}  // namespace

TEST(GraphModel, WellFormedGraphHasNoViolations) {
    EXPECT_TRUE(validate(small_graph()).empty());
}

TEST(GraphModel, DanglingEdgeIsReported) {
    auto g = small_graph();
    g.edges.push_back({2, 1, "near", 2});  // entity 2 absent in frame 2
    EXPECT_TRUE(has_rule(validate(g), "dangling-edge"));
}

TEST(GraphModel, SelfEdgeIsReported) {
    auto g = small_graph();
    g.edges.push_back({0, 1, "near", 1});
    EXPECT_TRUE(has_rule(validate(g), "self-edge"));
}

TEST(GraphModel, EventSpanningAbsenceIsReported) {
    auto g = small_graph();
    g.events[2] = {{2, 0, 3, "red cat sleeping"}};
    EXPECT_TRUE(has_rule(validate(g), "event-gap"));
}

TEST(GraphModel, OverlappingEventsAreReported) {
    auto g = small_graph();
    g.events[1] = {{1, 0, 2, "a"}, {1, 2, 3, "b"}};
    EXPECT_FALSE(validate(g).empty());
}

TEST(GraphModel, UncoveredAppearanceIsReported) {
    auto g = small_graph();
    g.events[1] = {{1, 0, 1, "brown dog sitting"}};
    EXPECT_TRUE(has_rule(validate(g), "event-coverage"));
}

TEST(GraphModel, DuplicateNodeIsReported) {
    auto g = small_graph();
    g.nodes.push_back(g.nodes.front());
    EXPECT_TRUE(has_rule(validate(g), "duplicate-node"));
}

TEST(GraphModel, InvalidBoxIsReported) {
    auto g = small_graph();
    g.nodes[0].box = {5, 5, 5, 9};
    EXPECT_TRUE(has_rule(validate(g), "bad-box"));
}

TEST(GraphModel, MissingAttributeIsReported) {
    auto g = small_graph();
    g.nodes[0].attributes.erase("body_pose");
    EXPECT_TRUE(has_rule(validate(g), "missing-attribute"));
}

TEST(GraphModel, NodeOutsideFrameRangeIsReported) {
    auto g = small_graph();
    g.nodes.push_back({3, 9, attrs("x", "y"), {0, 0, 1, 1}, std::nullopt});
    EXPECT_TRUE(has_rule(validate(g), "node-frame-range"));
}

TEST(GraphModel, EventForUnknownEntityIsReported) {
    auto g = small_graph();
    g.events[7] = {{7, 0, 0, "ghost"}};
    EXPECT_TRUE(has_rule(validate(g), "event-entity-unknown"));
}

TEST(GraphModel, SerializeRoundTrips) {
    const auto g = small_graph();
    const auto doc = serialize(g);
    auto back = deserialize(doc);
    auto canon = g;
    canonicalize(canon);
    EXPECT_EQ(back, canon);
    EXPECT_EQ(serialize(back), doc);
}

TEST(GraphModel, SerializationIgnoresInputOrder) {
    auto g = small_graph();
    auto shuffled = g;
    std::mt19937_64 rng(7);
    std::shuffle(shuffled.nodes.begin(), shuffled.nodes.end(), rng);
    std::shuffle(shuffled.frames.begin(), shuffled.frames.end(), rng);
    EXPECT_EQ(serialize(g), serialize(shuffled));
}

TEST(GraphModel, MissingTopLevelKeyNamesField) {
    try {
        deserialize(R"({"fps": 1, "nodes": [], "edges": [], "events": []})");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.field(), "frames");
    }
}

TEST(GraphModel, NotJsonIsParseError) {
    EXPECT_THROW(deserialize("{not json"), ParseError);
}

TEST(GraphModel, EntityTimelineIsFrameOrdered) {
    const auto t = entity_timeline(small_graph(), 2);
    ASSERT_EQ(t.size(), 3u);
    EXPECT_EQ(t[0].frame_index, 0);
    EXPECT_EQ(t[1].frame_index, 1);
    EXPECT_EQ(t[2].frame_index, 3);
}

TEST(GraphModel, UnknownEntityTimelineThrows) {
    EXPECT_THROW(entity_timeline(small_graph(), 42), NotFound);
}

TEST(GraphModel, NodeEdgesListsBothDirections) {
    const auto g = small_graph();
    EXPECT_EQ(node_edges(g, 1, 0).size(), 1u);
    EXPECT_EQ(node_edges(g, 2, 0).size(), 1u);
    EXPECT_TRUE(node_edges(g, 1, 1).empty());
    EXPECT_THROW(node_edges(g, 2, 2), NotFound);
}

TEST(GraphModel, AppearanceFramesAndEntityIds) {
    const auto g = small_graph();
    EXPECT_EQ(entity_ids(g), (std::vector<EntityId>{1, 2}));
    EXPECT_EQ(appearance_frames(g, 2), (std::vector<FrameIndex>{0, 1, 3}));
    EXPECT_NE(find_node(g, 1, 3), nullptr);
    EXPECT_EQ(find_node(g, 2, 2), nullptr);
}
