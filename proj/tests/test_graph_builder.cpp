#include <gtest/gtest.h>

#include <filesystem>

#include "ravu/errors.hpp"
#include "ravu/graph_builder.hpp"
#include "ravu/harness.hpp"
#include "support/generators.hpp"
#include "support/scripted_backend.hpp"

using namespace ravu;
using ravu::testing::ScriptedBackend;

namespace {

EntityNode node(EntityId e, FrameIndex f, std::string action = "walking",
                std::string appearance = "brown dog") {
    return {e, f, {{"appearance", appearance}, {"action", action}, {"body_pose", ""}},
            {0, 0, 1, 1}, std::nullopt};
}

SpatioTemporalGraph timeline_graph(EntityId e, std::vector<std::pair<FrameIndex, std::string>> at) {
    SpatioTemporalGraph g;
    FrameIndex last = 0;
    for (const auto& [f, _] : at) last = std::max(last, f);
    for (FrameIndex f = 0; f <= last; ++f) g.frames.push_back({f, static_cast<double>(f), "", ""});
    for (const auto& [f, action] : at) g.nodes.push_back(node(e, f, action));
    return g;
}

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("ravu_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

}  // namespace

// --- frame graphs

TEST(FrameGraph, DropsBadLinesSelfLoopsAndStrangers) {
    ScriptedBackend b;
    b.script(Role::frame_graph, {"1|is near|2\n2|2\nx|holds|1\n1|looks at|1\n1|meets|9\n"
                                 "1|is near|2\n2|follows|1\nNONE"});
    const FrameRecord f{3, 3, "[E1] is near [E2].", ""};
    const std::vector<EntityNode> nodes = {node(1, 3), node(2, 3)};
    const auto r = build_frame_graph(f, nodes, b, PromptLibrary{});
    EXPECT_EQ(r.edges, (std::vector<RelationEdge>{{3, 1, "is near", 2}, {3, 2, "follows", 1}}));
    EXPECT_EQ(r.dropped_lines, 4u);
}

TEST(FrameGraph, SingleEntityFrameSkipsBackend) {
    ScriptedBackend b;
    const std::vector<EntityNode> nodes = {node(1, 0)};
    const auto r = build_frame_graph({0, 0, "[E1] runs.", ""}, nodes, b, PromptLibrary{});
    EXPECT_TRUE(r.edges.empty());
    EXPECT_EQ(b.total_calls(), 0u);
}

TEST(FrameGraph, NoParsableLineWhenEntitiesShareSentenceIsMalformed) {
    ScriptedBackend b;
    b.always(Role::frame_graph, "nothing useful");
    const std::vector<EntityNode> nodes = {node(1, 0), node(2, 0)};
    EXPECT_THROW(build_frame_graph({0, 0, "[E1] chases [E2].", ""}, nodes, b, PromptLibrary{},
                                   BuildOptions{2, 0, 1}),
                 MalformedResponse);
    EXPECT_EQ(b.calls(Role::frame_graph), 2u);

    // Entities in separate sentences: an empty answer is fine.
    const auto r = build_frame_graph({0, 0, "[E1] runs. [E2] sits.", ""}, nodes, b,
                                     PromptLibrary{});
    EXPECT_TRUE(r.edges.empty());
}

TEST(DescribeNode, TrimsAndJoinsLines) {
    ScriptedBackend b;
    b.script(Role::node_description, {"  ", " a brown dog\nrunning "});
    EXPECT_EQ(describe_node(node(1, 0), {}, b, PromptLibrary{}, 2), "a brown dog running");
}

TEST(DescribeNode, MockTemplate) {
    MockBackend m;
    const std::vector<RelationEdge> edges = {{0, 1, "is near", 2}, {0, 3, "watches", 1}};
    EXPECT_EQ(describe_node(node(1, 0), edges, m, PromptLibrary{}),
              "entity 1: brown dog; walking; relations: is near entity 2, entity 3 watches it");
}

// --- events

TEST(Segment, MockSplitsOnActionChangeAndGap) {
    MockBackend m;
    const auto g = timeline_graph(4, {{0, "walking"}, {1, "walking"}, {2, "sitting"}, {5, "sitting"}});
    const auto r = segment_events(g, 4, m, PromptLibrary{});
    EXPECT_FALSE(r.fallback);
    EXPECT_EQ(r.events, (std::vector<EntityEvent>{{4, 0, 1, "brown dog walking"},
                                                  {4, 2, 2, "brown dog sitting"},
                                                  {4, 5, 5, "brown dog sitting"}}));
}

TEST(Segment, InvalidOutputFallsBackToContiguousRuns) {
    const auto g = timeline_graph(4, {{0, "a"}, {1, "a"}, {2, "b"}, {5, "b"}});
    const std::vector<std::string> bad = {
        "0|5|spans a gap",
        "0|1|x\n1|2|overlap\n5|5|y",
        "0|1|x",  // misses frames
        "2|0|reversed",
        "0|1|\n2|2|x\n5|5|y",
        "no pipes here",
    };
    for (const auto& reply : bad) {
        ScriptedBackend b;
        b.always(Role::event_segmentation, reply);
        const auto r = segment_events(g, 4, b, PromptLibrary{}, 2);
        EXPECT_TRUE(r.fallback) << reply;
        EXPECT_EQ(r.events, contiguous_runs(g, 4)) << reply;
        EXPECT_EQ(b.calls(Role::event_segmentation), 2u);
    }
}

TEST(Segment, RetryCanRecover) {
    const auto g = timeline_graph(4, {{0, "a"}, {1, "a"}});
    ScriptedBackend b;
    b.script(Role::event_segmentation, {"garbage", "0|1|dog walks"});
    const auto r = segment_events(g, 4, b, PromptLibrary{}, 2);
    EXPECT_FALSE(r.fallback);
    EXPECT_EQ(r.events, (std::vector<EntityEvent>{{4, 0, 1, "dog walks"}}));
}

TEST(ContiguousRuns, OneEventPerRun) {
    auto g = timeline_graph(2, {{1, "a"}, {2, "a"}, {4, "a"}, {6, "a"}, {7, "a"}});
    g.nodes[0].description = "first";
    const auto runs = contiguous_runs(g, 2);
    ASSERT_EQ(runs.size(), 3u);
    EXPECT_EQ(runs[0], (EntityEvent{2, 1, 2, "first"}));
    EXPECT_EQ(runs[1].start_frame, 4);
    EXPECT_EQ(runs[1].summary, "entity 2");
    EXPECT_EQ(runs[2].end_frame, 7);
    EXPECT_THROW(contiguous_runs(g, 99), NotFound);
}

TEST(ContiguousRuns, AlwaysSatisfyEventInvariants) {
    gen::Rng rng(41);
    for (int round = 0; round < 100; ++round) {
        std::vector<std::pair<FrameIndex, std::string>> at;
        for (FrameIndex f = 0; f < 40; ++f) {
            if (gen::below(rng, 3) != 0) at.emplace_back(f, "a");
        }
        if (at.empty()) at.emplace_back(0, "a");
        auto g = timeline_graph(1, at);
        g.events[1] = contiguous_runs(g, 1);
        EXPECT_TRUE(validate(g).empty()) << "round " << round;
    }
}

// --- build on a synthetic world

TEST(BuildGraph, RecoversScriptedWorld) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto w = synth_world({seed, 40, 4, 4});
        MockBackend m;
        BuildStats stats;
        const auto mem = build_memory(w.observations, w.tracklets, m, PromptLibrary{}, Config{}, &stats);
        EXPECT_TRUE(validate(mem.graph).empty());
        EXPECT_EQ(stats.event_fallbacks, 0u);
        EXPECT_EQ(stats.dropped_edge_lines, 0u);

        auto built = mem.graph;
        for (auto& n : built.nodes) {
            EXPECT_TRUE(n.description.has_value());
            n.description.reset();
        }
        EXPECT_EQ(built.frames, w.truth.frames) << seed;
        EXPECT_EQ(built.nodes, w.truth.nodes) << seed;
        EXPECT_EQ(built.edges, w.truth.edges) << seed;
        EXPECT_EQ(built.events, w.truth.events) << seed;
        EXPECT_EQ(mem.index.size(), mem.graph.nodes.size());
    }
}

TEST(BuildGraph, WorkerCountDoesNotChangeResult) {
    const auto w = synth_world({7, 30, 5, 2});
    MockBackend m;
    Config one, four;
    four.workers = 4;
    const auto a = build_memory(w.observations, w.tracklets, m, PromptLibrary{}, one);
    const auto b = build_memory(w.observations, w.tracklets, m, PromptLibrary{}, four);
    EXPECT_EQ(serialize(a.graph), serialize(b.graph));
    EXPECT_TRUE(std::ranges::equal(a.index.records(), b.index.records()));
}

TEST(EmbedGraph, BackendErrorNamesNode) {
    class Failing : public Backend {
    public:
        std::string generate(const PromptBundle&) override { return ""; }
        EmbeddingVector embed(std::string_view) override { throw Timeout("slow"); }
        std::size_t dimension() const override { return 4; }
    } failing;
    SpatioTemporalGraph g = timeline_graph(2, {{0, "a"}});
    g.nodes[0].description = "entity 2: x";
    try {
        embed_graph(g, failing);
        FAIL();
    } catch (const Timeout& e) {
        EXPECT_NE(std::string(e.what()).find("entity 2, frame 0"), std::string::npos);
    }
}

// --- persisted artifacts

TEST(Embeddings, MatrixRoundTripIsBitExact) {
    gen::Rng rng(42);
    const auto records = gen::index_records(rng, 30, 12);
    std::size_t dim = 0;
    const auto rows = decode_matrix(encode_matrix(records, 12), &dim);
    EXPECT_EQ(dim, 12u);
    ASSERT_EQ(rows.size(), records.size());
    for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(rows[i], records[i].vector.values);
}

TEST(Embeddings, HeaderIsLittleEndian) {
    const std::vector<EmbeddingRecord> r = {{1, 0, "", {{1.0f, -2.0f}}}};
    const auto bytes = encode_matrix(r, 2);
    ASSERT_EQ(bytes.size(), 16u);
    EXPECT_EQ(bytes.substr(0, 8), std::string("\x02\0\0\0\x01\0\0\0", 8));
    EXPECT_EQ(bytes.substr(8, 4), std::string("\0\0\x80\x3f", 4));
}

TEST(Embeddings, CorruptMatrixIsParseError) {
    const std::vector<EmbeddingRecord> r = {{1, 0, "", {{1.0f, -2.0f}}}};
    auto bytes = encode_matrix(r, 2);
    bytes.pop_back();
    EXPECT_THROW(decode_matrix(bytes, nullptr), ParseError);
    EXPECT_THROW(decode_matrix("abc", nullptr), ParseError);
    EXPECT_THROW(encode_matrix(r, 3), std::invalid_argument);
}

TEST(Embeddings, DirectoryRoundTrip) {
    gen::Rng rng(43);
    const auto records = gen::index_records(rng, 25, 6);
    const auto dir = scratch("emb");
    write_embeddings(dir, records);
    EXPECT_EQ(read_embeddings(dir), records);
    std::filesystem::remove_all(dir);
}

TEST(Memory, SaveLoadRoundTrip) {
    const auto w = synth_world({5, 20, 3, 2});
    MockBackend m;
    const auto mem = build_memory(w.observations, w.tracklets, m, PromptLibrary{}, Config{});
    const auto dir = scratch("mem");
    save_memory(dir, mem);
    const auto back = load_memory(dir);
    EXPECT_EQ(back.graph, mem.graph);
    EXPECT_TRUE(std::ranges::equal(back.index.records(), mem.index.records()));
    EXPECT_EQ(read_file(dir / "edges.jsonl"), edges_to_jsonl(mem.graph));
    EXPECT_THROW(load_memory(dir / "missing"), NotFound);
    std::filesystem::remove_all(dir);
}
