#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ravu/backends.hpp"
#include "ravu/graph_model.hpp"
#include "ravu/ingestion.hpp"

namespace ravu {

// Node description plus its embedding; one per (entity_id, frame_index).
struct EmbeddingRecord {
    EntityId entity_id = 0;
    FrameIndex frame_index = 0;
    std::string description;
    EmbeddingVector vector;

    friend bool operator==(const EmbeddingRecord&, const EmbeddingRecord&) = default;
};

struct BuildOptions {
    int max_retries = kDefaultMaxRetries;
    int context_frames = 2;
    int workers = 1;
};

struct BuildStats {
    std::size_t frames = 0;
    std::size_t nodes = 0;
    std::size_t edges = 0;
    std::size_t dropped_edge_lines = 0;
    std::size_t events = 0;
    std::size_t event_fallbacks = 0;
};

struct FrameGraphResult {
    std::vector<RelationEdge> edges;
    std::size_t dropped_lines = 0;
};

// Asks the backend for `subject_id|relation|object_id` lines describing the
// frame. Lines that do not parse, self-loops and edges naming entities absent
// from the frame are dropped and counted. Throws MalformedResponse when no
// line parses although two entities share a sentence of the description.
FrameGraphResult build_frame_graph(const FrameRecord& frame,
                                   std::span<const EntityNode> nodes_in_frame, Backend& backend,
                                   const PromptLibrary& prompts, const BuildOptions& options = {},
                                   std::span<const FrameRecord> context = {});

// One sentence over the node's attributes and the edges touching it.
std::string describe_node(const EntityNode& node, std::span<const RelationEdge> edges,
                          Backend& backend, const PromptLibrary& prompts,
                          int max_retries = kDefaultMaxRetries);

// Embeds every node description. Backend errors are rethrown with the
// offending node in the message.
std::vector<EmbeddingRecord> embed_graph(const SpatioTemporalGraph& graph, Backend& backend,
                                         int workers = 1);

struct SegmentResult {
    std::vector<EntityEvent> events;
    bool fallback = false;
};

// Backend output is `start|end|summary` lines. If they violate the event
// invariants after all retries, falls back to one event per contiguous
// appearance run (summary = first node's description) and sets `fallback`.
SegmentResult segment_events(const SpatioTemporalGraph& graph, EntityId entity_id,
                             Backend& backend, const PromptLibrary& prompts,
                             int max_retries = kDefaultMaxRetries);

// Fallback segmentation, also used when a backend cannot be consulted.
std::vector<EntityEvent> contiguous_runs(const SpatioTemporalGraph& graph, EntityId entity_id);

// Frames + associated nodes -> graph with edges and node descriptions.
SpatioTemporalGraph build_graph(const AssociationResult& associated, double fps,
                                Backend& backend, const PromptLibrary& prompts,
                                const BuildOptions& options = {}, BuildStats* stats = nullptr);

// Fills graph.events for every entity.
void add_events(SpatioTemporalGraph& graph, Backend& backend, const PromptLibrary& prompts,
                const BuildOptions& options = {}, BuildStats* stats = nullptr);

// --- persisted intermediates

std::string edges_to_jsonl(const SpatioTemporalGraph& graph);
std::string descriptions_to_jsonl(const SpatioTemporalGraph& graph);

// embeddings.bin: u32 dimension, u32 count, then count*dimension f32, all
// little-endian. embeddings.index.jsonl: {"row", "entity_id", "frame_index",
// "description"} per row.
void write_embeddings(const std::filesystem::path& dir, std::span<const EmbeddingRecord> records);
std::vector<EmbeddingRecord> read_embeddings(const std::filesystem::path& dir);

// Raw matrix I/O behind write_embeddings/read_embeddings.
std::string encode_matrix(std::span<const EmbeddingRecord> records, std::size_t dimension);
std::vector<std::vector<float>> decode_matrix(std::string_view bytes, std::size_t* dimension);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace ravu
